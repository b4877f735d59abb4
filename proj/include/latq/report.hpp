#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "latq/types.hpp"

namespace latq {

// Shortest representation that round-trips the double exactly.
std::string format_double(double v);

// FNV-1a 64-bit hash of a canonical string, as 16 hex digits.
std::string config_hash(const std::string& canonical);

// Ordered key/value report. Serializes as key=value lines (arrays
// comma-joined) and as a JSON object with the same key order, so equal
// reports are byte-equal.
class Report {
 public:
  void add(const std::string& key, const std::string& value);
  void add(const std::string& key, const char* value);
  void add(const std::string& key, double value);
  void add(const std::string& key, std::int64_t value);
  void add(const std::string& key, std::uint64_t value);
  void add(const std::string& key, int value);
  void add(const std::string& key, bool value);
  void add(const std::string& key, const Vector& values);
  void add(const std::string& key, const std::vector<std::int64_t>& values);

  std::string to_text() const;  // LF line endings
  std::string to_json() const;

 private:
  using Value = std::variant<std::string, double, std::int64_t, bool,
                             std::vector<double>, std::vector<std::int64_t>>;
  std::vector<std::pair<std::string, Value>> entries_;
};

}  // namespace latq
