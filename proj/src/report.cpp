#include "latq/report.hpp"

#include <cinttypes>
#include <cstdio>

#include "json.hpp"

namespace latq {

std::string format_double(double v) {
  char buf[64];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    double parsed = 0.0;
    std::sscanf(buf, "%lf", &parsed);
    if (parsed == v) break;
  }
  return buf;
}

std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
  return buf;
}

void Report::add(const std::string& key, const std::string& value) {
  entries_.emplace_back(key, value);
}

void Report::add(const std::string& key, const char* value) {
  entries_.emplace_back(key, std::string(value));
}

void Report::add(const std::string& key, double value) {
  entries_.emplace_back(key, value);
}

void Report::add(const std::string& key, std::int64_t value) {
  entries_.emplace_back(key, value);
}

void Report::add(const std::string& key, std::uint64_t value) {
  entries_.emplace_back(key, static_cast<std::int64_t>(value));
}

void Report::add(const std::string& key, int value) {
  entries_.emplace_back(key, static_cast<std::int64_t>(value));
}

void Report::add(const std::string& key, bool value) {
  entries_.emplace_back(key, value);
}

void Report::add(const std::string& key, const Vector& values) {
  std::vector<double> v(values.data(), values.data() + values.size());
  entries_.emplace_back(key, std::move(v));
}

void Report::add(const std::string& key,
                 const std::vector<std::int64_t>& values) {
  entries_.emplace_back(key, values);
}

std::string Report::to_text() const {
  std::string out;
  for (const auto& [key, value] : entries_) {
    out += key;
    out += '=';
    std::visit(
        [&out](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::string>) {
            out += v;
          } else if constexpr (std::is_same_v<T, double>) {
            out += format_double(v);
          } else if constexpr (std::is_same_v<T, std::int64_t>) {
            out += std::to_string(v);
          } else if constexpr (std::is_same_v<T, bool>) {
            out += v ? "true" : "false";
          } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            for (size_t i = 0; i < v.size(); ++i) {
              if (i) out += ',';
              out += format_double(v[i]);
            }
          } else {
            for (size_t i = 0; i < v.size(); ++i) {
              if (i) out += ',';
              out += std::to_string(v[i]);
            }
          }
        },
        value);
    out += '\n';
  }
  return out;
}

std::string Report::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [key, value] : entries_) {
    std::visit([&](const auto& v) { j[key] = v; }, value);
  }
  return j.dump(2) + "\n";
}

}  // namespace latq
