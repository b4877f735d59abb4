#pragma once

#include <stdexcept>

namespace latq {

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RankDeficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IncompatibleOptions : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SearchSpaceTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MalformedFile : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace latq
