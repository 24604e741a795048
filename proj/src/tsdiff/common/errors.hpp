#pragma once

#include <stdexcept>
#include <string>

namespace tsdiff {

// Error categories map 1:1 onto CLI exit codes (see tools/).
struct ConfigError : std::runtime_error {  // exit code 2
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {  // exit code 3
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {  // exit code 4
  using std::runtime_error::runtime_error;
};
struct CheckpointError : std::runtime_error {  // exit code 5
  using std::runtime_error::runtime_error;
};

}  // namespace tsdiff
