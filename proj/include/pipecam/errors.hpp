#pragma once

#include <stdexcept>
#include <string>

namespace pipecam {

// Error taxonomy mirrors the CLI exit-code contract:
//   std::invalid_argument -> 2 (usage / bad parameters)
//   IoError               -> 3
//   FormatError           -> 4 (bad magic, truncation; message carries offsets)
//   SplitGuardError       -> 5 (train/test hygiene violation)

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SplitGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite value produced inside the network engine.
struct EngineFault : std::runtime_error {
  int layer_index;
  EngineFault(int layer, const std::string& what)
      : std::runtime_error(what), layer_index(layer) {}
};

}  // namespace pipecam
