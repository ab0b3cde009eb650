#pragma once

#include <stdexcept>
#include <string>

namespace ccsim {

// User-facing configuration problem (maps to CLI exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ccsim
