#pragma once

#include <stdexcept>
#include <string>

namespace sqkd {

// Invalid user-facing configuration: out-of-range protocol parameters,
// non-unitary attack matrices, malformed config documents. Distinct from a
// protocol abort (which is a successful run outcome) and from logic_error
// (internal consistency failures).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sqkd
