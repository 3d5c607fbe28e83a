#pragma once

#include <stdexcept>
#include <string>

namespace clustersim {

/// Raised for invalid user-facing configuration: malformed instructions,
/// unsupported problem shapes, layouts that do not fit the TCDM.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the simulator's own bookkeeping is violated (e.g. a grant
/// delivered to a stream that never issued the request). Always a bug.
class IntegrityFault : public std::logic_error {
public:
    explicit IntegrityFault(const std::string& what) : std::logic_error(what) {}
};

}  // namespace clustersim
