#ifndef QHYDRO_ERRORS_HPP
#define QHYDRO_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qhydro {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A size guard was hit; `required_bytes` is the estimated memory the request needs.
class ResourceError : public Error {
public:
    ResourceError(const std::string& what, std::size_t required_bytes)
        : Error(what), required_bytes(required_bytes) {}
    std::size_t required_bytes;
};

/// Invalid configuration. `key` is a JSON-pointer-like path to the offending entry.
class ConfigError : public Error {
public:
    ConfigError(std::string key_path, const std::string& what)
        : Error(key_path.empty() ? what : key_path + ": " + what), key(std::move(key_path)) {}
    std::string key;
};

/// Input outside the admissible domain of a map (e.g. a non-physical conserved vector).
class DomainError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : Error(what), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

class CflError : public Error {
public:
    using Error::Error;
};

/// A grid cell left the admissible region of the equation of state.
class InadmissibleCell : public DomainError {
public:
    InadmissibleCell(const std::string& what, std::size_t cell) : DomainError(what), cell(cell) {}
    std::size_t cell;
};

} // namespace qhydro

#endif
