// exception types shared by the slpd modules

#pragma once

#include <stdexcept>
#include <string>

namespace slpd {

// Invalid input: a structure function or block that cannot carry a unitary
// compact representation, a malformed parameter, etc.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to meet its contract (non-convergence, no root).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration could not be parsed or validated.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace slpd
