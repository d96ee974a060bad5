#pragma once

#include <stdexcept>
#include <string>

namespace evcp {

/// Bad input data, bad configuration or a violated precondition.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation produced a non-finite value or failed to converge.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace evcp
