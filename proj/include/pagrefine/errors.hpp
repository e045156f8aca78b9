#pragma once

#include <stdexcept>
#include <string>

namespace pagrefine {

/// Bad input or validation failure. The CLI maps this to exit code 2.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite loss or other numerical breakdown. CLI exit code 3.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pagrefine
