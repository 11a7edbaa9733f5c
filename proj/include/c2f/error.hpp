#pragma once

#include <stdexcept>
#include <string>

namespace c2f {

// Bad input, configuration or file contents. The CLI maps this to exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Failure while doing otherwise valid work (I/O, divergence). Exit code 2.
class RuntimeFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace c2f
