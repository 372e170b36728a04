#pragma once

#include <stdexcept>
#include <string>

namespace rfsim {

// Invalid parameters, configuration problems, preconditions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Solver breakdowns: singular systems, truncation, non-convergence.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rfsim
