#pragma once

#include <stdexcept>
#include <string>

namespace memsflow {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

// Raised when a deformation touches or crosses the ground plate (min v <= -1).
class NonAdmissible : public Error {
public:
    using Error::Error;
};

class SolverDivergence : public Error {
public:
    SolverDivergence(const std::string& what, double time = 0.0);
    double time() const noexcept { return time_; }

private:
    double time_;
};

class OutOfDomain : public Error {
public:
    using Error::Error;
};

class InvalidBracket : public Error {
public:
    using Error::Error;
};

class NonMonotoneClassification : public Error {
public:
    using Error::Error;
};

}  // namespace memsflow
