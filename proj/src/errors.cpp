#include "memsflow/errors.hpp"

namespace memsflow {

SolverDivergence::SolverDivergence(const std::string& what, double time)
    : Error(what), time_(time) {}

}  // namespace memsflow
