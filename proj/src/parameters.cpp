#include "memsflow/parameters.hpp"

#include "memsflow/errors.hpp"

#include <cmath>
#include <sstream>

namespace memsflow {
namespace {

void require(bool ok, const char* name, double value, const char* range) {
    if (ok) return;
    std::ostringstream os;
    os << "parameter " << name << " = " << value << " outside admissible range " << range;
    throw InvalidParameter(os.str());
}

}  // namespace

Parameters Parameters::make(double eps, double beta, double tau, double sigma, double lambda) {
    Parameters p{eps, beta, tau, sigma, lambda};
    p.validate();
    return p;
}

void Parameters::validate() const {
    require(std::isfinite(eps) && eps > 0.0, "eps", eps, "(0, inf)");
    require(std::isfinite(beta) && beta > 0.0, "beta", beta, "(0, inf)");
    require(std::isfinite(tau) && tau >= 0.0, "tau", tau, "[0, inf)");
    require(std::isfinite(sigma) && sigma > -1.0 && sigma < 1.0, "sigma", sigma, "(-1, 1)");
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda", lambda, "[0, inf)");
}

Parameters Parameters::with_lambda(double value) const {
    Parameters p = *this;
    p.lambda = value;
    p.validate();
    return p;
}

}  // namespace memsflow
