#pragma once

namespace memsflow {

// Model constants. Construction through make() enforces the admissible ranges:
// eps > 0, beta > 0, tau >= 0, -1 < sigma < 1, lambda >= 0.
// lambda = 0 is accepted so the uncoupled plate can be run as a reference.
struct Parameters {
    double eps = 1.0;
    double beta = 1.0;
    double tau = 0.0;
    double sigma = 0.3;
    double lambda = 1.0;

    static Parameters make(double eps, double beta, double tau, double sigma, double lambda);
    void validate() const;
    Parameters with_lambda(double value) const;
};

}  // namespace memsflow
