#pragma once

#include "memsflow/evolution.hpp"

#include <optional>
#include <vector>

namespace memsflow {

struct SweepSettings {
    double lambda_lo = 0.1;
    double lambda_hi = 50.0;
    double tol = 0.5;
    // Optional concurrent scan over this many interior lambdas before bisection.
    int prescan_points = 0;
    int threads = 1;
    void validate() const;
};

struct SweepEntry {
    double lambda = 0.0;
    Status status = Status::ReachedHorizon;
    bool terminated = false;  // touchdown or admissibility breach before the horizon
    std::optional<double> touchdown;
    double terminal_time = 0.0;
    long steps = 0;
};

struct SweepResult {
    double lambda_lo = 0.0;  // classified global at the horizon
    double lambda_hi = 0.0;  // classified as terminated early
    std::vector<SweepEntry> history;  // in visiting order
    int n = 0, m = 0;
    double dt = 0.0, t_end = 0.0, delta_stop = 0.0;
    // Touchdown times along the visited grid are non-increasing in lambda.
    bool touchdown_times_monotone = true;

    double width() const { return lambda_hi - lambda_lo; }
    double midpoint() const { return 0.5 * (lambda_lo + lambda_hi); }
};

SweepEntry classify_lambda(double lambda, const PlateField& u0, const Parameters& base,
                           const CylinderGrid& grid, const SimulationSettings& sim,
                           const AdmissibleSetSpec& spec);

// Bisection on the finite-horizon classification. The initial bracket is
// verified first; InvalidBracket if its ends do not classify as global and
// terminated. NonMonotoneClassification if the visited lambdas are not split
// by a single threshold.
SweepResult estimate_lambda_star(const PlateField& u0, const Parameters& base,
                                 const CylinderGrid& grid, const SimulationSettings& sim,
                                 const AdmissibleSetSpec& spec, const SweepSettings& sweep);

}  // namespace memsflow
