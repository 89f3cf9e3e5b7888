#pragma once

#include "memsflow/config.hpp"
#include "memsflow/evolution.hpp"
#include "memsflow/sweep.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace memsflow::verify {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    std::map<std::string, double> metrics;
};

// Constant deformations c in {-0.5, 0, 1}: phi = eta, g = 1/(1+c)^2, E_e = 1/(1+c).
CheckResult constant_gap(int n, int m, const Parameters& p);

// Manufactured potential eta + eta(1-eta) sin(pi x1) sin(pi x2) under a fixed
// smooth deformation; error ratio between n and 2n must lie in [3.2, 4.8].
CheckResult manufactured_solution(int n, const Parameters& p);

// Constant-gap path to 1e-6; sine path to 1% at n, with smaller error at n_fine.
CheckResult shape_derivative(int n, int n_fine, const Parameters& p);

struct TrajectoryLog {
    std::vector<SimulationTrace> traces;
    std::vector<std::string> labels;
};

// lambda = 1 from rest to t_end: drift within 1e-3 at dt and a reduction of
// at least 1.7 at dt / 2.
CheckResult energy_equality(int n, double dt, double t_end, const Parameters& p,
                            TrajectoryLog* log = nullptr);

// Smallest eigenvalue and coercivity over random fields, for the given tau and tau = 1.
CheckResult spectrum(int n, const Parameters& p, std::uint64_t seed);

// Single modes vanish to 1e-12 on the sine route; random sine-span fields
// give |r| <= C h^2 |w|^2 with C stable to 25% between n and 2n.
CheckResult boundary_identity(int n, std::uint64_t seed, int fields = 20);

// lambda = 0 from 0.1 * mode (1,1): exact exponential decay to 1e-8 at t = 0.01.
CheckResult linear_decay(int n, const Parameters& p, TrajectoryLog* log = nullptr);

// Zero violations of the L1 bound on g and of the lower energy bound.
CheckResult a_priori_bounds(const TrajectoryLog& log);

struct TouchdownOutcome {
    SimulationTrace trace;
    std::optional<double> t_star;
};

// Large-lambda run from rest; must end in touchdown with a finite time.
// If golden_t_star is given, the time must match it to golden_rel_tol.
CheckResult touchdown_demo(int n, double dt, const Parameters& p,
                           std::optional<double> golden_t_star = std::nullopt,
                           double golden_rel_tol = 1e-6, TrajectoryLog* log = nullptr,
                           TouchdownOutcome* outcome = nullptr);

struct SweepOutcome {
    SweepResult desk;
    std::optional<SweepEntry> fine_lower, fine_upper;
};

// Bisection on (0.1, 50) to width 0.5 and a doubled-resolution confirmation
// that the threshold moves by at most 20%.
CheckResult sweep_sanity(int n, double dt, const Parameters& p, const SimulationSettings& sim,
                         std::optional<std::pair<double, double>> golden_bracket,
                         bool refine_check, SweepOutcome* outcome = nullptr);

struct Options {
    bool quick = false;
    Parameters params{};
    std::uint64_t seed = 1;
    std::function<void(const CheckResult&)> on_result;
};

// The invariant suite behind the verify subcommand.
std::vector<CheckResult> run_suite(const Options& options);

}  // namespace memsflow::verify
