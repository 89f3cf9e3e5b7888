#pragma once

#include "memsflow/energy.hpp"
#include "memsflow/grid.hpp"
#include "memsflow/parameters.hpp"
#include "memsflow/potential.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace memsflow {

// Closed admissible set: W^2_q proxy norm at most 1/rho and min v >= -1 + rho.
struct AdmissibleSetSpec {
    int q = 3;
    double rho = 0.005;
    void validate() const;
};

// (int |v|^q + |v_1|^q + |v_2|^q + |v_11|^q + 2|v_12|^q + |v_22|^q)^(1/q) by
// trapezoidal quadrature of stencil derivatives on the full grid.
double w2q_proxy_norm(const PlateField& v, int q = 3);

struct AdmissibilityReport {
    double norm = 0.0;
    double norm_limit = 0.0;
    double min_value = 0.0;
    double gap_limit = 0.0;  // -1 + rho
    double norm_margin() const { return norm_limit - norm; }
    double gap_margin() const { return min_value - gap_limit; }
    bool member() const { return norm_margin() >= 0.0 && gap_margin() >= 0.0; }
};

AdmissibilityReport admissible_check(const PlateField& v, const AdmissibleSetSpec& spec);

enum class Status { ReachedHorizon, Touchdown, AdmissibilityBreach };
const char* to_string(Status s);

struct SimulationSettings {
    double dt = 1e-4;
    double t_end = 2.0;
    int sample_stride = 10;
    double delta_stop = 0.05;
    // Halve the step up to this many times when a step would cross the
    // touchdown level, so the crossing is located more sharply.
    int touchdown_refinements = 6;
    GRoute g_route = GRoute::Variational;
    // Fixed-point refinement of each step with g averaged over the endpoints.
    bool lambda_iteration = false;
    int lambda_iteration_max = 3;
    double lambda_iteration_tol = 1e-10;
    // Stop early once max |du/dt| stays below steady_tol for steady_window steps.
    bool stop_at_steady_state = true;
    double steady_tol = 1e-6;
    int steady_window = 50;
    SolverOptions solver{};

    void validate() const;
};

struct TraceSample {
    double time = 0.0;
    double min_u = 0.0;
    double max_u = 0.0;
    double norm_proxy = 0.0;
    double l2_norm = 0.0;
    EnergyBreakdown energy;
    double drift = 0.0;
    BoundsCheck bounds;
    int solver_iterations = 0;
    bool has_energy = true;  // false once the state has crossed the ground plate
};

struct SimulationTrace {
    std::vector<TraceSample> samples;
    Status status = Status::ReachedHorizon;
    double terminal_time = 0.0;
    std::string reason;
    double delta_stop = 0.05;
    double dt = 0.0;
    double final_dt = 0.0;  // smaller than dt after touchdown refinement
    long steps = 0;
    std::optional<double> steady_state_time;
    // Steps at which the L1 bound on g or the lower energy bound failed.
    long g_bound_violations = 0;
    long energy_bound_violations = 0;
    double max_drift = 0.0;
    double max_energy_increase = 0.0;
    long solver_iterations = 0;
    long direct_solves = 0;
    PlateField final_state;
};

using StepObserver = std::function<void(double time, const PlateField& u)>;

SimulationTrace simulate(const PlateField& u0, const Parameters& p, const CylinderGrid& grid,
                         const SimulationSettings& settings = {},
                         const AdmissibleSetSpec& spec = {}, const StepObserver& observer = {});

// First time min u reaches -1 + delta_stop, interpolated between bracketing samples.
std::optional<double> touchdown_time(const SimulationTrace& trace);

}  // namespace memsflow
