#include "memsflow/evolution.hpp"

#include "memsflow/errors.hpp"
#include "memsflow/plate_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace memsflow {

void AdmissibleSetSpec::validate() const {
    if (q < 1) throw InvalidParameter("admissibility: q must be at least 1");
    if (!(rho > 0.0 && rho < 1.0)) throw InvalidParameter("admissibility: rho must lie in (0, 1)");
}

void SimulationSettings::validate() const {
    if (!(dt > 0.0)) throw InvalidParameter("time step must be positive");
    if (!(t_end >= 0.0)) throw InvalidParameter("horizon must be non-negative");
    if (sample_stride < 1) throw InvalidParameter("sample stride must be at least 1");
    if (!(delta_stop > 0.0 && delta_stop < 1.0))
        throw InvalidParameter("touchdown threshold must lie in (0, 1)");
    if (steady_window < 1) throw InvalidParameter("steady window must be at least 1");
    if (touchdown_refinements < 0) throw InvalidParameter("touchdown refinements must be >= 0");
}

double w2q_proxy_norm(const PlateField& v, int q) {
    const PlateDerivatives d = plate_derivatives(v, DerivativeRoute::Stencil);
    FullPlateArray density(v.grid());
    const int n = v.grid().n;
    for (int i = 0; i <= n + 1; ++i)
        for (int j = 0; j <= n + 1; ++j) {
            auto pw = [q](double x) { return std::pow(std::abs(x), q); };
            density(i, j) = pw(v.at(i, j)) + pw(d.d1(i, j)) + pw(d.d2(i, j)) + pw(d.d11(i, j)) +
                            2.0 * pw(d.d12(i, j)) + pw(d.d22(i, j));
        }
    return std::pow(integrate_full(density), 1.0 / q);
}

AdmissibilityReport admissible_check(const PlateField& v, const AdmissibleSetSpec& spec) {
    spec.validate();
    AdmissibilityReport r;
    r.norm = w2q_proxy_norm(v, spec.q);
    r.norm_limit = 1.0 / spec.rho;
    r.min_value = std::min(v.min(), v.boundary());
    r.gap_limit = -1.0 + spec.rho;
    return r;
}

const char* to_string(Status s) {
    switch (s) {
        case Status::ReachedHorizon: return "reached_horizon";
        case Status::Touchdown: return "touchdown";
        case Status::AdmissibilityBreach: return "admissibility_breach";
    }
    return "unknown";
}

namespace {

struct StateEval {
    PlateField g;
    SpectralField g_hat;
    EnergyBreakdown energy;
    BoundsCheck bounds;
    int iterations = 0;
    bool direct = false;
};

class Evaluator {
public:
    Evaluator(const CylinderGrid& grid, const Parameters& p, const SimulationSettings& s)
        : solver_(grid, p, with_extrapolation(s.solver)), params_(p), route_(s.g_route) {}

    StateEval operator()(const PlateField& u, double dissipation, double time) {
        StateEval e;
        const PotentialField phi = solver_.solve(u);
        e.iterations = phi.stats.iterations;
        e.direct = phi.stats.direct;
        double e_elec;
        if (route_ == GRoute::Variational) {
            EnergyGradient eg = solver_.energy_gradient(u, phi);
            e_elec = eg.energy;
            e.g = g_from_gradient(eg);
        } else {
            e_elec = solver_.energy(u, phi);
            e.g = g_from_trace(u, top_trace_derivative(phi), params_);
        }
        e.g_hat = to_spectral(e.g);
        e.energy = make_breakdown(mechanical_energy(u, params_), e_elec, params_, dissipation, time);
        e.bounds = check_bounds(u, e.g, e.energy, params_);
        return e;
    }

    // g only, for fixed-point refinement at a predicted state.
    PlateField g_at(const PlateField& u) {
        const PotentialField phi = solver_.solve(u);
        if (route_ == GRoute::Variational) return g_from_gradient(solver_.energy_gradient(u, phi));
        return g_from_trace(u, top_trace_derivative(phi), params_);
    }

private:
    static SolverOptions with_extrapolation(SolverOptions o) {
        o.extrapolate = true;
        return o;
    }
    PotentialSolver solver_;
    Parameters params_;
    GRoute route_;
};

TraceSample make_sample(double t, const PlateField& u, int q, const StateEval* e, double e0) {
    TraceSample s;
    s.time = t;
    s.min_u = u.min();
    s.max_u = u.max();
    s.norm_proxy = w2q_proxy_norm(u, q);
    s.l2_norm = l2_norm(u);
    if (e) {
        s.energy = e->energy;
        s.bounds = e->bounds;
        s.solver_iterations = e->iterations;
        s.drift = std::abs(e->energy.e_total + e->energy.dissipation - e0) / std::max(1.0, std::abs(e0));
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.energy = {nan, nan, nan, 0.0, t};
        s.drift = nan;
        s.has_energy = false;
    }
    return s;
}

double max_abs_difference(const PlateField& a, const PlateField& b) {
    double m = 0.0;
    for (std::size_t q = 0; q < a.values().size(); ++q)
        m = std::max(m, std::abs(a.values()[q] - b.values()[q]));
    return m;
}

}  // namespace

SimulationTrace simulate(const PlateField& u0, const Parameters& p, const CylinderGrid& grid,
                         const SimulationSettings& settings, const AdmissibleSetSpec& spec,
                         const StepObserver& observer) {
    p.validate();
    settings.validate();
    spec.validate();
    if (!(u0.grid() == grid.plate)) throw InvalidParameter("simulate: initial state grid mismatch");
    if (!u0.all_finite()) throw InvalidParameter("simulate: initial state is not finite");
    if (!(u0.min() > -1.0)) throw NonAdmissible("simulate: initial state touches the ground plate");

    SimulationTrace trace;
    trace.delta_stop = settings.delta_stop;
    trace.dt = settings.dt;
    const double stop_level = -1.0 + settings.delta_stop;
    const double norm_limit = 1.0 / spec.rho;
    const double t_end = settings.t_end;

    Evaluator evaluate(grid, p, settings);
    std::vector<DuhamelStepper> steppers;
    steppers.emplace_back(grid.plate, p, settings.dt);
    std::size_t level = 0;

    PlateField u = u0;
    double dissipation = 0.0;
    auto account = [&](const StateEval& e) {
        trace.solver_iterations += e.iterations;
        trace.direct_solves += e.direct ? 1 : 0;
        if (!e.bounds.g_ok()) ++trace.g_bound_violations;
        if (!e.bounds.energy_ok()) ++trace.energy_bound_violations;
    };

    auto finish = [&](Status status, double t, std::string reason) {
        trace.status = status;
        trace.terminal_time = t;
        trace.reason = std::move(reason);
        trace.final_state = u;
        trace.final_dt = steppers[level].dt();
        for (const auto& s : trace.samples)
            if (s.has_energy) trace.max_drift = std::max(trace.max_drift, s.drift);
        return trace;
    };

    if (u.min() <= stop_level) {
        trace.samples.push_back(make_sample(0.0, u, spec.q, nullptr, 0.0));
        return finish(Status::Touchdown, 0.0, "initial state within touchdown threshold");
    }

    StateEval current;
    try {
        current = evaluate(u, 0.0, 0.0);
    } catch (const SolverDivergence& err) {
        throw SolverDivergence(err.what(), 0.0);
    }
    account(current);
    const double e0 = current.energy.e_total;
    trace.samples.push_back(make_sample(0.0, u, spec.q, &current, e0));
    if (observer) observer(0.0, u);

    TraceSample pending;  // most recent unrecorded sample
    bool has_pending = false;
    int quiet_steps = 0;
    double previous_energy = e0;
    double t = 0.0;
    // Time is tracked as whole coarse steps plus a fine remainder to avoid drift.
    long coarse_steps = 0;
    double fine_time = 0.0;

    auto advance = [&](const DuhamelStepper& stepper, const SpectralField& u_hat) {
        DuhamelStepper::Result next = stepper.step_spectral(u_hat, current.g_hat);
        if (settings.lambda_iteration && p.lambda != 0.0) {
            for (int it = 0; it < settings.lambda_iteration_max; ++it) {
                if (!next.u.all_finite() || next.u.min() <= stop_level) break;
                PlateField g_avg = evaluate.g_at(next.u);
                g_avg += current.g;
                g_avg *= 0.5;
                DuhamelStepper::Result refined = stepper.step_spectral(u_hat, to_spectral(g_avg));
                const double change = max_abs_difference(refined.u, next.u);
                next = std::move(refined);
                if (change < settings.lambda_iteration_tol) break;
            }
        }
        return next;
    };

    while (t_end - t > 0.5 * steppers[level].dt()) {
        const SpectralField u_hat = to_spectral(u);
        DuhamelStepper::Result next = advance(steppers[level], u_hat);
        while (next.u.all_finite() && next.u.min() <= stop_level &&
               static_cast<int>(level) < settings.touchdown_refinements) {
            if (level + 1 == steppers.size())
                steppers.emplace_back(grid.plate, p, 0.5 * steppers[level].dt());
            ++level;
            next = advance(steppers[level], u_hat);
        }
        const double dt = steppers[level].dt();
        if (level == 0)
            ++coarse_steps;
        else
            fine_time += dt;
        t = coarse_steps * settings.dt + fine_time;

        const double rate = max_abs_difference(next.u, u) / dt;
        u = std::move(next.u);
        dissipation += next.dissipation;
        ++trace.steps;
        if (observer) observer(t, u);

        if (!u.all_finite()) {
            if (has_pending) trace.samples.push_back(pending);
            return finish(Status::AdmissibilityBreach, t, "non-finite deformation");
        }
        if (u.min() <= stop_level) {
            if (has_pending) trace.samples.push_back(pending);
            if (u.min() > -1.0) {
                StateEval final_eval = evaluate(u, dissipation, t);
                trace.samples.push_back(make_sample(t, u, spec.q, &final_eval, e0));
            } else {
                trace.samples.push_back(make_sample(t, u, spec.q, nullptr, e0));
            }
            std::ostringstream os;
            os << "min u = " << u.min() << " <= " << stop_level;
            return finish(Status::Touchdown, t, os.str());
        }
        const double norm = w2q_proxy_norm(u, spec.q);
        if (norm > norm_limit) {
            if (has_pending) trace.samples.push_back(pending);
            trace.samples.push_back(make_sample(t, u, spec.q, nullptr, e0));
            std::ostringstream os;
            os << "W2q proxy norm " << norm << " exceeds " << norm_limit;
            return finish(Status::AdmissibilityBreach, t, os.str());
        }

        try {
            current = evaluate(u, dissipation, t);
        } catch (const SolverDivergence& err) {
            throw SolverDivergence(err.what(), t);
        }
        account(current);
        trace.max_energy_increase =
            std::max(trace.max_energy_increase, current.energy.e_total - previous_energy);
        previous_energy = current.energy.e_total;

        pending = make_sample(t, u, spec.q, &current, e0);
        has_pending = true;
        quiet_steps = rate < settings.steady_tol ? quiet_steps + 1 : 0;
        const bool steady = settings.stop_at_steady_state && quiet_steps >= settings.steady_window;
        const bool last = !(t_end - t > 0.5 * steppers[level].dt());
        if (trace.steps % settings.sample_stride == 0 || level > 0 || last || steady) {
            trace.samples.push_back(pending);
            has_pending = false;
        }
        if (steady) {
            trace.steady_state_time = t;
            return finish(Status::ReachedHorizon, t, "steady state");
        }
    }
    return finish(Status::ReachedHorizon, t, "horizon");
}

std::optional<double> touchdown_time(const SimulationTrace& trace) {
    const double level = -1.0 + trace.delta_stop;
    const auto& s = trace.samples;
    for (std::size_t q = 0; q < s.size(); ++q) {
        if (s[q].min_u > level) continue;
        if (q == 0) return s[q].time;
        const double a = s[q - 1].min_u, b = s[q].min_u;
        const double w = (a - level) / (a - b);
        return s[q - 1].time + w * (s[q].time - s[q - 1].time);
    }
    return std::nullopt;
}

}  // namespace memsflow
