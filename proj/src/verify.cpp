#include "memsflow/verify.hpp"

#include "memsflow/energy.hpp"
#include "memsflow/errors.hpp"
#include "memsflow/plate_operator.hpp"
#include "memsflow/potential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace memsflow::verify {
namespace {

constexpr double kPi = std::numbers::pi;

double sine_mode(double x, double y, int k = 1, int l = 1) {
    return std::sin(k * kPi * x) * std::sin(l * kPi * y);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}

CheckResult result(std::string name) {
    CheckResult r;
    r.name = std::move(name);
    r.passed = true;
    return r;
}

void fail(CheckResult& r, const std::string& why) {
    r.passed = false;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += why;
}

}  // namespace

CheckResult constant_gap(int n, int m, const Parameters& p) {
    CheckResult r = result("constant_gap");
    const CylinderGrid grid = CylinderGrid::make(n, m);
    for (double c : {-0.5, 0.0, 1.0}) {
        const PlateField v = PlateField::constant(grid.plate, c);
        PotentialSolver solver(grid, p);
        const PotentialField phi = solver.solve(v);
        double phi_err = 0.0;
        for (int i = 0; i <= n + 1; ++i)
            for (int j = 0; j <= n + 1; ++j)
                for (int k = 0; k <= m; ++k)
                    phi_err = std::max(phi_err, std::abs(phi(i, j, k) - grid.eta(k)));
        const double g_exact = 1.0 / ((1.0 + c) * (1.0 + c));
        const PlateField g_trace = g_from_trace(v, top_trace_derivative(phi), p);
        const PlateField g_var = g_from_gradient(solver.energy_gradient(v, phi));
        double g_err = 0.0;
        for (std::size_t q = 0; q < g_trace.values().size(); ++q)
            g_err = std::max({g_err, std::abs(g_trace.values()[q] - g_exact),
                              std::abs(g_var.values()[q] - g_exact)});
        const double e_err = std::abs(solver.energy(v, phi) - 1.0 / (1.0 + c));
        const std::string tag = "c=" + fmt(c);
        r.metrics[tag + " residual"] = phi.stats.relative_residual;
        r.metrics[tag + " phi_error"] = phi_err;
        r.metrics[tag + " g_error"] = g_err;
        r.metrics[tag + " energy_error"] = e_err;
        if (phi.stats.relative_residual > 1e-10) fail(r, tag + " residual " + fmt(phi.stats.relative_residual));
        if (phi_err > 1e-10) fail(r, tag + " phi differs from eta by " + fmt(phi_err));
        if (g_err > 1e-6) fail(r, tag + " g error " + fmt(g_err));
        if (e_err > 1e-6) fail(r, tag + " E_e error " + fmt(e_err));
    }
    if (r.passed) r.detail = "phi = eta, g and E_e exact for c in {-0.5, 0, 1}";
    return r;
}

CheckResult manufactured_solution(int n, const Parameters& p) {
    CheckResult r = result("manufactured_solution");
    const double e2 = p.eps * p.eps;
    const double amp = 0.2;
    auto deformation = [&](double x, double y) { return amp * sine_mode(x, y); };
    auto exact = [](double x, double y, double eta) {
        return eta + eta * (1.0 - eta) * sine_mode(x, y);
    };
    // Non-divergence form of the transformed operator applied to the exact field.
    auto source = [&](double x, double y, double eta) {
        const double v = deformation(x, y);
        const double v1 = amp * kPi * std::cos(kPi * x) * std::sin(kPi * y);
        const double v2 = amp * kPi * std::sin(kPi * x) * std::cos(kPi * y);
        const double lap = -2.0 * kPi * kPi * v;
        const double V1 = v1 / (1.0 + v), V2 = v2 / (1.0 + v), VV = V1 * V1 + V2 * V2;
        const double s = sine_mode(x, y);
        const double w_lat = 2.0 * eta * (1.0 - eta) * (-kPi * kPi * s);
        const double w_e = 1.0 + (1.0 - 2.0 * eta) * s, w_ee = -2.0 * s;
        const double w_1e = (1.0 - 2.0 * eta) * kPi * std::cos(kPi * x) * std::sin(kPi * y);
        const double w_2e = (1.0 - 2.0 * eta) * kPi * std::sin(kPi * x) * std::cos(kPi * y);
        const double a4 = 1.0 / ((1.0 + v) * (1.0 + v)) + e2 * eta * eta * VV;
        return e2 * w_lat - 2.0 * e2 * eta * (V1 * w_1e + V2 * w_2e) + a4 * w_ee +
               e2 * eta * (2.0 * VV - lap / (1.0 + v)) * w_e;
    };
    double errors[2];
    for (int level = 0; level < 2; ++level) {
        const int nn = n << level;
        const CylinderGrid grid = CylinderGrid::make(nn, nn);
        PotentialSolver solver(grid, p);
        const PotentialField phi = solver.solve(PlateField::sample(grid.plate, deformation), source);
        double err = 0.0;
        for (int i = 0; i <= nn + 1; ++i)
            for (int j = 0; j <= nn + 1; ++j)
                for (int k = 0; k <= nn; ++k)
                    err = std::max(err, std::abs(phi(i, j, k) - exact(grid.plate.x(i), grid.plate.x(j),
                                                                        grid.eta(k))));
        errors[level] = err;
        r.metrics["error n=" + std::to_string(nn)] = err;
    }
    const double ratio = errors[0] / errors[1];
    r.metrics["ratio"] = ratio;
    r.detail = "max error " + fmt(errors[0]) + " -> " + fmt(errors[1]) + ", ratio " + fmt(ratio);
    if (!(ratio >= 3.2 && ratio <= 4.8)) fail(r, "ratio outside [3.2, 4.8]");
    return r;
}

CheckResult shape_derivative(int n, int n_fine, const Parameters& p) {
    CheckResult r = result("shape_derivative");
    {
        const CylinderGrid grid = CylinderGrid::make(n, n);
        auto path = [&](double t) { return PlateField::constant(grid.plate, -0.2 + 0.1 * t); };
        auto velocity = [&](double) {
            PlateField v = PlateField::constant(grid.plate, 0.1);
            v.set_boundary(0.1);
            return v;
        };
        const auto rep = shape_derivative_check(path, velocity, p, grid, 0.0, 1e-3);
        r.metrics["constant path error"] = rep.relative_error;
        if (rep.relative_error > 1e-6) fail(r, "constant path error " + fmt(rep.relative_error));
    }
    double errors[2] = {0.0, 0.0};
    const int sizes[2] = {n, n_fine};
    for (int level = 0; level < 2; ++level) {
        if (sizes[level] <= 0) continue;
        const CylinderGrid grid = CylinderGrid::make(sizes[level], sizes[level]);
        auto path = [&](double t) {
            return PlateField::sample(grid.plate,
                                      [&](double x, double y) { return 0.1 * (1.0 + t) * sine_mode(x, y); });
        };
        auto velocity = [&](double) {
            return PlateField::sample(grid.plate, [](double x, double y) { return 0.1 * sine_mode(x, y); });
        };
        const auto rep = shape_derivative_check(path, velocity, p, grid, 0.0, 1e-3);
        errors[level] = rep.relative_error;
        r.metrics["sine path error n=" + std::to_string(sizes[level])] = rep.relative_error;
    }
    if (errors[0] > 1e-2) fail(r, "sine path error " + fmt(errors[0]) + " above 1%");
    if (n_fine > 0 && !(errors[1] < errors[0]))
        fail(r, "sine path error does not decrease under refinement");
    if (r.passed)
        r.detail = "constant path " + fmt(r.metrics["constant path error"]) + ", sine path " +
                   fmt(errors[0]) + (n_fine > 0 ? " -> " + fmt(errors[1]) : std::string());
    return r;
}

CheckResult energy_equality(int n, double dt, double t_end, const Parameters& base,
                            TrajectoryLog* log) {
    CheckResult r = result("energy_equality");
    const Parameters p = base.with_lambda(1.0);
    const CylinderGrid grid = CylinderGrid::make(n, n);
    double drift[2];
    for (int level = 0; level < 2; ++level) {
        SimulationSettings s;
        s.dt = dt / (1 << level);
        s.t_end = t_end;
        s.stop_at_steady_state = false;
        SimulationTrace trace = simulate(PlateField(grid.plate), p, grid, s);
        drift[level] = trace.max_drift;
        r.metrics["drift dt=" + fmt(s.dt)] = trace.max_drift;
        if (trace.status != Status::ReachedHorizon) fail(r, "run terminated early");
        if (log) {
            log->traces.push_back(std::move(trace));
            log->labels.push_back("energy_equality dt=" + fmt(s.dt));
        }
    }
    const double ratio = drift[0] / drift[1];
    r.metrics["ratio"] = ratio;
    r.detail = "max drift " + fmt(drift[0]) + " -> " + fmt(drift[1]) + ", ratio " + fmt(ratio);
    if (drift[0] > 1e-3) fail(r, "drift above 1e-3");
    if (!(ratio >= 1.7)) fail(r, "drift reduction below 1.7");
    return r;
}

CheckResult spectrum(int n, const Parameters& p, std::uint64_t seed) {
    CheckResult r = result("spectrum");
    const PlateGrid grid = PlateGrid::make(n);
    Parameters stretched = p;
    stretched.tau = 1.0;
    for (const Parameters& q : {p, stretched}) {
        const SpectrumReport rep = spectrum_check(q, grid, 100, seed);
        const std::string tag = "tau=" + fmt(q.tau);
        r.metrics[tag + " min_eigenvalue"] = rep.min_eigenvalue;
        r.metrics[tag + " worst_ratio"] = rep.worst_ratio;
        if (std::abs(rep.min_eigenvalue - rep.expected_min) > 1e-12 * rep.expected_min)
            fail(r, tag + " smallest eigenvalue " + fmt(rep.min_eigenvalue) + " expected " +
                        fmt(rep.expected_min));
        if (!rep.passed()) fail(r, tag + " " + std::to_string(rep.violations) + " coercivity violations");
    }
    if (r.passed)
        r.detail = "min eigenvalue " + fmt(r.metrics["tau=" + fmt(p.tau) + " min_eigenvalue"]) +
                   ", coercivity holds on 100 fields";
    return r;
}

CheckResult boundary_identity(int n, std::uint64_t seed, int fields) {
    CheckResult r = result("boundary_identity");
    double worst_mode = 0.0;
    for (auto [k, l] : {std::pair{1, 1}, std::pair{2, 3}, std::pair{4, 1}}) {
        const PlateGrid g = PlateGrid::make(n);
        const PlateField w = PlateField::sample(g, [&](double x, double y) { return sine_mode(x, y, k, l); });
        worst_mode = std::max(worst_mode, std::abs(boundary_identity_check(w, DerivativeRoute::Spectral)));
    }
    r.metrics["single mode |r|"] = worst_mode;
    if (worst_mode > 1e-12) fail(r, "single-mode residual " + fmt(worst_mode));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    double worst_change = 0.0;
    const int modes = 4;
    for (int f = 0; f < fields; ++f) {
        std::vector<double> coeff(modes * modes);
        for (double& c : coeff) c = normal(rng);
        double constant[2];
        for (int level = 0; level < 2; ++level) {
            const PlateGrid g = PlateGrid::make(n << level);
            const PlateField w = PlateField::sample(g, [&](double x, double y) {
                double s = 0.0;
                for (int k = 1; k <= modes; ++k)
                    for (int l = 1; l <= modes; ++l) s += coeff[(k - 1) * modes + l - 1] * sine_mode(x, y, k, l);
                return s;
            });
            const double norm = w2q_proxy_norm(w, 2);
            constant[level] = std::abs(boundary_identity_check(w)) / (g.h() * g.h() * norm * norm);
        }
        worst_change = std::max(worst_change, std::abs(constant[1] / constant[0] - 1.0));
    }
    r.metrics["worst C change"] = worst_change;
    if (worst_change > 0.25) fail(r, "constant changes by " + fmt(worst_change) + " under refinement");
    if (r.passed)
        r.detail = "single modes " + fmt(worst_mode) + ", C stable within " + fmt(100 * worst_change) + "%";
    return r;
}

CheckResult linear_decay(int n, const Parameters& base, TrajectoryLog* log) {
    CheckResult r = result("linear_decay");
    const Parameters p = base.with_lambda(0.0);
    const CylinderGrid grid = CylinderGrid::make(n, n);
    const PlateField u0 = PlateField::sample(grid.plate, [](double x, double y) { return 0.1 * sine_mode(x, y); });
    SimulationSettings s;
    s.t_end = 0.01;
    s.stop_at_steady_state = false;
    SimulationTrace trace = simulate(u0, p, grid, s);
    const double mu = 4.0 * p.beta * std::pow(kPi, 4) + 2.0 * p.tau * kPi * kPi;
    const double decay = 0.1 * std::exp(-mu * trace.terminal_time);
    double err = 0.0;
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            err = std::max(err, std::abs(trace.final_state(i, j) -
                                         decay * sine_mode(grid.plate.x(i), grid.plate.x(j))));
    r.metrics["max error"] = err;
    r.detail = "max error " + fmt(err) + " at t = " + fmt(trace.terminal_time);
    if (std::abs(trace.terminal_time - 0.01) > 1e-12) fail(r, "run did not reach t = 0.01");
    if (err > 1e-8) fail(r, "error above 1e-8");
    if (log) {
        log->traces.push_back(std::move(trace));
        log->labels.push_back("linear_decay");
    }
    return r;
}

CheckResult a_priori_bounds(const TrajectoryLog& log) {
    CheckResult r = result("a_priori_bounds");
    long g_viol = 0, e_viol = 0, states = 0;
    for (std::size_t q = 0; q < log.traces.size(); ++q) {
        const auto& t = log.traces[q];
        g_viol += t.g_bound_violations;
        e_viol += t.energy_bound_violations;
        states += t.steps + 1;
        if (t.g_bound_violations + t.energy_bound_violations > 0)
            fail(r, log.labels[q] + ": " + std::to_string(t.g_bound_violations) + " L1 and " +
                        std::to_string(t.energy_bound_violations) + " energy violations");
    }
    r.metrics["trajectories"] = static_cast<double>(log.traces.size());
    r.metrics["g_l1 violations"] = static_cast<double>(g_viol);
    r.metrics["energy violations"] = static_cast<double>(e_viol);
    if (log.traces.empty()) fail(r, "no trajectories recorded");
    if (r.passed)
        r.detail = "0 violations over " + std::to_string(states) + " states in " +
                   std::to_string(log.traces.size()) + " trajectories";
    return r;
}

CheckResult touchdown_demo(int n, double dt, const Parameters& base,
                           std::optional<double> golden_t_star, double golden_rel_tol,
                           TrajectoryLog* log, TouchdownOutcome* outcome) {
    CheckResult r = result("touchdown_demo");
    Parameters p = base.with_lambda(50.0);
    p.eps = 1.0;
    const CylinderGrid grid = CylinderGrid::make(n, n);
    SimulationSettings s;
    s.dt = dt;
    s.t_end = 2.0;
    SimulationTrace trace = simulate(PlateField(grid.plate), p, grid, s);
    const auto t_star = touchdown_time(trace);

    // Exactly one terminal cause, consistent with the final sample.
    const auto& last = trace.samples.back();
    const AdmissibleSetSpec spec{};
    const bool touch = last.min_u <= -1.0 + trace.delta_stop;
    const bool blow = !std::isfinite(last.norm_proxy) || last.norm_proxy > 1.0 / spec.rho;
    int causes = 0;
    if (trace.status == Status::Touchdown) causes += touch ? 1 : 0;
    if (trace.status == Status::AdmissibilityBreach) causes += blow ? 1 : 0;
    if (trace.status != Status::ReachedHorizon && causes != 1) fail(r, "terminal cause inconsistent with final state");
    if (trace.status != Status::Touchdown) fail(r, std::string("status ") + to_string(trace.status));
    if (!t_star || !std::isfinite(*t_star)) fail(r, "no finite touchdown time");
    if (t_star) r.metrics["t_star"] = *t_star;
    if (t_star && golden_t_star) {
        const double rel = std::abs(*t_star - *golden_t_star) / *golden_t_star;
        r.metrics["golden relative difference"] = rel;
        if (rel > golden_rel_tol) fail(r, "t* = " + fmt(*t_star) + " differs from golden " + fmt(*golden_t_star));
    }
    if (r.passed) {
        std::ostringstream os;
        os.precision(10);
        os << "touchdown at t* = " << *t_star << " (" << trace.reason << ")";
        r.detail = os.str();
    }
    if (outcome) outcome->t_star = t_star;
    if (log) {
        log->traces.push_back(trace);
        log->labels.push_back("touchdown_demo");
    }
    if (outcome) outcome->trace = std::move(trace);
    return r;
}

CheckResult sweep_sanity(int n, double dt, const Parameters& base, const SimulationSettings& sim_base,
                         std::optional<std::pair<double, double>> golden_bracket, bool refine_check,
                         SweepOutcome* outcome) {
    CheckResult r = result("sweep_sanity");
    SimulationSettings sim = sim_base;
    sim.dt = dt;
    SweepSettings sw;
    sw.lambda_lo = 0.1;
    sw.lambda_hi = 50.0;
    sw.tol = 0.5;
    const CylinderGrid grid = CylinderGrid::make(n, n);
    const PlateField u0(grid.plate);
    SweepResult desk;
    try {
        desk = estimate_lambda_star(u0, base, grid, sim, AdmissibleSetSpec{}, sw);
    } catch (const Error& e) {
        fail(r, e.what());
        return r;
    }
    r.metrics["lambda_lo"] = desk.lambda_lo;
    r.metrics["lambda_hi"] = desk.lambda_hi;
    r.metrics["runs"] = static_cast<double>(desk.history.size());
    if (desk.width() > 0.5) fail(r, "bracket width " + fmt(desk.width()));
    if (!desk.touchdown_times_monotone) fail(r, "touchdown times not decreasing in lambda");
    if (golden_bracket) {
        const double d = std::max(std::abs(desk.lambda_lo - golden_bracket->first),
                                  std::abs(desk.lambda_hi - golden_bracket->second));
        r.metrics["golden difference"] = d;
        if (d > 1e-9) fail(r, "bracket differs from golden");
    }
    const double mid = desk.midpoint();
    std::string detail = "bracket (" + fmt(desk.lambda_lo) + ", " + fmt(desk.lambda_hi) + ")";
    if (outcome) outcome->desk = desk;
    if (refine_check) {
        // The doubled-resolution threshold lies in (lo, hi) when lo stays global and
        // hi terminates; any bisected midpoint is then within 20% of mid.
        const double lo = 0.8 * mid + 0.5 * sw.tol;
        const double hi = 1.2 * mid - 0.5 * sw.tol;
        const CylinderGrid fine = CylinderGrid::make(2 * n, 2 * n);
        SimulationSettings fine_sim = sim;
        fine_sim.dt = 0.5 * dt;
        const PlateField u0_fine(fine.plate);
        const SweepEntry a = classify_lambda(lo, u0_fine, base, fine, fine_sim, AdmissibleSetSpec{});
        const SweepEntry b = classify_lambda(hi, u0_fine, base, fine, fine_sim, AdmissibleSetSpec{});
        r.metrics["fine lower lambda"] = lo;
        r.metrics["fine upper lambda"] = hi;
        if (outcome) {
            outcome->fine_lower = a;
            outcome->fine_upper = b;
        }
        if (a.terminated) fail(r, "doubled resolution: lambda = " + fmt(lo) + " terminates early");
        if (!b.terminated) fail(r, "doubled resolution: lambda = " + fmt(hi) + " reaches the horizon");
        detail += "; doubled resolution keeps the threshold in (" + fmt(lo) + ", " + fmt(hi) + ")";
    }
    if (r.passed) r.detail = detail;
    return r;
}

std::vector<CheckResult> run_suite(const Options& o) {
    std::vector<CheckResult> out;
    auto add = [&](CheckResult r) {
        if (o.on_result) o.on_result(r);
        out.push_back(std::move(r));
    };
    const int n = o.quick ? 16 : 24;
    TrajectoryLog log;
    auto guarded = [&](const std::string& name, auto&& fn) {
        try {
            add(fn());
        } catch (const Error& e) {
            CheckResult r;
            r.name = name;
            r.detail = std::string("error: ") + e.what();
            add(r);
        }
    };
    guarded("constant_gap", [&] { return constant_gap(n, n, o.params); });
    guarded("manufactured_solution", [&] { return manufactured_solution(o.quick ? 8 : 16, o.params); });
    guarded("shape_derivative", [&] { return shape_derivative(n, 2 * n, o.params); });
    guarded("energy_equality", [&] { return energy_equality(n, 1e-4, o.quick ? 0.01 : 0.05, o.params, &log); });
    guarded("spectrum", [&] { return spectrum(n, o.params, o.seed); });
    guarded("boundary_identity", [&] { return boundary_identity(16, o.seed); });
    guarded("linear_decay", [&] { return linear_decay(n, o.params, &log); });
    if (!o.quick) guarded("touchdown_demo", [&] { return touchdown_demo(n, 1e-4, o.params, std::nullopt, 0.0, &log); });
    guarded("a_priori_bounds", [&] { return a_priori_bounds(log); });
    return out;
}

}  // namespace memsflow::verify
