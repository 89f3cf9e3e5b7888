#include "memsflow/errors.hpp"
#include "memsflow/evolution.hpp"
#include "memsflow/plate_operator.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace memsflow;

namespace {

const Parameters kParams = Parameters::make(1.0, 1.0, 0.0, 0.3, 1.0);

SimulationTrace run(double lambda, double t_end, int n = 12, double dt = 1e-4,
                    SimulationSettings s = {}) {
    const CylinderGrid grid = CylinderGrid::make(n, n);
    s.dt = dt;
    s.t_end = t_end;
    return simulate(PlateField(grid.plate), kParams.with_lambda(lambda), grid, s);
}

double max_abs_difference(const PlateField& a, const PlateField& b) {
    const PlateField d = a - b;
    return std::max(std::abs(d.min()), std::abs(d.max()));
}

void check_trace_invariants(const SimulationTrace& trace) {
    REQUIRE(!trace.samples.empty());
    for (std::size_t q = 1; q < trace.samples.size(); ++q)
        CHECK(trace.samples[q].time > trace.samples[q - 1].time);
    CHECK(trace.samples.back().time == Catch::Approx(trace.terminal_time));
    if (trace.status == Status::Touchdown) {
        CHECK(trace.samples.back().min_u <= -1 + trace.delta_stop);
        CHECK(trace.reason.rfind("min u", 0) == 0);
    }
    if (trace.status == Status::ReachedHorizon)
        CHECK((trace.reason == "horizon" || trace.reason == "steady state"));
}

}  // namespace

TEST_CASE("admissible set membership", "[evolution]") {
    const PlateGrid g = PlateGrid::make(15);
    const AdmissibleSetSpec half{3, 0.5};
    const AdmissibilityReport flat = admissible_check(PlateField(g), half);
    CHECK(flat.member());
    CHECK(flat.norm == 0.0);
    CHECK(flat.norm_limit == 2.0);
    CHECK(flat.gap_limit == -0.5);
    CHECK_FALSE(admissible_check(PlateField::constant(g, -0.6), half).member());

    // Scale a random field onto the norm boundary.
    const AdmissibleSetSpec spec{3, 0.2};
    PlateField w = testing::smooth_random_field(g, 11, 1.0);
    w *= 1.0 / w2q_proxy_norm(w, 3);
    const PlateField on_boundary = (1.0 / spec.rho) * w;
    const AdmissibilityReport r = admissible_check(on_boundary, spec);
    CHECK(std::abs(r.norm_margin()) < 1e-9 * r.norm_limit);
    CHECK_FALSE(admissible_check(1.01 * on_boundary, spec).member());
    CHECK(admissible_check(0.9 * on_boundary, spec).norm_margin() == Catch::Approx(0.5));

    CHECK_THROWS_AS((AdmissibleSetSpec{3, 1.0}.validate()), InvalidParameter);
    CHECK_THROWS_AS((AdmissibleSetSpec{0, 0.5}.validate()), InvalidParameter);
}

TEST_CASE("proxy norm is a norm", "[evolution][property]") {
    const PlateGrid g = PlateGrid::make(13);
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const PlateField a = testing::random_field(g, seed), b = testing::random_field(g, seed + 100);
        CHECK(w2q_proxy_norm(-2.5 * a) == Catch::Approx(2.5 * w2q_proxy_norm(a)));
        CHECK(w2q_proxy_norm(a + b) <= w2q_proxy_norm(a) + w2q_proxy_norm(b) + 1e-12);
    }
}

TEST_CASE("touchdown time interpolation", "[evolution]") {
    SimulationTrace trace;
    trace.delta_stop = 0.1;
    for (auto [t, m] : {std::pair{0.29, -0.85}, {0.30, -0.89}, {0.31, -0.91}}) {
        TraceSample s;
        s.time = t;
        s.min_u = m;
        trace.samples.push_back(s);
    }
    REQUIRE(touchdown_time(trace).has_value());
    CHECK(*touchdown_time(trace) == Catch::Approx(0.305));
    trace.samples.pop_back();
    CHECK_FALSE(touchdown_time(trace).has_value());
    CHECK_FALSE(touchdown_time(SimulationTrace{}).has_value());
}

TEST_CASE("status names", "[evolution]") {
    CHECK(std::string(to_string(Status::ReachedHorizon)) == "reached_horizon");
    CHECK(std::string(to_string(Status::Touchdown)) == "touchdown");
    CHECK(std::string(to_string(Status::AdmissibilityBreach)) == "admissibility_breach");
}

TEST_CASE("invalid simulation input", "[evolution]") {
    const CylinderGrid grid = CylinderGrid::make(6, 6);
    SimulationSettings s;
    s.dt = 0.0;
    CHECK_THROWS_AS(simulate(PlateField(grid.plate), kParams, grid, s), InvalidParameter);
    CHECK_THROWS_AS(simulate(PlateField::constant(grid.plate, -1.2), kParams, grid), NonAdmissible);
}

TEST_CASE("uncoupled plate decays exactly", "[evolution]") {
    const CylinderGrid grid = CylinderGrid::make(12, 8);
    const Parameters p = kParams.with_lambda(0.0);
    SimulationSettings s;
    s.t_end = 0.01;
    s.stop_at_steady_state = false;
    const PlateField u0 = testing::mode_field(grid.plate, 0.1);
    const SimulationTrace trace = simulate(u0, p, grid, s);
    CHECK(trace.status == Status::ReachedHorizon);
    CHECK(trace.terminal_time == Catch::Approx(0.01));
    const double factor = std::exp(-OperatorSpectrum::eigenvalue(1, 1, p) * 0.01);
    CHECK(max_abs_difference(trace.final_state, factor * u0) <= 1e-8);
    check_trace_invariants(trace);
    CHECK_FALSE(touchdown_time(trace).has_value());

    const SimulationTrace rest = simulate(PlateField(grid.plate), p, grid, s);
    CHECK(rest.final_state.max() == 0.0);
    CHECK(rest.final_state.min() == 0.0);
    CHECK(rest.max_drift == 0.0);
}

TEST_CASE("small voltage reaches the horizon", "[evolution]") {
    const SimulationTrace trace = run(0.1, 1.0);
    CHECK(trace.status == Status::ReachedHorizon);
    check_trace_invariants(trace);
    double lowest = 0.0, largest_norm = 0.0;
    for (const auto& s : trace.samples) {
        lowest = std::min(lowest, s.min_u);
        largest_norm = std::max(largest_norm, s.l2_norm);
    }
    CHECK(lowest > -0.1);
    CHECK(largest_norm < 0.1);
    CHECK(trace.steady_state_time.has_value());
    CHECK(trace.g_bound_violations == 0);
    CHECK(trace.energy_bound_violations == 0);
    CHECK(trace.final_state.max() <= 0.0);
}

TEST_CASE("large voltage touches down", "[evolution]") {
    const SimulationTrace trace = run(50.0, 2.0);
    CHECK(trace.status == Status::Touchdown);
    check_trace_invariants(trace);
    const auto t_star = touchdown_time(trace);
    REQUIRE(t_star.has_value());
    CHECK(*t_star > 0.0);
    CHECK(*t_star < 0.01);
    CHECK(*t_star <= trace.terminal_time);
    CHECK(trace.final_dt < trace.dt);
    CHECK(trace.final_state.min() > -1.0);

    // Earlier contact at higher voltage.
    const SimulationTrace faster = run(80.0, 2.0);
    REQUIRE(touchdown_time(faster).has_value());
    CHECK(*touchdown_time(faster) < *t_star);
}

TEST_CASE("time refinement converges at first order", "[evolution]") {
    PlateField finals[3];
    SimulationSettings s;
    s.stop_at_steady_state = false;
    for (int level = 0; level < 3; ++level) finals[level] = run(5.0, 0.02, 10, 4e-4 / (1 << level), s).final_state;
    const double d1 = max_abs_difference(finals[0], finals[1]);
    const double d2 = max_abs_difference(finals[1], finals[2]);
    CHECK(d1 > 0.0);
    CHECK(d1 / d2 == Catch::Approx(2.0).epsilon(0.25));
}

TEST_CASE("solver divergence carries the time stamp", "[evolution]") {
    SimulationSettings s;
    s.solver.tolerance = 1e-30;
    s.solver.max_iterations = 1;
    s.solver.direct_fallback = false;
    s.solver.warm_start = false;
    const CylinderGrid grid = CylinderGrid::make(8, 8);
    try {
        simulate(testing::mode_field(grid.plate, -0.2), kParams, grid, s);
        FAIL("expected SolverDivergence");
    } catch (const SolverDivergence& e) {
        CHECK(e.time() == 0.0);
    }
}

TEST_CASE("endpoint-averaged iteration lowers the energy drift", "[evolution]") {
    SimulationSettings s;
    s.stop_at_steady_state = false;
    const SimulationTrace plain = run(5.0, 0.02, 10, 2e-4, s);
    s.lambda_iteration = true;
    const SimulationTrace refined = run(5.0, 0.02, 10, 2e-4, s);
    CHECK(refined.max_drift < plain.max_drift);
}

TEST_CASE("L2 growth obeys the a-priori rate", "[evolution][property]") {
    for (double lambda : {1.0, 10.0}) {
        const SimulationTrace trace = run(lambda, 0.05, 10);
        REQUIRE(trace.samples.size() > 2);
        for (std::size_t q = 1; q < trace.samples.size(); ++q) {
            const auto& a = trace.samples[q - 1];
            const auto& b = trace.samples[q];
            if (!a.has_energy || !b.has_energy) continue;
            // d/dt |u|^2 = -2<Au,u> - 2 lambda <g,u> <= 2 lambda |g|_L1 (1 + |u|^2) while u >= -1.
            const double rate = (b.l2_norm * b.l2_norm - a.l2_norm * a.l2_norm) / (b.time - a.time);
            const double bound = 2 * lambda * std::max(a.bounds.g_l1_bound, b.bounds.g_l1_bound) *
                                 (1 + std::max(a.l2_norm, b.l2_norm) * std::max(a.l2_norm, b.l2_norm));
            CHECK(rate <= bound);
        }
    }
}

TEST_CASE("observer sees every accepted step", "[evolution]") {
    const CylinderGrid grid = CylinderGrid::make(6, 6);
    SimulationSettings s;
    s.t_end = 1e-3;
    s.stop_at_steady_state = false;
    long calls = 0;
    double last = -1.0;
    const SimulationTrace trace = simulate(PlateField(grid.plate), kParams, grid, s, {},
                                           [&](double t, const PlateField&) {
                                               CHECK(t > last);
                                               last = t;
                                               ++calls;
                                           });
    CHECK(calls == trace.steps + 1);
    CHECK(last == Catch::Approx(1e-3));
}
