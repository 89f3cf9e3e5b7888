#include "memsflow/energy.hpp"
#include "memsflow/errors.hpp"
#include "memsflow/evolution.hpp"
#include "memsflow/plate_operator.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace memsflow;
using testing::pi;

namespace {
const Parameters kParams = Parameters::make(1.0, 1.0, 0.0, 0.3, 1.0);

double transformed_energy(const PlateField& v, const Parameters& p, const CylinderGrid& grid) {
    return electrostatic_energy(v, solve_transformed_potential(v, p, grid), p);
}
}  // namespace

TEST_CASE("mechanical energy closed forms", "[energy]") {
    const PlateGrid g = PlateGrid::make(23);
    CHECK(mechanical_energy(PlateField(g), kParams) == 0.0);
    const PlateField w = testing::mode_field(g);
    for (double sigma : {-0.5, 0.3, 0.9}) {
        const Parameters p = Parameters::make(1, 1, 0, sigma, 1);
        CHECK(mechanical_energy(w, p) == Catch::Approx(std::pow(pi, 4) / 2).epsilon(1e-10));
        CHECK(mechanical_energy(w, p) == Catch::Approx(48.7045).margin(1e-4));
        // Stencil route agrees to second order.
        CHECK(mechanical_energy(w, p, DerivativeRoute::Stencil) == Catch::Approx(48.7045).epsilon(0.02));
    }
    const Parameters stretched = Parameters::make(1, 1, 2, 0.3, 1);
    CHECK(mechanical_energy(w, stretched) == Catch::Approx(std::pow(pi, 4) / 2 + 2 * pi * pi / 4));
}

TEST_CASE("mechanical energy is a quadratic form", "[energy][property]") {
    const PlateGrid g = PlateGrid::make(15);
    const Parameters p = Parameters::make(1, 1.3, 0.7, -0.2, 1);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const PlateField u = testing::random_field(g, seed);
        const double e = mechanical_energy(u, p);
        CHECK(mechanical_energy(2.0 * u, p) == Catch::Approx(4 * e).epsilon(1e-13));
        // Equals half of <Au, u>.
        CHECK(e == Catch::Approx(0.5 * quadratic_form(u, p)).epsilon(1e-10));
        // Coercivity in the Laplacian norm.
        CHECK(2 * e >= p.beta * (1 + p.sigma) / 2 * laplacian_norm_squared(u));
    }
}

TEST_CASE("electrostatic energy of flat plates", "[energy]") {
    const CylinderGrid grid = CylinderGrid::make(10, 10);
    const std::pair<double, double> cases[] = {{0.0, 1.0}, {1.0, 0.5}, {-0.5, 2.0}};
    for (auto [c, expected] : cases)
        CHECK(transformed_energy(PlateField::constant(grid.plate, c), kParams, grid) ==
              Catch::Approx(expected).epsilon(1e-10));

    double previous = INFINITY;
    for (double c : {-0.8, -0.4, 0.0, 0.5, 2.0}) {
        const double e = transformed_energy(PlateField::constant(grid.plate, c), kParams, grid);
        CHECK(e < previous);
        CHECK(e > 0.0);
        previous = e;
    }
    CHECK_THROWS_AS(electrostatic_energy(PlateField::constant(grid.plate, -1.0),
                                         PotentialField(grid), kParams),
                    NonAdmissible);
}

TEST_CASE("total energy", "[energy]") {
    const CylinderGrid grid = CylinderGrid::make(8, 8);
    const PlateField zero(grid.plate);
    CHECK(total_energy(zero, solve_transformed_potential(zero, kParams, grid), kParams).e_total ==
          Catch::Approx(-1.0).epsilon(1e-10));
    const Parameters half = kParams.with_lambda(0.5);
    const EnergyBreakdown e = total_energy(zero, solve_transformed_potential(zero, half, grid), half);
    CHECK(e.e_total == Catch::Approx(-0.5).epsilon(1e-10));
    CHECK(e.e_mech == 0.0);
    CHECK(e.e_elec == Catch::Approx(1.0));
    CHECK(make_breakdown(3.0, 2.0, half, 0.25, 0.1).e_total == Catch::Approx(2.0));
}

TEST_CASE("lower bound on the total energy for random admissible fields", "[energy][property]") {
    const CylinderGrid grid = CylinderGrid::make(12, 12);
    for (double lambda : {0.5, 5.0, 40.0})
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const Parameters p = kParams.with_lambda(lambda);
            const PlateField u = testing::smooth_random_field(grid.plate, seed, 0.4);
            const PotentialField phi = solve_transformed_potential(u, p, grid);
            const EnergyBreakdown e = total_energy(u, phi, p);
            // Oracle written out independently of the library helper.
            const double rho0 = 1 + std::min(u.min(), 0.0);
            const double grad2 = gradient_norm_squared(u);
            const double direct = e.e_mech - 3 * lambda * grad2 - lambda * (4 + 1 / (2 * rho0 * rho0));
            CHECK(e.e_total >= direct);
            const BoundsCheck b = check_bounds(u, compute_G(u, p, grid), e, p);
            CHECK(b.energy_ok());
            CHECK(b.g_ok());
            CHECK(b.g_l1_bound == Catch::Approx(4 + 2 / (rho0 * rho0) + 4 * grad2));
        }
}

TEST_CASE("gradient norm in the sine basis", "[energy]") {
    const PlateGrid g = PlateGrid::make(9);
    CHECK(gradient_norm_squared(testing::mode_field(g, 1.0, 2, 1)) == Catch::Approx(5 * pi * pi / 4));
}

TEST_CASE("shape derivative identity", "[energy]") {
    const CylinderGrid grid = CylinderGrid::make(12, 12);
    SECTION("static path") {
        const PlateField v0 = testing::mode_field(grid.plate, -0.2);
        const auto r = shape_derivative_check([&](double) { return v0; },
                                              [&](double) { return PlateField(grid.plate); }, kParams,
                                              grid, 0.0, 1e-3);
        CHECK(std::abs(r.finite_difference) < 1e-9);
        CHECK(std::abs(r.formula) < 1e-12);
    }
    SECTION("uniform gap path") {
        auto path = [&](double t) { return PlateField::constant(grid.plate, -0.2 + 0.1 * t); };
        auto velocity = [&](double) { return PlateField::constant(grid.plate, 0.1); };
        for (auto route : {GRoute::Trace, GRoute::Variational}) {
            const auto r = shape_derivative_check(path, velocity, kParams, grid, 0.0, 1e-3, route);
            CHECK(r.formula == Catch::Approx(-0.1 / 0.64).epsilon(1e-8));
            CHECK(r.relative_error <= 1e-6);
        }
    }
    SECTION("sine path refines") {
        double err[2];
        for (int level = 0; level < 2; ++level) {
            const CylinderGrid gl = CylinderGrid::make(12 << level, 12 << level);
            auto path = [&](double t) { return testing::mode_field(gl.plate, 0.1 * (1 + t)); };
            auto velocity = [&](double) { return testing::mode_field(gl.plate, 0.1); };
            err[level] = shape_derivative_check(path, velocity, kParams, gl, 0.0, 1e-3).relative_error;
        }
        CHECK(err[1] < err[0]);
        CHECK(err[1] <= 0.01);
        // The variational route is the exact derivative of the discrete energy.
        auto path = [&](double t) { return testing::mode_field(grid.plate, 0.1 * (1 + t)); };
        auto velocity = [&](double) { return testing::mode_field(grid.plate, 0.1); };
        CHECK(shape_derivative_check(path, velocity, kParams, grid, 0.0, 1e-3, GRoute::Variational)
                  .relative_error <= 1e-6);
    }
}

TEST_CASE("energy drift series", "[energy]") {
    const Parameters p = kParams;
    std::vector<EnergyBreakdown> records;
    records.push_back(make_breakdown(0.0, 1.0, p, 0.0, 0.0));
    records.push_back(make_breakdown(0.5, 1.0, p, 0.0, 0.1));  // E rose by 0.5
    records.push_back(make_breakdown(0.0, 1.5, p, 0.5, 0.2));  // balanced by dissipation
    const std::vector<double> d = energy_drift(records);
    REQUIRE(d.size() == 3);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == Catch::Approx(0.5));
    CHECK(d[2] == Catch::Approx(0.0).margin(1e-15));

    // Normalisation by max(1, |E(0)|).
    std::vector<EnergyBreakdown> big{make_breakdown(0.0, 10.0, p), make_breakdown(1.0, 10.0, p)};
    CHECK(energy_drift(big)[1] == Catch::Approx(0.1));
    CHECK(energy_drift({}).empty());
}

TEST_CASE("linear decay dissipates the mechanical energy exactly", "[energy]") {
    const CylinderGrid grid = CylinderGrid::make(10, 6);
    const Parameters p = kParams.with_lambda(0.0);
    const PlateField u0 = testing::mode_field(grid.plate, 0.1);
    SimulationSettings s;
    s.t_end = 5e-3;
    s.stop_at_steady_state = false;
    const SimulationTrace trace = simulate(u0, p, grid, s);
    REQUIRE(trace.status == Status::ReachedHorizon);
    double worst = 0.0;
    for (const auto& sample : trace.samples)
        if (sample.has_energy) worst = std::max(worst, sample.drift);
    CHECK(worst <= 1e-6);
    const double mu = OperatorSpectrum::eigenvalue(1, 1, p);
    const auto& last = trace.samples.back();
    CHECK(last.energy.e_mech ==
          Catch::Approx(std::pow(pi, 4) / 2 * 0.01 * std::exp(-2 * mu * last.time)).epsilon(1e-8));
}
