#include "memsflow/errors.hpp"
#include "memsflow/evolution.hpp"
#include "memsflow/potential.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace memsflow;
using testing::pi;

namespace {

const Parameters kParams = Parameters::make(1.0, 1.0, 0.0, 0.3, 1.0);

double max_eta_error(const CylinderField& phi) {
    const CylinderGrid& g = phi.grid();
    double e = 0.0;
    for (int i = 0; i <= g.plate.n + 1; ++i)
        for (int j = 0; j <= g.plate.n + 1; ++j)
            for (int k = 0; k <= g.m; ++k) e = std::max(e, std::abs(phi(i, j, k) - g.eta(k)));
    return e;
}

}  // namespace

TEST_CASE("parameter ranges", "[potential]") {
    CHECK_THROWS_AS(Parameters::make(0.0, 1, 0, 0.3, 1), InvalidParameter);
    CHECK_THROWS_AS(Parameters::make(1, -1, 0, 0.3, 1), InvalidParameter);
    CHECK_THROWS_AS(Parameters::make(1, 1, -0.1, 0.3, 1), InvalidParameter);
    CHECK_THROWS_AS(Parameters::make(1, 1, 0, 1.5, 1), InvalidParameter);
    CHECK_THROWS_AS(Parameters::make(1, 1, 0, 0.3, -2), InvalidParameter);
    CHECK_NOTHROW(Parameters::make(2, 0.5, 1, -0.9, 0));
}

TEST_CASE("operator coefficients", "[potential]") {
    const CylinderGrid grid = CylinderGrid::make(10, 8);
    const Parameters p = Parameters::make(0.7, 1, 0, 0.3, 1);
    const double e2 = 0.49;

    const OperatorCoefficients flat = assemble_coefficients(PlateField(grid.plate), p, grid);
    for (const auto& c : flat.nodes) {
        CHECK(c.a1 == Catch::Approx(e2));
        CHECK(c.a2 == 0.0);
        CHECK(c.a4 == 1.0);
        CHECK(c.b3 == 0.0);
        CHECK(c.source == 0.0);
    }
    const OperatorCoefficients lifted = assemble_coefficients(PlateField::constant(grid.plate, 0.5), p, grid);
    for (const auto& c : lifted.nodes) CHECK(c.a4 == Catch::Approx(1.0 / 2.25));

    const PlateField v = testing::mode_field(grid.plate, 0.1);
    const OperatorCoefficients oc = assemble_coefficients(v, p, grid);
    const GradientPair dv = gradient(v);
    for (int i = 1; i <= grid.plate.n; i += 3)
        for (int j = 1; j <= grid.plate.n; j += 2)
            for (int k = 0; k <= grid.m; ++k) {
                const double gap = 1 + v(i, j), eta = grid.eta(k);
                const double VV = (dv.d1(i, j) * dv.d1(i, j) + dv.d2(i, j) * dv.d2(i, j)) / (gap * gap);
                CHECK(oc.at(i, j, k).a4 == Catch::Approx(1 / (gap * gap) + e2 * eta * eta * VV));
                CHECK(oc.at(i, j, k).a1 == Catch::Approx(e2));
                CHECK(oc.at(i, j, k).positive_definite());
            }
    CHECK_THROWS_AS(assemble_coefficients(PlateField::constant(grid.plate, -1.0), p, grid), NonAdmissible);
}

TEST_CASE("constant gap leaves eta exact", "[potential]") {
    const CylinderGrid grid = CylinderGrid::make(12, 10);
    for (double c : {-0.5, 0.0, 1.0}) {
        const PotentialField phi = solve_transformed_potential(PlateField::constant(grid.plate, c), kParams, grid);
        CHECK(max_eta_error(phi) < 1e-10);
        CHECK(phi.stats.relative_residual <= 1e-10);
        const TraceField tr = top_trace_derivative(phi);
        for (double x : tr.values()) CHECK(x == Catch::Approx(1.0).margin(1e-10));
        for (auto route : {GRoute::Trace, GRoute::Variational}) {
            const PlateField g = compute_g(PlateField::constant(grid.plate, c), kParams, grid, route);
            for (double x : g.values()) CHECK(x == Catch::Approx(1 / ((1 + c) * (1 + c))).margin(1e-8));
        }
    }
    CHECK_THROWS_AS(solve_transformed_potential(PlateField::constant(grid.plate, -1.0), kParams, grid),
                    NonAdmissible);
}

TEST_CASE("top trace derivative is exact on quadratics", "[potential]") {
    const CylinderGrid grid = CylinderGrid::make(6, 7);
    const CylinderField lin = CylinderField::sample(grid, [](double, double, double e) { return e; });
    const CylinderField quad = CylinderField::sample(grid, [](double, double, double e) { return e * e; });
    const TraceField tl = top_trace_derivative(lin), tq = top_trace_derivative(quad);
    for (double x : tl.values()) CHECK(x == Catch::Approx(1.0).epsilon(1e-13));
    for (double x : tq.values()) CHECK(x == Catch::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("manufactured solution converges at second order", "[potential]") {
    const double amp = 0.2;
    auto v_of = [&](double x, double y) { return amp * testing::mode(x, y); };
    // Independent oracle: the operator in non-divergence form applied to the exact field.
    auto source = [&](double x, double y, double eta) {
        const double v = v_of(x, y);
        const double v1 = amp * pi * std::cos(pi * x) * std::sin(pi * y);
        const double v2 = amp * pi * std::sin(pi * x) * std::cos(pi * y);
        const double V1 = v1 / (1 + v), V2 = v2 / (1 + v), VV = V1 * V1 + V2 * V2;
        const double s = testing::mode(x, y);
        const double lat = -2 * pi * pi * eta * (1 - eta) * s;
        const double we = 1 + (1 - 2 * eta) * s, wee = -2 * s;
        const double w1e = (1 - 2 * eta) * pi * std::cos(pi * x) * std::sin(pi * y);
        const double w2e = (1 - 2 * eta) * pi * std::sin(pi * x) * std::cos(pi * y);
        return lat - 2 * eta * (V1 * w1e + V2 * w2e) + (1 / ((1 + v) * (1 + v)) + eta * eta * VV) * wee +
               eta * (2 * VV + 2 * pi * pi * v / (1 + v)) * we;
    };
    double err[2], trace_err[2];
    for (int level = 0; level < 2; ++level) {
        const int n = 8 << level;
        const CylinderGrid grid = CylinderGrid::make(n, n);
        PotentialSolver solver(grid, kParams);
        const PotentialField phi = solver.solve(PlateField::sample(grid.plate, v_of), source);
        CHECK(phi.stats.relative_residual <= 1e-10);
        err[level] = 0.0;
        for (int i = 0; i <= n + 1; ++i)
            for (int j = 0; j <= n + 1; ++j)
                for (int k = 0; k <= n; ++k) {
                    const double x = grid.plate.x(i), y = grid.plate.x(j), e = grid.eta(k);
                    err[level] = std::max(err[level], std::abs(phi(i, j, k) - (e + e * (1 - e) * testing::mode(x, y))));
                }
        // d/deta of the exact field at eta = 1 is 1 - sin sin.
        trace_err[level] = testing::max_error(top_trace_derivative(phi),
                                              [](double x, double y) { return 1 - testing::mode(x, y); });
    }
    CHECK(err[0] / err[1] >= 3.2);
    CHECK(err[0] / err[1] <= 4.8);
    CHECK(trace_err[0] / trace_err[1] >= 3.0);
}

TEST_CASE("preconditioners and the direct solver agree", "[potential]") {
    const CylinderGrid grid = CylinderGrid::make(8, 6);
    const PlateField v = testing::smooth_random_field(grid.plate, 5, 0.4);
    SolverOptions jac;
    jac.preconditioner = Preconditioner::Jacobi;
    SolverOptions direct;
    direct.force_direct = true;
    const PotentialField a = solve_transformed_potential(v, kParams, grid);
    const PotentialField b = solve_transformed_potential(v, kParams, grid, jac);
    const PotentialField c = solve_transformed_potential(v, kParams, grid, direct);
    CHECK(c.stats.direct);
    for (std::size_t q = 0; q < a.values().size(); ++q) {
        CHECK(a.values()[q] == Catch::Approx(b.values()[q]).margin(1e-8));
        CHECK(a.values()[q] == Catch::Approx(c.values()[q]).margin(1e-8));
    }
    CHECK(a.stats.bound_excursion < 1e-8);
}

TEST_CASE("g is non-negative and G matches in physical variables", "[potential]") {
    double diff[2];
    for (int level = 0; level < 2; ++level) {
        const int n = 12 << level;
        const CylinderGrid grid = CylinderGrid::make(n, n);
        const PlateField v = testing::mode_field(grid.plate, -0.3);
        const PotentialField phi = solve_transformed_potential(v, kParams, grid);
        const PlateField g = g_from_trace(v, top_trace_derivative(phi), kParams);
        CHECK(g.min() >= 0.0);
        const PlateField gp = compute_G_physical(reconstruct_psi(phi, v), kParams);
        CHECK(gp.min() >= 0.0);
        diff[level] = 0.0;
        for (std::size_t q = 0; q < g.values().size(); ++q)
            diff[level] = std::max(diff[level], std::abs(g.values()[q] - gp.values()[q]));
    }
    CHECK(diff[1] < diff[0]);
    const CylinderGrid grid = CylinderGrid::make(10, 10);
    const PlateField a = compute_G(testing::mode_field(grid.plate, 0.2), kParams, grid);
    const PlateField b = compute_g(testing::mode_field(grid.plate, 0.2), kParams, grid);
    for (std::size_t q = 0; q < a.values().size(); ++q) CHECK(a.values()[q] == b.values()[q]);
}

TEST_CASE("L1 bound on G for random small deformations", "[potential]") {
    const CylinderGrid grid = CylinderGrid::make(12, 12);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const PlateField u = testing::smooth_random_field(grid.plate, seed, 0.3);
        const PlateField G = compute_G(u, kParams, grid);
        const double rho0 = 1 + std::min(u.min(), 0.0);
        const GradientPair du = gradient(u);
        double grad2 = 0.0;
        for (std::size_t q = 0; q < du.d1.values().size(); ++q)
            grad2 += du.d1.values()[q] * du.d1.values()[q] + du.d2.values()[q] * du.d2.values()[q];
        grad2 *= grid.plate.h() * grid.plate.h();
        CHECK(integrate_plate(G) <= (4 + 2 / (rho0 * rho0)) + 4 * grad2);
    }
    CHECK(integrate_plate(compute_G(PlateField(grid.plate), kParams, grid)) == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("physical potential reconstruction", "[potential]") {
    const CylinderGrid grid = CylinderGrid::make(8, 8);
    for (double c : {0.0, 0.4}) {
        const PlateField v = PlateField::constant(grid.plate, c);
        const PhysicalPotential psi = reconstruct_psi(solve_transformed_potential(v, kParams, grid), v);
        for (double z : {-1.0, -0.3, 0.0, c})
            CHECK(psi(0.37, 0.61, z) == Catch::Approx((1 + z) / (1 + c)).margin(1e-10));
        CHECK_THROWS_AS(psi(0.5, 0.5, c + 0.1), OutOfDomain);
        CHECK_THROWS_AS(psi(0.5, 0.5, -1.01), OutOfDomain);
    }
    const PlateField v = testing::mode_field(grid.plate, -0.25);
    const PhysicalPotential psi = reconstruct_psi(solve_transformed_potential(v, kParams, grid), v);
    for (double x : {0.2, 0.5, 0.83}) {
        CHECK(psi(x, 0.4, psi.deformation(x, 0.4)) == Catch::Approx(1.0).margin(1e-12));
        CHECK(psi(x, 0.4, -1.0) == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("physical and transformed electrostatic energies agree", "[potential]") {
    double diff[2];
    for (int level = 0; level < 2; ++level) {
        const int n = 12 << level;
        const CylinderGrid grid = CylinderGrid::make(n, n);
        const PlateField v = testing::mode_field(grid.plate, -0.3);
        PotentialSolver solver(grid, kParams);
        const PotentialField phi = solver.solve(v);
        diff[level] = std::abs(solver.energy(v, phi) - physical_electrostatic_energy(reconstruct_psi(phi, v), kParams));
    }
    CHECK(diff[0] / diff[1] > 2.5);
}

TEST_CASE("discrete Lipschitz constant of g is stable under refinement", "[potential][property]") {
    double constant[2];
    for (int level = 0; level < 2; ++level) {
        const int n = 12 << level;
        const CylinderGrid grid = CylinderGrid::make(n, n);
        const PlateField v1 = testing::mode_field(grid.plate, -0.2);
        const PlateField v2 = v1 + testing::smooth_random_field(grid.plate, 9, 0.02);
        const PlateField dg = compute_g(v1, kParams, grid) - compute_g(v2, kParams, grid);
        constant[level] = l2_norm(dg) / w2q_proxy_norm(v1 - v2, 3);
    }
    CHECK(constant[1] / constant[0] == Catch::Approx(1.0).epsilon(0.2));
}
