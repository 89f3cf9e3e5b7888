#include "memsflow/energy.hpp"

#include "memsflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace memsflow {

double mechanical_energy(const PlateField& u, const Parameters& p, DerivativeRoute route) {
    const PlateDerivatives d = plate_derivatives(u, route);
    FullPlateArray density(u.grid());
    for (std::size_t q = 0; q < density.values.size(); ++q) {
        const double u11 = d.d11.values[q], u22 = d.d22.values[q], u12 = d.d12.values[q];
        const double lap = u11 + u22;
        const double grad2 = d.d1.values[q] * d.d1.values[q] + d.d2.values[q] * d.d2.values[q];
        density.values[q] = p.beta * (0.5 * lap * lap + (1.0 - p.sigma) * (u12 * u12 - u11 * u22)) +
                            0.5 * p.tau * grad2;
    }
    return integrate_full(density);
}

double electrostatic_energy(const PlateField& v, const PotentialField& phi, const Parameters& p) {
    PotentialSolver solver(phi.grid(), p);
    return solver.energy(v, phi);
}

EnergyBreakdown make_breakdown(double e_mech, double e_elec, const Parameters& p,
                               double dissipation, double time) {
    return {e_mech, e_elec, e_mech - p.lambda * e_elec, dissipation, time};
}

EnergyBreakdown total_energy(const PlateField& u, const PotentialField& phi, const Parameters& p) {
    return make_breakdown(mechanical_energy(u, p), electrostatic_energy(u, phi, p), p);
}

double gradient_norm_squared(const PlateField& u) {
    const SpectralField c = to_spectral(u);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double s = 0.0;
    for (int k = 1; k <= c.grid().n; ++k)
        for (int l = 1; l <= c.grid().n; ++l) s += (k * k + l * l) * pi2 * c(k, l) * c(k, l);
    return 0.25 * s;
}

ShapeDerivativeReport shape_derivative_check(const PlateFamily& path, const PlateFamily& velocity,
                                             const Parameters& p, const CylinderGrid& grid,
                                             double t0, double h, GRoute route) {
    if (!(h > 0.0)) throw InvalidParameter("shape derivative: step must be positive");
    PotentialSolver solver(grid, p);
    auto energy_at = [&](double t) {
        const PlateField v = path(t);
        return solver.energy(v, solver.solve(v));
    };
    ShapeDerivativeReport r;
    r.finite_difference = (energy_at(t0 + h) - energy_at(t0 - h)) / (2.0 * h);

    const PlateField v0 = path(t0);
    const PotentialField phi = solver.solve(v0);
    const PlateField g = route == GRoute::Variational
                             ? g_from_gradient(solver.energy_gradient(v0, phi))
                             : g_from_trace(v0, top_trace_derivative(phi), p);
    r.formula = -inner(g, velocity(t0));

    const double scale = std::max(std::abs(r.finite_difference), std::abs(r.formula));
    r.relative_error = scale > 0.0 ? std::abs(r.finite_difference - r.formula) / scale : 0.0;
    return r;
}

std::vector<double> energy_drift(const std::vector<EnergyBreakdown>& records) {
    std::vector<double> out;
    if (records.empty()) return out;
    const double e0 = records.front().e_total;
    const double scale = std::max(1.0, std::abs(e0));
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(std::abs(r.e_total + r.dissipation - e0) / scale);
    return out;
}

namespace {
double gap_floor(const PlateField& u) { return 1.0 + std::min(u.min(), u.boundary()); }
}  // namespace

double g_l1_bound(const PlateField& u, const Parameters& p) {
    const double rho0 = gap_floor(u);
    return (4.0 + 2.0 / (rho0 * rho0)) + 4.0 * p.eps * p.eps * gradient_norm_squared(u);
}

double energy_lower_constant(const PlateField& u, const Parameters& p, double e_mech) {
    const double rho0 = gap_floor(u);
    const double grad_term = 3.0 * p.lambda * p.eps * p.eps * gradient_norm_squared(u);
    const double area_term = p.lambda * (4.0 + 1.0 / (2.0 * rho0 * rho0));
    return std::max(0.0, grad_term - 0.5 * e_mech) + area_term;
}

BoundsCheck check_bounds(const PlateField& u, const PlateField& g, const EnergyBreakdown& e,
                         const Parameters& p) {
    PlateField magnitude = g;
    for (double& x : magnitude.values()) x = std::abs(x);
    magnitude.set_boundary(std::abs(g.boundary()));

    BoundsCheck b;
    b.g_l1 = integrate_plate(magnitude);
    b.g_l1_bound = g_l1_bound(u, p);
    b.energy = e.e_total;
    b.energy_lower = 0.5 * e.e_mech - energy_lower_constant(u, p, e.e_mech);
    return b;
}

}  // namespace memsflow
