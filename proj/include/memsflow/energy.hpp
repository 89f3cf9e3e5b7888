#pragma once

#include "memsflow/grid.hpp"
#include "memsflow/parameters.hpp"
#include "memsflow/potential.hpp"

#include <functional>
#include <vector>

namespace memsflow {

struct EnergyBreakdown {
    double e_mech = 0.0;
    double e_elec = 0.0;
    double e_total = 0.0;  // e_mech - lambda * e_elec
    double dissipation = 0.0;  // accumulated integral of ||du/dt||^2
    double time = 0.0;
};

// Quadrature of beta [ (lap u)^2 / 2 + (1 - sigma) (u12^2 - u11 u22) ] + tau |grad u|^2 / 2.
// The spectral route needs a zero boundary value and is then exact on the sine span.
double mechanical_energy(const PlateField& u, const Parameters& p,
                         DerivativeRoute route = DerivativeRoute::Spectral);

// Transformed-coordinate quadrature. Throws NonAdmissible if min v <= -1.
double electrostatic_energy(const PlateField& v, const PotentialField& phi, const Parameters& p);

EnergyBreakdown total_energy(const PlateField& u, const PotentialField& phi, const Parameters& p);
EnergyBreakdown make_breakdown(double e_mech, double e_elec, const Parameters& p,
                               double dissipation = 0.0, double time = 0.0);

// ||grad u||^2 over the square, exact in the sine basis.
double gradient_norm_squared(const PlateField& u);

struct ShapeDerivativeReport {
    double finite_difference = 0.0;  // central difference of E_e along the path
    double formula = 0.0;            // -int g(v) dv/dt
    double relative_error = 0.0;
};

using PlateFamily = std::function<PlateField(double)>;

// Compares the time derivative of E_e along a prescribed family of
// deformations with the boundary-flux expression built from g.
ShapeDerivativeReport shape_derivative_check(const PlateFamily& path, const PlateFamily& velocity,
                                             const Parameters& p, const CylinderGrid& grid,
                                             double t0, double h, GRoute route = GRoute::Trace);

// Relative drift |E(t) + dissipation(t) - E(0)| / max(1, |E(0)|) per record.
std::vector<double> energy_drift(const std::vector<EnergyBreakdown>& records);

// Right-hand side of the L1 bound on g:
// (4 + 2 / rho0^2) |D| + 4 eps^2 ||grad u||^2 with rho0 = 1 + min(u, 0).
double g_l1_bound(const PlateField& u, const Parameters& p);

// Constant c2 such that E >= E_m / 2 - c2 follows from the lower bound
// E >= E_m - 3 lambda eps^2 ||grad u||^2 - lambda (4 + 1 / (2 rho0^2)) |D|.
double energy_lower_constant(const PlateField& u, const Parameters& p, double e_mech);

struct BoundsCheck {
    double g_l1 = 0.0;
    double g_l1_bound = 0.0;
    double energy = 0.0;
    double energy_lower = 0.0;  // E_m / 2 - c2
    bool g_ok() const { return g_l1 <= g_l1_bound; }
    bool energy_ok() const { return energy >= energy_lower; }
};

BoundsCheck check_bounds(const PlateField& u, const PlateField& g, const EnergyBreakdown& e,
                         const Parameters& p);

}  // namespace memsflow
