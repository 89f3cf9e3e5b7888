#pragma once

#include "memsflow/grid.hpp"
#include "memsflow/parameters.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace memsflow {

// Coefficients of the transformed operator at one cylinder node, written as
// div(alpha grad w) + b . grad w with
//   alpha = [[a1, 0, a2/2], [0, a1, a3/2], [a2/2, a3/2, a4]].
struct NodeCoefficients {
    double a1 = 0, a2 = 0, a3 = 0, a4 = 0;
    double b1 = 0, b2 = 0, b3 = 0;
    double source = 0;

    std::array<std::array<double, 3>, 3> alpha() const {
        return {{{a1, 0.0, 0.5 * a2}, {0.0, a1, 0.5 * a3}, {0.5 * a2, 0.5 * a3, a4}}};
    }
    bool positive_definite() const;
};

struct OperatorCoefficients {
    CylinderGrid grid;
    std::vector<NodeCoefficients> nodes;  // indexed like CylinderGrid::index

    const NodeCoefficients& at(int i, int j, int k) const { return nodes[grid.index(i, j, k)]; }
};

OperatorCoefficients assemble_coefficients(const PlateField& v, const Parameters& p,
                                           const CylinderGrid& grid);

enum class Preconditioner { FastSine, Jacobi };

struct SolverOptions {
    double tolerance = 1e-10;
    int max_iterations = 0;  // 0 selects 20 * sqrt(n*n*m)
    Preconditioner preconditioner = Preconditioner::FastSine;
    bool direct_fallback = true;
    std::size_t direct_limit = 40000;
    bool force_direct = false;
    bool warm_start = true;
    // Start from the linear extrapolation of the two previous solutions.
    bool extrapolate = false;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
    bool direct = false;
    // Largest excursion of phi outside [0,1]; reported, never enforced.
    double bound_excursion = 0.0;
};

class PotentialField : public CylinderField {
public:
    PotentialField() = default;
    explicit PotentialField(const CylinderGrid& grid) : CylinderField(grid) {}
    SolveStats stats;
};

// Top-surface derivative d(phi)/d(eta) at eta = 1, interior plate nodes.
using TraceField = PlateField;

// Value of the transformed Dirichlet energy and its derivative with respect to
// the interior node values of v.
struct EnergyGradient {
    double energy = 0.0;
    PlateField gradient;
};

enum class GRoute { Trace, Variational };

// Finite-element solver for the transformed potential on a fixed cylinder grid.
// Trilinear elements with 2x2x2 Gauss quadrature on the symmetric form
// (1+v) L_v w = div(K grad w); preconditioned conjugate gradients with a
// fast sine solver for the mean-coefficient operator.
class PotentialSolver {
public:
    PotentialSolver(const CylinderGrid& grid, const Parameters& p, SolverOptions options = {});
    ~PotentialSolver();
    PotentialSolver(PotentialSolver&&) noexcept;
    PotentialSolver& operator=(PotentialSolver&&) noexcept;

    const CylinderGrid& grid() const;
    const Parameters& parameters() const;

    // L_v phi = 0 in the cylinder, phi = eta on its boundary.
    PotentialField solve(const PlateField& v);
    // L_v phi = rhs in the cylinder, phi = eta on its boundary.
    PotentialField solve(const PlateField& v, const std::function<double(double, double, double)>& rhs);

    // Quadrature of the transformed energy density of phi under deformation v.
    double energy(const PlateField& v, const PotentialField& phi) const;
    EnergyGradient energy_gradient(const PlateField& v, const PotentialField& phi) const;

    // Reset the warm-start state.
    void forget();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

PotentialField solve_transformed_potential(const PlateField& v, const Parameters& p,
                                           const CylinderGrid& grid, SolverOptions options = {});

TraceField top_trace_derivative(const CylinderField& phi);

// g = (1 + eps^2 |grad v|^2) / (1+v)^2 * trace^2 at interior nodes.
// The boundary value is set to the constant-gap value 1/(1+b)^2.
PlateField g_from_trace(const PlateField& v, const TraceField& trace, const Parameters& p);
// Minus the discrete shape derivative of the electrostatic energy per unit area.
PlateField g_from_gradient(const EnergyGradient& eg);

PlateField compute_g(const PlateField& v, const Parameters& p, const CylinderGrid& grid,
                     GRoute route = GRoute::Trace);
// G(u) coincides with g(u); this is the evolution-facing alias.
PlateField compute_G(const PlateField& u, const Parameters& p, const CylinderGrid& grid);

// Physical-domain potential psi(x, z) = phi(x, (1+z)/(1+v(x))).
// Bilinear in x, quadratic Lagrange in eta.
class PhysicalPotential {
public:
    PhysicalPotential(CylinderField phi, PlateField v);
    // Throws OutOfDomain unless -1 <= z <= v(x) and x lies in the closed square.
    double operator()(double x1, double x2, double z) const;
    double deformation(double x1, double x2) const;
    // Same interpolant with eta allowed slightly outside [0,1].
    double extended(double x1, double x2, double z) const;
    // Column value at a full-grid plate node, eta unrestricted.
    double column(int i, int j, double eta) const;
    double column_derivative(int i, int j, double eta) const;

    const CylinderField& phi() const { return phi_; }
    const PlateField& v() const { return v_; }

private:
    CylinderField phi_;
    PlateField v_;
};

PhysicalPotential reconstruct_psi(const CylinderField& phi, const PlateField& v);

// G evaluated in physical variables: eps^2 |grad' psi|^2 + (d psi/dz)^2 at z = u(x).
PlateField compute_G_physical(const PhysicalPotential& psi, const Parameters& p);

// Electrostatic energy integrated over the physical gap region column by column.
double physical_electrostatic_energy(const PhysicalPotential& psi, const Parameters& p,
                                     int z_points = 0);

}  // namespace memsflow
