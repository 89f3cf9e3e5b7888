#pragma once

#include "memsflow/grid.hpp"
#include "memsflow/parameters.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace memsflow {

// Eigenvalues of beta*Bilaplacian - tau*Laplacian with hinged edges on the
// unit square, one per sine mode (k, l) with 1 <= k, l <= n.
class OperatorSpectrum {
public:
    OperatorSpectrum(const PlateGrid& grid, const Parameters& p);

    const PlateGrid& grid() const { return grid_; }
    double operator()(int k, int l) const { return mu_[grid_.interior_index(k, l)]; }
    const std::vector<double>& values() const { return mu_; }
    double min() const;
    double max() const;

    static double eigenvalue(int k, int l, const Parameters& p);

private:
    PlateGrid grid_;
    std::vector<double> mu_;
};

PlateField apply_A(const PlateField& v, const Parameters& p);
// Stencil composition beta*lap(lap v) - tau*lap v, for cross-checks.
PlateField apply_A_stencil(const PlateField& v, const Parameters& p);
PlateField semigroup(const PlateField& v, double t, const Parameters& p);

// <Av, v> and ||lap v||^2 evaluated exactly in the sine basis.
double quadratic_form(const PlateField& v, const Parameters& p);
double laplacian_norm_squared(const PlateField& v);

struct SpectrumReport {
    double min_eigenvalue = 0.0;
    double expected_min = 0.0;  // 4 beta pi^4 + 2 tau pi^2
    double coercivity_constant = 0.0;  // beta (1 + sigma) / 2
    // Smallest <Av,v> / ||lap v||^2 over the sampled fields.
    double worst_ratio = 0.0;
    int fields = 0;
    int violations = 0;
    bool passed() const { return min_eigenvalue > 0.0 && violations == 0; }
};

SpectrumReport spectrum_check(const Parameters& p, const PlateGrid& grid, int fields = 100,
                              std::uint64_t seed = 1);

// Integral of (d12 w)^2 - d11 w * d22 w over the square. Vanishes in the
// continuum for fields with a zero trace because the edges are straight.
double boundary_identity_check(const PlateField& w,
                               DerivativeRoute route = DerivativeRoute::Stencil);

// One exponential step of the mild formulation with g frozen over the step.
PlateField duhamel_step(const PlateField& u, const PlateField& g, double dt, const Parameters& p);

// Caches the decay factors for a fixed step so a time loop pays only for the
// transforms.
class DuhamelStepper {
public:
    DuhamelStepper(const PlateGrid& grid, const Parameters& p, double dt);

    struct Result {
        PlateField u;
        // Integral over the step of ||du/dt||^2, exact for frozen g.
        double dissipation = 0.0;
    };
    Result step(const PlateField& u, const PlateField& g) const;
    Result step_spectral(const SpectralField& u_hat, const SpectralField& g_hat) const;

    double dt() const { return dt_; }
    const OperatorSpectrum& spectrum() const { return spectrum_; }

private:
    OperatorSpectrum spectrum_;
    Parameters params_;
    double dt_;
    std::vector<double> decay_, gain_, dissipation_weight_;
};

}  // namespace memsflow
