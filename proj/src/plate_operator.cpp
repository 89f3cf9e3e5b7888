#include "memsflow/plate_operator.hpp"

#include "memsflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>

namespace memsflow {
namespace {

constexpr double kPi = std::numbers::pi;

double wavenumber_squared(int k, int l) { return (double(k) * k + double(l) * l) * kPi * kPi; }

// Coefficients live on (1/4)-normalized modes: ||sin(k pi x) sin(l pi y)||^2 = 1/4.
template <class Weight>
double modal_sum(const SpectralField& c, Weight&& weight) {
    const int n = c.grid().n;
    double s = 0.0;
    for (int k = 1; k <= n; ++k)
        for (int l = 1; l <= n; ++l) s += weight(k, l) * c(k, l) * c(k, l);
    return 0.25 * s;
}

}  // namespace

double OperatorSpectrum::eigenvalue(int k, int l, const Parameters& p) {
    const double w = wavenumber_squared(k, l);
    return p.beta * w * w + p.tau * w;
}

OperatorSpectrum::OperatorSpectrum(const PlateGrid& grid, const Parameters& p)
    : grid_(grid), mu_(grid.interior_size()) {
    for (int k = 1; k <= grid.n; ++k)
        for (int l = 1; l <= grid.n; ++l) mu_[grid.interior_index(k, l)] = eigenvalue(k, l, p);
}

double OperatorSpectrum::min() const { return *std::min_element(mu_.begin(), mu_.end()); }
double OperatorSpectrum::max() const { return *std::max_element(mu_.begin(), mu_.end()); }

PlateField apply_A(const PlateField& v, const Parameters& p) {
    SpectralField c = to_spectral(v);
    for (int k = 1; k <= c.grid().n; ++k)
        for (int l = 1; l <= c.grid().n; ++l) c(k, l) *= OperatorSpectrum::eigenvalue(k, l, p);
    return to_nodal(c);
}

PlateField apply_A_stencil(const PlateField& v, const Parameters& p) {
    PlateField lap = laplacian(v);
    PlateField out = laplacian(lap);
    out *= p.beta;
    lap *= p.tau;
    out -= lap;
    return out;
}

PlateField semigroup(const PlateField& v, double t, const Parameters& p) {
    if (t < 0.0) throw InvalidParameter("semigroup: negative time");
    SpectralField c = to_spectral(v);
    for (int k = 1; k <= c.grid().n; ++k)
        for (int l = 1; l <= c.grid().n; ++l)
            c(k, l) *= std::exp(-t * OperatorSpectrum::eigenvalue(k, l, p));
    return to_nodal(c);
}

double quadratic_form(const PlateField& v, const Parameters& p) {
    return modal_sum(to_spectral(v),
                     [&](int k, int l) { return OperatorSpectrum::eigenvalue(k, l, p); });
}

double laplacian_norm_squared(const PlateField& v) {
    return modal_sum(to_spectral(v), [](int k, int l) {
        const double w = wavenumber_squared(k, l);
        return w * w;
    });
}

SpectrumReport spectrum_check(const Parameters& p, const PlateGrid& grid, int fields,
                              std::uint64_t seed) {
    SpectrumReport r;
    r.min_eigenvalue = OperatorSpectrum(grid, p).min();
    r.expected_min = 4.0 * p.beta * std::pow(kPi, 4) + 2.0 * p.tau * kPi * kPi;
    r.coercivity_constant = 0.5 * p.beta * (1.0 + p.sigma);
    r.worst_ratio = std::numeric_limits<double>::infinity();
    r.fields = fields;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int f = 0; f < fields; ++f) {
        PlateField v(grid);
        for (double& x : v.values()) x = normal(rng);
        const double form = quadratic_form(v, p);
        const double lap = laplacian_norm_squared(v);
        r.worst_ratio = std::min(r.worst_ratio, form / lap);
        if (form < r.coercivity_constant * lap) ++r.violations;
    }
    return r;
}

double boundary_identity_check(const PlateField& w, DerivativeRoute route) {
    const PlateDerivatives d = plate_derivatives(w, route);
    FullPlateArray integrand(w.grid());
    for (std::size_t q = 0; q < integrand.values.size(); ++q)
        integrand.values[q] = d.d12.values[q] * d.d12.values[q] - d.d11.values[q] * d.d22.values[q];
    return integrate_full(integrand);
}

PlateField duhamel_step(const PlateField& u, const PlateField& g, double dt, const Parameters& p) {
    return DuhamelStepper(u.grid(), p, dt).step(u, g).u;
}

DuhamelStepper::DuhamelStepper(const PlateGrid& grid, const Parameters& p, double dt)
    : spectrum_(grid, p), params_(p), dt_(dt) {
    if (!(dt > 0.0)) throw InvalidParameter("time step must be positive");
    const auto& mu = spectrum_.values();
    decay_.resize(mu.size());
    gain_.resize(mu.size());
    dissipation_weight_.resize(mu.size());
    for (std::size_t q = 0; q < mu.size(); ++q) {
        decay_[q] = std::exp(-dt * mu[q]);
        gain_[q] = -std::expm1(-dt * mu[q]) / mu[q];
        dissipation_weight_[q] = 0.25 * -std::expm1(-2.0 * dt * mu[q]) / (2.0 * mu[q]);
    }
}

DuhamelStepper::Result DuhamelStepper::step(const PlateField& u, const PlateField& g) const {
    return step_spectral(to_spectral(u), to_spectral(g));
}

DuhamelStepper::Result DuhamelStepper::step_spectral(const SpectralField& u_hat,
                                                     const SpectralField& g_hat) const {
    const auto& mu = spectrum_.values();
    const double lambda = params_.lambda;
    SpectralField next(u_hat.grid());
    auto out = next.coefficients();
    auto uc = u_hat.coefficients();
    auto gc = g_hat.coefficients();
    double dissipation = 0.0;
    for (std::size_t q = 0; q < out.size(); ++q) {
        out[q] = decay_[q] * uc[q] - lambda * gain_[q] * gc[q];
        const double rate = mu[q] * uc[q] + lambda * gc[q];
        dissipation += dissipation_weight_[q] * rate * rate;
    }
    return {to_nodal(next), dissipation};
}

}  // namespace memsflow
