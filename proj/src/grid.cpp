#include "memsflow/grid.hpp"

#include "memsflow/errors.hpp"
#include "memsflow/sine_transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace memsflow {

PlateGrid PlateGrid::make(int n) {
    if (n < 4) throw InvalidParameter("plate grid needs n >= 4, got " + std::to_string(n));
    return PlateGrid{n};
}

CylinderGrid CylinderGrid::make(int n, int m) {
    if (m < 4) throw InvalidParameter("cylinder grid needs m >= 4, got " + std::to_string(m));
    return CylinderGrid{PlateGrid::make(n), m};
}

// ---------------------------------------------------------------- PlateField

PlateField::PlateField(const PlateGrid& grid, double boundary)
    : grid_(grid), values_(grid.interior_size(), 0.0), boundary_(boundary) {}

PlateField::PlateField(const PlateGrid& grid, std::vector<double> values, double boundary)
    : grid_(grid), values_(std::move(values)), boundary_(boundary) {
    if (values_.size() != grid_.interior_size())
        throw InvalidParameter("plate field: value count does not match grid");
}

PlateField PlateField::constant(const PlateGrid& grid, double c) {
    return PlateField(grid, std::vector<double>(grid.interior_size(), c), c);
}

PlateField PlateField::sample(const PlateGrid& grid,
                              const std::function<double(double, double)>& f, double boundary) {
    PlateField v(grid, boundary);
    for (int i = 1; i <= grid.n; ++i)
        for (int j = 1; j <= grid.n; ++j) v(i, j) = f(grid.x(i), grid.x(j));
    return v;
}

double PlateField::at(int i, int j) const {
    if (i <= 0 || j <= 0 || i > grid_.n || j > grid_.n) return boundary_;
    return values_[grid_.interior_index(i, j)];
}

double PlateField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double PlateField::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool PlateField::all_finite() const {
    return std::isfinite(boundary_) &&
           std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

PlateField& PlateField::operator+=(const PlateField& o) {
    for (std::size_t q = 0; q < values_.size(); ++q) values_[q] += o.values_[q];
    boundary_ += o.boundary_;
    return *this;
}

PlateField& PlateField::operator-=(const PlateField& o) {
    for (std::size_t q = 0; q < values_.size(); ++q) values_[q] -= o.values_[q];
    boundary_ -= o.boundary_;
    return *this;
}

PlateField& PlateField::operator*=(double s) {
    for (double& x : values_) x *= s;
    boundary_ *= s;
    return *this;
}

PlateField operator+(PlateField a, const PlateField& b) { return a += b; }
PlateField operator-(PlateField a, const PlateField& b) { return a -= b; }
PlateField operator*(double s, PlateField a) { return a *= s; }

// ------------------------------------------------------------- SpectralField

SpectralField::SpectralField(const PlateGrid& grid)
    : grid_(grid), coefficients_(grid.interior_size(), 0.0) {}

SpectralField::SpectralField(const PlateGrid& grid, std::vector<double> coefficients)
    : grid_(grid), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() != grid_.interior_size())
        throw InvalidParameter("spectral field: coefficient count does not match grid");
}

// ------------------------------------------------------------- CylinderField

CylinderField::CylinderField(const CylinderGrid& grid, double fill)
    : grid_(grid), values_(grid.size(), fill) {}

CylinderField CylinderField::sample(const CylinderGrid& grid,
                                    const std::function<double(double, double, double)>& f) {
    CylinderField w(grid);
    const int e = grid.plate.full_extent();
    for (int i = 0; i < e; ++i)
        for (int j = 0; j < e; ++j)
            for (int k = 0; k <= grid.m; ++k)
                w(i, j, k) = f(grid.plate.x(i), grid.plate.x(j), grid.eta(k));
    return w;
}

// ------------------------------------------------------------------ stencils

GradientPair gradient(const PlateField& v) {
    const PlateGrid& g = v.grid();
    const double inv2h = 0.5 / g.h();
    GradientPair out{PlateField(g), PlateField(g)};
    for (int i = 1; i <= g.n; ++i)
        for (int j = 1; j <= g.n; ++j) {
            out.d1(i, j) = (v.at(i + 1, j) - v.at(i - 1, j)) * inv2h;
            out.d2(i, j) = (v.at(i, j + 1) - v.at(i, j - 1)) * inv2h;
        }
    return out;
}

PlateField laplacian(const PlateField& v) {
    const PlateGrid& g = v.grid();
    const double invh2 = 1.0 / (g.h() * g.h());
    PlateField out(g);
    for (int i = 1; i <= g.n; ++i)
        for (int j = 1; j <= g.n; ++j)
            out(i, j) = (v.at(i + 1, j) + v.at(i - 1, j) + v.at(i, j + 1) + v.at(i, j - 1) -
                         4.0 * v(i, j)) *
                        invh2;
    return out;
}

PlateField mixed_second(const PlateField& v) {
    const PlateGrid& g = v.grid();
    const double inv4h2 = 0.25 / (g.h() * g.h());
    PlateField out(g);
    for (int i = 1; i <= g.n; ++i)
        for (int j = 1; j <= g.n; ++j)
            out(i, j) = (v.at(i + 1, j + 1) - v.at(i + 1, j - 1) - v.at(i - 1, j + 1) +
                         v.at(i - 1, j - 1)) *
                        inv4h2;
    return out;
}

namespace {

// Applies the full-grid first-derivative stencil along one axis. `emit`
// receives (target node, source node, weight) for every stencil entry.
template <class Emit>
void first_derivative_stencil(const PlateGrid& g, int axis, Emit&& emit) {
    const int e = g.full_extent();
    const double inv2h = 0.5 / g.h();
    for (int i = 0; i < e; ++i)
        for (int j = 0; j < e; ++j) {
            const int s = axis == 0 ? i : j;
            auto node = [&](int offset) {
                return axis == 0 ? std::pair{i + offset, j} : std::pair{i, j + offset};
            };
            if (s == 0) {
                emit(i, j, node(0), -3.0 * inv2h);
                emit(i, j, node(1), 4.0 * inv2h);
                emit(i, j, node(2), -1.0 * inv2h);
            } else if (s == e - 1) {
                emit(i, j, node(0), 3.0 * inv2h);
                emit(i, j, node(-1), -4.0 * inv2h);
                emit(i, j, node(-2), 1.0 * inv2h);
            } else {
                emit(i, j, node(1), inv2h);
                emit(i, j, node(-1), -inv2h);
            }
        }
}

}  // namespace

FullGradient full_gradient(const PlateField& v) {
    const PlateGrid& g = v.grid();
    FullGradient out{FullPlateArray(g), FullPlateArray(g)};
    first_derivative_stencil(g, 0, [&](int i, int j, std::pair<int, int> src, double w) {
        out.d1(i, j) += w * v.at(src.first, src.second);
    });
    first_derivative_stencil(g, 1, [&](int i, int j, std::pair<int, int> src, double w) {
        out.d2(i, j) += w * v.at(src.first, src.second);
    });
    return out;
}

namespace {

// Sine-series derivatives of a zero-trace field evaluated on the full grid.
PlateDerivatives spectral_derivatives(const PlateField& v) {
    const PlateGrid& g = v.grid();
    const int n = g.n;
    const int e = n + 2;
    const double pi = std::numbers::pi;
    const SpectralField c = to_spectral(v);
    PlateDerivatives d{FullPlateArray(g), FullPlateArray(g), FullPlateArray(g),
                       FullPlateArray(g), FullPlateArray(g)};

    // Pure second derivatives vanish on the boundary and are sine series inside.
    for (int which = 0; which < 2; ++which) {
        SpectralField s(g);
        for (int k = 1; k <= n; ++k)
            for (int l = 1; l <= n; ++l) {
                const double f = which == 0 ? k * pi : l * pi;
                s(k, l) = -f * f * c(k, l);
            }
        const PlateField nodal = to_nodal(s);
        FullPlateArray& out = which == 0 ? d.d11 : d.d22;
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j) out(i, j) = nodal(i, j);
    }

    // Mixed derivative: cosine series in both directions, all nodes.
    {
        std::vector<double> buf(static_cast<std::size_t>(e) * e, 0.0);
        for (int k = 1; k <= n; ++k)
            for (int l = 1; l <= n; ++l) buf[k * e + l] = k * l * pi * pi * c(k, l);
        const int ext[2] = {e, e};
        const transform::Kind kinds[2] = {transform::Kind::Cosine, transform::Kind::Cosine};
        transform::apply(ext, kinds, buf);
        for (int i = 0; i < e; ++i)
            for (int j = 0; j < e; ++j) d.d12(i, j) = 0.25 * buf[i * e + j];
    }

    // First derivatives: cosine series along the differentiated axis.
    for (int axis = 0; axis < 2; ++axis) {
        std::vector<double> buf(static_cast<std::size_t>(e) * n, 0.0);
        for (int k = 1; k <= n; ++k)
            for (int l = 1; l <= n; ++l) {
                const int a = axis == 0 ? k : l;
                const int b = axis == 0 ? l : k;
                buf[a * n + (b - 1)] = a * pi * c(k, l);
            }
        const int ext[2] = {e, n};
        const transform::Kind kinds[2] = {transform::Kind::Cosine, transform::Kind::Sine};
        transform::apply(ext, kinds, buf);
        FullPlateArray& out = axis == 0 ? d.d1 : d.d2;
        for (int a = 0; a < e; ++a)
            for (int b = 1; b <= n; ++b) {
                const double val = 0.25 * buf[a * n + (b - 1)];
                if (axis == 0)
                    out(a, b) = val;
                else
                    out(b, a) = val;
            }
    }
    return d;
}

PlateDerivatives stencil_derivatives(const PlateField& v) {
    const PlateGrid& g = v.grid();
    const int n = g.n;
    const double h = g.h();
    const double b = v.boundary();

    // Odd reflection about b: u(-i) = 2b - u(i), composed across both axes.
    auto ext = [&](int i, int j) {
        double sign = 1.0, shift = 0.0;
        if (i < 0 || i > n + 1) {
            i = i < 0 ? -i : 2 * (n + 1) - i;
            shift = 2.0 * b;
            sign = -1.0;
        }
        if (j < 0 || j > n + 1) {
            j = j < 0 ? -j : 2 * (n + 1) - j;
            shift += sign * 2.0 * b;
            sign = -sign;
        }
        return shift + sign * v.at(i, j);
    };

    FullGradient grad = full_gradient(v);
    PlateDerivatives d{std::move(grad.d1), std::move(grad.d2), FullPlateArray(g),
                       FullPlateArray(g), FullPlateArray(g)};
    const double invh2 = 1.0 / (h * h);
    for (int i = 0; i <= n + 1; ++i)
        for (int j = 0; j <= n + 1; ++j) {
            const double c0 = ext(i, j);
            d.d11(i, j) = (ext(i + 1, j) - 2.0 * c0 + ext(i - 1, j)) * invh2;
            d.d22(i, j) = (ext(i, j + 1) - 2.0 * c0 + ext(i, j - 1)) * invh2;
            d.d12(i, j) =
                (ext(i + 1, j + 1) - ext(i + 1, j - 1) - ext(i - 1, j + 1) + ext(i - 1, j - 1)) *
                0.25 * invh2;
        }
    return d;
}

}  // namespace

PlateDerivatives plate_derivatives(const PlateField& v, DerivativeRoute route) {
    if (route == DerivativeRoute::Spectral) {
        if (v.boundary() != 0.0)
            throw InvalidParameter("spectral derivatives need a zero boundary value");
        return spectral_derivatives(v);
    }
    return stencil_derivatives(v);
}

// ---------------------------------------------------------------- transforms

SpectralField to_spectral(const PlateField& v) {
    const PlateGrid& g = v.grid();
    std::vector<double> buf(v.values().begin(), v.values().end());
    transform::sine_2d(g.n, g.n, buf);
    const double scale = 1.0 / ((g.n + 1.0) * (g.n + 1.0));
    for (double& x : buf) x *= scale;
    return SpectralField(g, std::move(buf));
}

PlateField to_nodal(const SpectralField& c) {
    const PlateGrid& g = c.grid();
    std::vector<double> buf(c.coefficients().begin(), c.coefficients().end());
    transform::sine_2d(g.n, g.n, buf);
    for (double& x : buf) x *= 0.25;
    return PlateField(g, std::move(buf));
}

// ---------------------------------------------------------------- quadrature

double integrate_plate(const PlateField& v) {
    const PlateGrid& g = v.grid();
    double s = 0.0;
    for (double x : v.values()) s += x;
    s += v.boundary() * (2.0 * g.n + 1.0);
    return s * g.h() * g.h();
}

namespace {
double trapezoid_weight(int i, int last) { return (i == 0 || i == last) ? 0.5 : 1.0; }
}  // namespace

double integrate_full(const FullPlateArray& a) {
    const PlateGrid& g = a.grid;
    const int last = g.n + 1;
    double s = 0.0;
    for (int i = 0; i <= last; ++i) {
        double row = 0.0;
        for (int j = 0; j <= last; ++j) row += trapezoid_weight(j, last) * a(i, j);
        s += trapezoid_weight(i, last) * row;
    }
    return s * g.h() * g.h();
}

double integrate_cylinder(const CylinderField& w) {
    const CylinderGrid& g = w.grid();
    const int last = g.plate.n + 1;
    double s = 0.0;
    for (int i = 0; i <= last; ++i)
        for (int j = 0; j <= last; ++j) {
            double col = 0.0;
            for (int k = 0; k <= g.m; ++k) col += trapezoid_weight(k, g.m) * w(i, j, k);
            s += trapezoid_weight(i, last) * trapezoid_weight(j, last) * col;
        }
    return s * g.plate.h() * g.plate.h() * g.h_eta();
}

double inner(const PlateField& a, const PlateField& b) {
    const PlateGrid& g = a.grid();
    double s = 0.0;
    for (std::size_t q = 0; q < a.values().size(); ++q) s += a.values()[q] * b.values()[q];
    s += a.boundary() * b.boundary() * (2.0 * g.n + 1.0);
    return s * g.h() * g.h();
}

double l2_norm(const PlateField& v) { return std::sqrt(inner(v, v)); }

}  // namespace memsflow
