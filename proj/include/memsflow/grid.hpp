#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace memsflow {

// Uniform grid on the unit square with n interior nodes per axis.
// Full indices run over 0..n+1; interior indices over 1..n.
struct PlateGrid {
    int n = 0;

    static PlateGrid make(int n);

    double h() const { return 1.0 / (n + 1); }
    double x(int i) const { return i * h(); }
    int full_extent() const { return n + 2; }
    std::size_t interior_size() const { return static_cast<std::size_t>(n) * n; }
    std::size_t full_size() const { return static_cast<std::size_t>(n + 2) * (n + 2); }
    std::size_t interior_index(int i, int j) const {
        return static_cast<std::size_t>(i - 1) * n + (j - 1);
    }
    std::size_t full_index(int i, int j) const {
        return static_cast<std::size_t>(i) * (n + 2) + j;
    }
    bool operator==(const PlateGrid&) const = default;
};

// Plate grid extruded over eta in [0,1] with m cells (m+1 layers).
struct CylinderGrid {
    PlateGrid plate;
    int m = 0;

    static CylinderGrid make(int n, int m);

    double h_eta() const { return 1.0 / m; }
    double eta(int k) const { return static_cast<double>(k) / m; }
    std::size_t size() const { return plate.full_size() * (m + 1); }
    // Columns are contiguous: k varies fastest.
    std::size_t index(int i, int j, int k) const {
        return plate.full_index(i, j) * (m + 1) + k;
    }
    bool operator==(const CylinderGrid&) const = default;
};

// Nodal deformation on the interior of a plate grid. The trace on the
// boundary is a single uniform value, zero unless set explicitly.
class PlateField {
public:
    PlateField() = default;
    explicit PlateField(const PlateGrid& grid, double boundary = 0.0);
    PlateField(const PlateGrid& grid, std::vector<double> values, double boundary = 0.0);

    static PlateField constant(const PlateGrid& grid, double c);
    static PlateField sample(const PlateGrid& grid, const std::function<double(double, double)>& f,
                             double boundary = 0.0);

    const PlateGrid& grid() const { return grid_; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    double boundary() const { return boundary_; }
    void set_boundary(double b) { boundary_ = b; }

    double& operator()(int i, int j) { return values_[grid_.interior_index(i, j)]; }
    double operator()(int i, int j) const { return values_[grid_.interior_index(i, j)]; }
    // Value at a full index, boundary nodes included.
    double at(int i, int j) const;

    double min() const;
    double max() const;
    bool all_finite() const;

    PlateField& operator+=(const PlateField& o);
    PlateField& operator-=(const PlateField& o);
    PlateField& operator*=(double s);

private:
    PlateGrid grid_{};
    std::vector<double> values_;
    double boundary_ = 0.0;
};

PlateField operator+(PlateField a, const PlateField& b);
PlateField operator-(PlateField a, const PlateField& b);
PlateField operator*(double s, PlateField a);

// Coefficients of the expansion v = sum_{k,l} c_kl sin(k pi x1) sin(l pi x2).
class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(const PlateGrid& grid);
    SpectralField(const PlateGrid& grid, std::vector<double> coefficients);

    const PlateGrid& grid() const { return grid_; }
    std::span<double> coefficients() { return coefficients_; }
    std::span<const double> coefficients() const { return coefficients_; }
    double& operator()(int k, int l) { return coefficients_[grid_.interior_index(k, l)]; }
    double operator()(int k, int l) const { return coefficients_[grid_.interior_index(k, l)]; }

private:
    PlateGrid grid_{};
    std::vector<double> coefficients_;
};

// Node values on the full (n+2)^2 plate grid, boundary nodes included.
struct FullPlateArray {
    PlateGrid grid;
    std::vector<double> values;

    explicit FullPlateArray(const PlateGrid& g) : grid(g), values(g.full_size(), 0.0) {}
    double& operator()(int i, int j) { return values[grid.full_index(i, j)]; }
    double operator()(int i, int j) const { return values[grid.full_index(i, j)]; }
};

// Node values on the full cylinder grid, boundary layers included.
class CylinderField {
public:
    CylinderField() = default;
    explicit CylinderField(const CylinderGrid& grid, double fill = 0.0);

    static CylinderField sample(const CylinderGrid& grid,
                                const std::function<double(double, double, double)>& f);

    const CylinderGrid& grid() const { return grid_; }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    double& operator()(int i, int j, int k) { return values_[grid_.index(i, j, k)]; }
    double operator()(int i, int j, int k) const { return values_[grid_.index(i, j, k)]; }

private:
    CylinderGrid grid_{};
    std::vector<double> values_;
};

struct GradientPair {
    PlateField d1;
    PlateField d2;
};

GradientPair gradient(const PlateField& v);
PlateField laplacian(const PlateField& v);
PlateField mixed_second(const PlateField& v);

// Gradient at every node of the full grid. Interior nodes use central
// differences against the boundary value; boundary nodes use a one-sided
// three-point formula normal to the edge.
struct FullGradient {
    FullPlateArray d1;
    FullPlateArray d2;
};
FullGradient full_gradient(const PlateField& v);

enum class DerivativeRoute { Spectral, Stencil };

// First and second derivatives sampled on the full grid.
struct PlateDerivatives {
    FullPlateArray d1, d2, d11, d12, d22;
};
// Spectral route requires a zero boundary value. The stencil route extends
// the field across each edge by odd reflection about the boundary value.
PlateDerivatives plate_derivatives(const PlateField& v, DerivativeRoute route);

SpectralField to_spectral(const PlateField& v);
PlateField to_nodal(const SpectralField& c);

double integrate_plate(const PlateField& v);
double integrate_full(const FullPlateArray& a);
double integrate_cylinder(const CylinderField& w);

// Discrete L2 inner product and norm over the plate (trapezoidal weights).
double inner(const PlateField& a, const PlateField& b);
double l2_norm(const PlateField& v);

}  // namespace memsflow
