#include "memsflow/potential.hpp"

#include "memsflow/errors.hpp"
#include "memsflow/sine_transform.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace memsflow {
namespace {

constexpr double kGauss[2] = {0.5 - 0.5 / std::numbers::sqrt3, 0.5 + 0.5 / std::numbers::sqrt3};

void require_admissible(const PlateField& v, const char* where) {
    const double lo = std::min(v.min(), v.boundary());
    if (!(lo > -1.0) || !v.all_finite()) {
        std::ostringstream os;
        os << where << ": deformation not admissible (min v = " << lo << ")";
        throw NonAdmissible(os.str());
    }
}

// Bilinear shape data at one Gauss point of a plate cell.
// Corner c has offsets (c & 1, c >> 1).
struct PlateGaussPoint {
    double weight;
    double shape[4];
    double d1[4];
    double d2[4];
    double v, p1, p2;
};

// Visits the four Gauss points of every plate cell (I, J), 0 <= I, J <= n.
// Deformation and slope are those of the bilinear interpolant of v.
template <class Visit>
void for_each_plate_gauss(const PlateField& v, Visit&& visit) {
    const PlateGrid& g = v.grid();
    const double h = g.h();
    const double w = 0.25 * h * h;
    for (int I = 0; I <= g.n; ++I)
        for (int J = 0; J <= g.n; ++J)
            for (int s = 0; s < 2; ++s)
                for (int t = 0; t < 2; ++t) {
                    PlateGaussPoint q{};
                    q.weight = w;
                    const double xs[2] = {1.0 - kGauss[s], kGauss[s]};
                    const double ys[2] = {1.0 - kGauss[t], kGauss[t]};
                    const double dx[2] = {-1.0 / h, 1.0 / h};
                    for (int c = 0; c < 4; ++c) {
                        const int a = c & 1, b = c >> 1;
                        q.shape[c] = xs[a] * ys[b];
                        q.d1[c] = dx[a] * ys[b];
                        q.d2[c] = xs[a] * dx[b];
                        q.v += q.shape[c] * v.at(I + a, J + b);
                        q.p1 += q.d1[c] * v.at(I + a, J + b);
                        q.p2 += q.d2[c] * v.at(I + a, J + b);
                    }
                    visit(I, J, q);
                }
}

}  // namespace

bool NodeCoefficients::positive_definite() const {
    const auto a = alpha();
    const double m1 = a[0][0];
    const double m2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    const double m3 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                      a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                      a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    return m1 > 0.0 && m2 > 0.0 && m3 > 0.0;
}

OperatorCoefficients assemble_coefficients(const PlateField& v, const Parameters& p,
                                           const CylinderGrid& grid) {
    require_admissible(v, "assemble_coefficients");
    const PlateDerivatives d = plate_derivatives(v, DerivativeRoute::Stencil);
    const double e2 = p.eps * p.eps;
    OperatorCoefficients out{grid, std::vector<NodeCoefficients>(grid.size())};
    const int e = grid.plate.full_extent();
    for (int i = 0; i < e; ++i)
        for (int j = 0; j < e; ++j) {
            const double gap = 1.0 + v.at(i, j);
            const double V1 = d.d1(i, j) / gap;
            const double V2 = d.d2(i, j) / gap;
            const double V2sum = V1 * V1 + V2 * V2;
            const double lap = d.d11(i, j) + d.d22(i, j);
            for (int k = 0; k <= grid.m; ++k) {
                const double eta = grid.eta(k);
                NodeCoefficients& c = out.nodes[grid.index(i, j, k)];
                c.a1 = e2;
                c.a2 = -2.0 * e2 * eta * V1;
                c.a3 = -2.0 * e2 * eta * V2;
                c.a4 = 1.0 / (gap * gap) + e2 * eta * eta * V2sum;
                c.b1 = e2 * V1;
                c.b2 = e2 * V2;
                c.b3 = -e2 * eta * V2sum;
                c.source = e2 * eta * (2.0 * V2sum - lap / gap);
            }
        }
    return out;
}

// ------------------------------------------------------------------- solver

struct PotentialSolver::Impl {
    CylinderGrid grid;
    Parameters params;
    SolverOptions opt;
    int n = 0, m = 0, len = 0;
    std::size_t unknowns = 0, plane = 0;

    // Vertical element integrals, indexed [k][dk + 1].
    std::vector<std::array<double, 3>> mass, mixed, stiff, stiff2;
    std::array<std::ptrdiff_t, 27> offsets{};
    // Unknowns are ordered (i, j, k) with k fastest; column (i, j) starts at
    // ((i-1) n + (j-1)) (m-1). Stencil entry o of unknown u is stencil[o * unknowns + u].
    std::vector<double> stencil;
    // Per plate mode: LDL^T factors of the vertical tridiagonal system, indexed [q * plane + mode].
    std::vector<double> tri_dinv, tri_lower, tri_upper;
    std::vector<double> jacobi;
    std::vector<double> last, prev;  // previous interior solutions
    std::vector<double> padded, work, res, zvec, pvec, apvec;

    Impl(const CylinderGrid& g, const Parameters& p, SolverOptions o);
    void assemble(const PlateField& v);
    void build_preconditioner(double a0, double c0, double d0);
    void apply_full(const double* xfull, double* y) const;
    void apply(const std::vector<double>& x, std::vector<double>& y);
    void precondition(const std::vector<double>& r, std::vector<double>& z);
    SolveStats solve_system(const std::vector<double>& rhs, std::vector<double>& x);
    void direct_solve(const std::vector<double>& rhs, std::vector<double>& x) const;
    std::size_t column_base(int i, int j) const {
        return (static_cast<std::size_t>(i - 1) * n + (j - 1)) * len;
    }
    PotentialField run(const PlateField& v, const std::function<double(double, double, double)>* rhs);
    double energy_pass(const PlateField& v, const CylinderField& phi, PlateField* gradient) const;
};

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t q = 0; q < a.size(); ++q) s += a[q] * b[q];
    return s;
}

}  // namespace

PotentialSolver::Impl::Impl(const CylinderGrid& g, const Parameters& p, SolverOptions o)
    : grid(g), params(p), opt(o), n(g.plate.n), m(g.m), len(g.m - 1) {
    params.validate();
    plane = static_cast<std::size_t>(n) * n;
    unknowns = plane * len;
    if (opt.max_iterations <= 0)
        opt.max_iterations = static_cast<int>(20.0 * std::sqrt(double(n) * n * m));

    const double he = g.h_eta();
    mass.assign(m + 1, {0, 0, 0});
    mixed.assign(m + 1, {0, 0, 0});
    stiff.assign(m + 1, {0, 0, 0});
    stiff2.assign(m + 1, {0, 0, 0});
    for (int e = 0; e < m; ++e)
        for (int r = 0; r < 2; ++r) {
            const double eta = (e + kGauss[r]) * he;
            const double w = 0.5 * he;
            const double L[2] = {1.0 - kGauss[r], kGauss[r]};
            const double dL[2] = {-1.0 / he, 1.0 / he};
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) {
                    const int k = e + a;
                    const int slot = b - a + 1;
                    mass[k][slot] += w * L[a] * L[b];
                    mixed[k][slot] += w * eta * L[a] * dL[b];
                    stiff[k][slot] += w * dL[a] * dL[b];
                    stiff2[k][slot] += w * eta * eta * dL[a] * dL[b];
                }
        }

    const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(n + 2) * (m + 1);
    const std::ptrdiff_t sj = m + 1;
    for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -1; dk <= 1; ++dk)
                offsets[((di + 1) * 3 + (dj + 1)) * 3 + (dk + 1)] = di * si + dj * sj + dk;

}

void PotentialSolver::Impl::assemble(const PlateField& v) {
    if (stencil.empty()) {
        stencil.assign(unknowns * 27, 0.0);
        padded.assign(grid.size(), 0.0);
        for (auto* buf : {&work, &res, &zvec, &pvec, &apvec}) buf->assign(unknowns, 0.0);
    }
    const PlateGrid& pg = grid.plate;
    const double e2 = params.eps * params.eps;
    const std::size_t np = pg.full_size();

    // Plate-direction element integrals per node pair, indexed [node * 9 + offset].
    std::vector<double> wa(np * 9, 0.0), wb(np * 9, 0.0), wc(np * 9, 0.0), wd(np * 9, 0.0);
    double sum_a = 0.0, sum_c = 0.0, sum_d = 0.0, sum_w = 0.0;
    for_each_plate_gauss(v, [&](int I, int J, const PlateGaussPoint& q) {
        const double gap = 1.0 + q.v;
        const double A = e2 * gap;
        const double B1 = -e2 * q.p1, B2 = -e2 * q.p2;
        const double C = 1.0 / gap;
        const double D = e2 * (q.p1 * q.p1 + q.p2 * q.p2) / gap;
        sum_a += q.weight * A;
        sum_c += q.weight * C;
        sum_d += q.weight * D;
        sum_w += q.weight;
        for (int cp = 0; cp < 4; ++cp) {
            const std::size_t node = pg.full_index(I + (cp & 1), J + (cp >> 1));
            for (int cq = 0; cq < 4; ++cq) {
                const int off = ((cq & 1) - (cp & 1) + 1) * 3 + ((cq >> 1) - (cp >> 1) + 1);
                const std::size_t idx = node * 9 + off;
                wa[idx] += q.weight * A * (q.d1[cp] * q.d1[cq] + q.d2[cp] * q.d2[cq]);
                wb[idx] += q.weight * (B1 * q.d1[cp] + B2 * q.d2[cp]) * q.shape[cq];
                wc[idx] += q.weight * C * q.shape[cp] * q.shape[cq];
                wd[idx] += q.weight * D * q.shape[cp] * q.shape[cq];
            }
        }
    });

    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            const std::size_t pn = pg.full_index(i, j);
            const std::size_t u0 = column_base(i, j);
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int o2 = (di + 1) * 3 + (dj + 1);
                    const int o2r = (1 - di) * 3 + (1 - dj);
                    const std::size_t qn = pg.full_index(i + di, j + dj);
                    const double A = wa[pn * 9 + o2], Bf = wb[pn * 9 + o2];
                    const double Br = wb[qn * 9 + o2r];
                    const double C = wc[pn * 9 + o2], D = wd[pn * 9 + o2];
                    for (int s = 0; s < 3; ++s) {
                        double* row = &stencil[(o2 * 3 + s) * unknowns + u0];
                        const int dk = s - 1;
                        for (int k = 1; k < m; ++k)
                            row[k - 1] = A * mass[k][s] + Bf * mixed[k][s] +
                                         Br * mixed[k + dk][2 - s] + C * stiff[k][s] +
                                         D * stiff2[k][s];
                    }
                }
        }

    if (opt.preconditioner == Preconditioner::FastSine) {
        build_preconditioner(sum_a / sum_w, sum_c / sum_w, sum_d / sum_w);
    } else {
        jacobi.resize(unknowns);
        for (std::size_t u = 0; u < unknowns; ++u) jacobi[u] = 1.0 / stencil[13 * unknowns + u];
    }
}

void PotentialSolver::Impl::build_preconditioner(double a0, double c0, double d0) {
    // Plate directions are diagonalized by the sine basis; each plate mode
    // leaves a tridiagonal system along eta with the mean coefficients.
    const double h = grid.plate.h();
    const double pi = std::numbers::pi;
    std::vector<double> sx(n), mx(n);
    for (int a = 1; a <= n; ++a) {
        const double c = std::cos(a * pi / (n + 1));
        sx[a - 1] = (2.0 - 2.0 * c) / h;
        mx[a - 1] = h * (2.0 + c) / 3.0;
    }
    tri_dinv.resize(unknowns);
    tri_lower.resize(unknowns);
    tri_upper.resize(unknowns);
    const double scale = 1.0 / (4.0 * (n + 1.0) * (n + 1.0));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            const double lat = a0 * (sx[a] * mx[b] + mx[a] * sx[b]);
            const double ver = mx[a] * mx[b];
            const std::size_t mode = static_cast<std::size_t>(a) * n + b;
            double dprev = 0.0, eprev = 0.0;
            for (int q = 0; q < len; ++q) {
                const int k = q + 1;
                const double diag = lat * mass[k][1] + ver * (c0 * stiff[k][1] + d0 * stiff2[k][1]);
                const double off = lat * mass[k][2] + ver * (c0 * stiff[k][2] + d0 * stiff2[k][2]);
                const double lower = q == 0 ? 0.0 : eprev / dprev;
                const double d = diag - lower * eprev;
                tri_lower[q * plane + mode] = lower;
                tri_dinv[q * plane + mode] = scale / d;
                tri_upper[q * plane + mode] = off / d;
                dprev = d;
                eprev = off;
            }
        }
}

void PotentialSolver::Impl::apply_full(const double* xfull, double* y) const {
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            const std::size_t u0 = column_base(i, j);
            const double* xb = xfull + grid.index(i, j, 1);
            double* yc = y + u0;
            std::fill(yc, yc + len, 0.0);
            for (int o = 0; o < 27; ++o) {
                const double* c = &stencil[o * unknowns + u0];
                const double* xs = xb + offsets[o];
                for (int q = 0; q < len; ++q) yc[q] += c[q] * xs[q];
            }
        }
}

void PotentialSolver::Impl::apply(const std::vector<double>& x, std::vector<double>& y) {
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            std::copy_n(&x[column_base(i, j)], len, &padded[grid.index(i, j, 1)]);
    apply_full(padded.data(), y.data());
}

void PotentialSolver::Impl::precondition(const std::vector<double>& rv, std::vector<double>& zv) {
    if (opt.preconditioner == Preconditioner::Jacobi) {
        for (std::size_t u = 0; u < unknowns; ++u) zv[u] = jacobi[u] * rv[u];
        return;
    }
    // Plane-major copy so that each eta layer is a contiguous plate block.
    for (std::size_t mode = 0; mode < plane; ++mode)
        for (int q = 0; q < len; ++q) work[q * plane + mode] = rv[mode * len + q];
    transform::sine_2d_batched(n, n, len, work);
    for (int q = 1; q < len; ++q) {
        double* w = &work[q * plane];
        const double* wp = &work[(q - 1) * plane];
        const double* lo = &tri_lower[q * plane];
        for (std::size_t mode = 0; mode < plane; ++mode) w[mode] -= lo[mode] * wp[mode];
    }
    {
        double* w = &work[(len - 1) * plane];
        const double* di = &tri_dinv[(len - 1) * plane];
        for (std::size_t mode = 0; mode < plane; ++mode) w[mode] *= di[mode];
    }
    for (int q = len - 2; q >= 0; --q) {
        double* w = &work[q * plane];
        const double* wn = &work[(q + 1) * plane];
        const double* di = &tri_dinv[q * plane];
        const double* up = &tri_upper[q * plane];
        for (std::size_t mode = 0; mode < plane; ++mode)
            w[mode] = w[mode] * di[mode] - up[mode] * wn[mode];
    }
    transform::sine_2d_batched(n, n, len, work);
    for (std::size_t mode = 0; mode < plane; ++mode)
        for (int q = 0; q < len; ++q) zv[mode * len + q] = work[q * plane + mode];
}

void PotentialSolver::Impl::direct_solve(const std::vector<double>& rhs,
                                         std::vector<double>& x) const {
    std::vector<int> slot(grid.size(), -1);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            for (int k = 1; k < m; ++k)
                slot[grid.index(i, j, k)] = static_cast<int>(column_base(i, j) + (k - 1));
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(unknowns * 27);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            for (int k = 1; k < m; ++k) {
                const std::size_t u = column_base(i, j) + (k - 1);
                const std::size_t full = grid.index(i, j, k);
                for (int o = 0; o < 27; ++o) {
                    const int col = slot[full + offsets[o]];
                    if (col >= 0)
                        triplets.emplace_back(static_cast<int>(u), col, stencil[o * unknowns + u]);
                }
            }
    const auto N = static_cast<Eigen::Index>(unknowns);
    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SolverDivergence("potential: factorization failed");
    const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), N);
    Eigen::Map<Eigen::VectorXd>(x.data(), N) = ldlt.solve(b);
}

SolveStats PotentialSolver::Impl::solve_system(const std::vector<double>& rhs,
                                               std::vector<double>& x) {
    SolveStats stats;
    const double bnorm = std::sqrt(dot(rhs, rhs));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return stats;
    }
    std::vector<double>& r = res;
    std::vector<double>& z = zvec;
    std::vector<double>& p = pvec;
    std::vector<double>& Ap = apvec;
    auto residual = [&] {
        apply(x, Ap);
        for (std::size_t u = 0; u < unknowns; ++u) r[u] = rhs[u] - Ap[u];
        return std::sqrt(dot(r, r)) / bnorm;
    };

    const double tol = opt.tolerance;
    bool converged = false;
    if (!opt.force_direct) {
        double rel = residual();
        // Restart from the true residual if recurrence drift hides a few digits.
        for (int restart = 0; restart < 3; ++restart) {
            if (rel <= tol) {
                converged = true;
                break;
            }
            precondition(r, z);
            p = z;
            double rz = dot(r, z);
            while (stats.iterations < opt.max_iterations) {
                apply(p, Ap);
                const double pAp = dot(p, Ap);
                if (!(pAp > 0.0)) break;
                const double alpha = rz / pAp;
                double rr = 0.0;
                for (std::size_t u = 0; u < unknowns; ++u) {
                    x[u] += alpha * p[u];
                    r[u] -= alpha * Ap[u];
                    rr += r[u] * r[u];
                }
                ++stats.iterations;
                if (std::sqrt(rr) <= 0.5 * tol * bnorm) break;
                precondition(r, z);
                const double rz_new = dot(r, z);
                const double beta = rz_new / rz;
                rz = rz_new;
                for (std::size_t u = 0; u < unknowns; ++u) p[u] = z[u] + beta * p[u];
            }
            rel = residual();
            if (stats.iterations >= opt.max_iterations) {
                converged = rel <= tol;
                break;
            }
        }
        stats.relative_residual = rel;
    }
    if (!converged) {
        if (opt.force_direct || (opt.direct_fallback && unknowns <= opt.direct_limit)) {
            direct_solve(rhs, x);
            stats.direct = true;
            stats.relative_residual = residual();
        } else {
            std::ostringstream os;
            os << "potential: residual " << stats.relative_residual << " above tolerance " << tol
               << " after " << stats.iterations << " iterations";
            throw SolverDivergence(os.str());
        }
    }
    return stats;
}

PotentialField PotentialSolver::Impl::run(const PlateField& v,
                                          const std::function<double(double, double, double)>* rhs) {
    if (!(v.grid() == grid.plate)) throw InvalidParameter("potential: plate grid mismatch");
    require_admissible(v, "solve_transformed_potential");
    assemble(v);

    const int e = grid.plate.full_extent();
    PotentialField phi(grid);
    for (int i = 0; i < e; ++i)
        for (int j = 0; j < e; ++j)
            for (int k = 0; k <= m; ++k) {
                const bool edge = i == 0 || j == 0 || i == e - 1 || j == e - 1 || k == 0 || k == m;
                if (edge) phi(i, j, k) = grid.eta(k);
            }
    std::vector<double> b(unknowns, 0.0);
    apply_full(phi.values().data(), b.data());
    for (double& val : b) val = -val;

    if (rhs) {
        // Load vector of -(1+v) * rhs against each trial function.
        const double he = grid.h_eta();
        const double h = grid.plate.h();
        for_each_plate_gauss(v, [&](int I, int J, const PlateGaussPoint& q) {
            double x1 = 0.0, x2 = 0.0;
            for (int c = 0; c < 4; ++c) {
                x1 += q.shape[c] * (I + (c & 1)) * h;
                x2 += q.shape[c] * (J + (c >> 1)) * h;
            }
            for (int el = 0; el < m; ++el)
                for (int r = 0; r < 2; ++r) {
                    const double eta = (el + kGauss[r]) * he;
                    const double val = q.weight * 0.5 * he * (1.0 + q.v) * (*rhs)(x1, x2, eta);
                    const double L[2] = {1.0 - kGauss[r], kGauss[r]};
                    for (int c = 0; c < 4; ++c)
                        for (int a = 0; a < 2; ++a) {
                            const int i = I + (c & 1), j = J + (c >> 1), k = el + a;
                            if (i < 1 || i > n || j < 1 || j > n || k < 1 || k >= m) continue;
                            b[column_base(i, j) + (k - 1)] -= val * q.shape[c] * L[a];
                        }
                }
        });
    }

    std::vector<double> x(unknowns);
    if (opt.warm_start && last.size() == unknowns) {
        x = last;
        if (opt.extrapolate && prev.size() == unknowns)
            for (std::size_t u = 0; u < unknowns; ++u) x[u] += last[u] - prev[u];
    } else {
        for (std::size_t u = 0; u < unknowns; ++u) x[u] = grid.eta(static_cast<int>(u % len) + 1);
    }

    phi.stats = solve_system(b, x);

    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            std::copy_n(&x[column_base(i, j)], len, &phi.values()[grid.index(i, j, 1)]);
    double excursion = 0.0;
    for (double val : phi.values()) excursion = std::max({excursion, val - 1.0, -val});
    phi.stats.bound_excursion = excursion;
    if (opt.warm_start) {
        prev = std::move(last);
        last = std::move(x);
    }
    return phi;
}

double PotentialSolver::Impl::energy_pass(const PlateField& v, const CylinderField& phi,
                                          PlateField* gradient) const {
    const PlateGrid& pg = grid.plate;
    const double e2 = params.eps * params.eps;
    const double he = grid.h_eta();
    FullPlateArray dv(pg);
    std::vector<double> col_f(m + 1), col_g1(m + 1), col_g2(m + 1);
    double energy = 0.0;

    for_each_plate_gauss(v, [&](int I, int J, const PlateGaussPoint& q) {
        std::fill(col_f.begin(), col_f.end(), 0.0);
        std::fill(col_g1.begin(), col_g1.end(), 0.0);
        std::fill(col_g2.begin(), col_g2.end(), 0.0);
        for (int c = 0; c < 4; ++c) {
            const int i = I + (c & 1), j = J + (c >> 1);
            const double* column = &phi.values()[grid.index(i, j, 0)];
            for (int k = 0; k <= m; ++k) {
                col_f[k] += q.shape[c] * column[k];
                col_g1[k] += q.d1[c] * column[k];
                col_g2[k] += q.d2[c] * column[k];
            }
        }
        const double gap = 1.0 + q.v;
        const double pp = q.p1 * q.p1 + q.p2 * q.p2;
        double column_energy = 0.0, sv = 0.0, sp1 = 0.0, sp2 = 0.0;
        for (int el = 0; el < m; ++el) {
            const double fe = (col_f[el + 1] - col_f[el]) / he;
            for (int r = 0; r < 2; ++r) {
                const double xi = kGauss[r];
                const double eta = (el + xi) * he;
                const double w = 0.5 * he;
                const double g1 = (1.0 - xi) * col_g1[el] + xi * col_g1[el + 1];
                const double g2 = (1.0 - xi) * col_g2[el] + xi * col_g2[el + 1];
                const double gg = g1 * g1 + g2 * g2;
                const double pg_dot = q.p1 * g1 + q.p2 * g2;
                const double k33 = (1.0 + e2 * eta * eta * pp) / gap;
                column_energy += w * (e2 * gap * gg - 2.0 * e2 * eta * pg_dot * fe + k33 * fe * fe);
                if (gradient) {
                    sv += w * (e2 * gg - k33 / gap * fe * fe);
                    const double cp = 2.0 * e2 * eta * eta * fe * fe / gap;
                    sp1 += w * (-2.0 * e2 * eta * fe * g1 + cp * q.p1);
                    sp2 += w * (-2.0 * e2 * eta * fe * g2 + cp * q.p2);
                }
            }
        }
        energy += q.weight * column_energy;
        if (gradient) {
            for (int c = 0; c < 4; ++c) {
                const int i = I + (c & 1), j = J + (c >> 1);
                dv(i, j) += q.weight * (q.shape[c] * sv + q.d1[c] * sp1 + q.d2[c] * sp2);
            }
        }
    });

    if (gradient) {
        PlateField gr(pg);
        for (int i = 1; i <= pg.n; ++i)
            for (int j = 1; j <= pg.n; ++j) gr(i, j) = dv(i, j);
        *gradient = std::move(gr);
    }
    return energy;
}

PotentialSolver::PotentialSolver(const CylinderGrid& grid, const Parameters& p, SolverOptions options)
    : impl_(std::make_unique<Impl>(grid, p, options)) {}
PotentialSolver::~PotentialSolver() = default;
PotentialSolver::PotentialSolver(PotentialSolver&&) noexcept = default;
PotentialSolver& PotentialSolver::operator=(PotentialSolver&&) noexcept = default;

const CylinderGrid& PotentialSolver::grid() const { return impl_->grid; }
const Parameters& PotentialSolver::parameters() const { return impl_->params; }

PotentialField PotentialSolver::solve(const PlateField& v) { return impl_->run(v, nullptr); }

PotentialField PotentialSolver::solve(const PlateField& v,
                                      const std::function<double(double, double, double)>& rhs) {
    return impl_->run(v, &rhs);
}

double PotentialSolver::energy(const PlateField& v, const PotentialField& phi) const {
    require_admissible(v, "electrostatic_energy");
    return impl_->energy_pass(v, phi, nullptr);
}

EnergyGradient PotentialSolver::energy_gradient(const PlateField& v,
                                                const PotentialField& phi) const {
    require_admissible(v, "electrostatic_energy");
    EnergyGradient out;
    out.energy = impl_->energy_pass(v, phi, &out.gradient);
    out.gradient.set_boundary(-v.grid().h() * v.grid().h() / ((1.0 + v.boundary()) * (1.0 + v.boundary())));
    return out;
}

void PotentialSolver::forget() {
    impl_->last.clear();
    impl_->prev.clear();
}

// ------------------------------------------------------------ free functions

PotentialField solve_transformed_potential(const PlateField& v, const Parameters& p,
                                           const CylinderGrid& grid, SolverOptions options) {
    PotentialSolver solver(grid, p, options);
    return solver.solve(v);
}

TraceField top_trace_derivative(const CylinderField& phi) {
    const CylinderGrid& g = phi.grid();
    const int m = g.m;
    const double inv = 1.0 / (2.0 * g.h_eta());
    TraceField t(g.plate, 1.0);
    for (int i = 1; i <= g.plate.n; ++i)
        for (int j = 1; j <= g.plate.n; ++j)
            t(i, j) = (3.0 * phi(i, j, m) - 4.0 * phi(i, j, m - 1) + phi(i, j, m - 2)) * inv;
    return t;
}

PlateField g_from_trace(const PlateField& v, const TraceField& trace, const Parameters& p) {
    const GradientPair d = gradient(v);
    const double e2 = p.eps * p.eps;
    const double gb = 1.0 + v.boundary();
    PlateField g(v.grid(), 1.0 / (gb * gb));
    for (int i = 1; i <= v.grid().n; ++i)
        for (int j = 1; j <= v.grid().n; ++j) {
            const double gap = 1.0 + v(i, j);
            const double slope = d.d1(i, j) * d.d1(i, j) + d.d2(i, j) * d.d2(i, j);
            g(i, j) = (1.0 + e2 * slope) / (gap * gap) * trace(i, j) * trace(i, j);
        }
    return g;
}

PlateField g_from_gradient(const EnergyGradient& eg) {
    const double h = eg.gradient.grid().h();
    return (-1.0 / (h * h)) * eg.gradient;
}

PlateField compute_g(const PlateField& v, const Parameters& p, const CylinderGrid& grid,
                     GRoute route) {
    PotentialSolver solver(grid, p);
    const PotentialField phi = solver.solve(v);
    if (route == GRoute::Variational) return g_from_gradient(solver.energy_gradient(v, phi));
    return g_from_trace(v, top_trace_derivative(phi), p);
}

PlateField compute_G(const PlateField& u, const Parameters& p, const CylinderGrid& grid) {
    return compute_g(u, p, grid, GRoute::Trace);
}

// ------------------------------------------------------- physical potential

PhysicalPotential::PhysicalPotential(CylinderField phi, PlateField v)
    : phi_(std::move(phi)), v_(std::move(v)) {
    require_admissible(v_, "reconstruct_psi");
    if (!(phi_.grid().plate == v_.grid())) throw InvalidParameter("reconstruct_psi: grid mismatch");
}

double PhysicalPotential::column(int i, int j, double eta) const {
    const CylinderGrid& g = phi_.grid();
    const int m = g.m;
    const int c = std::clamp(static_cast<int>(std::lround(eta * m)), 1, m - 1);
    const double s = eta * m - c;  // position relative to the centre node, in cells
    const double l0 = 0.5 * s * (s - 1.0), l1 = (1.0 - s) * (1.0 + s), l2 = 0.5 * s * (s + 1.0);
    return l0 * phi_(i, j, c - 1) + l1 * phi_(i, j, c) + l2 * phi_(i, j, c + 1);
}

double PhysicalPotential::column_derivative(int i, int j, double eta) const {
    const CylinderGrid& g = phi_.grid();
    const int m = g.m;
    const int c = std::clamp(static_cast<int>(std::lround(eta * m)), 1, m - 1);
    const double s = eta * m - c;
    const double d0 = s - 0.5, d1 = -2.0 * s, d2 = s + 0.5;
    return m * (d0 * phi_(i, j, c - 1) + d1 * phi_(i, j, c) + d2 * phi_(i, j, c + 1));
}

namespace {

struct CellLocation {
    int I, J;
    double wx[2], wy[2];
};

CellLocation locate(const PlateGrid& g, double x1, double x2) {
    const double h = g.h();
    CellLocation c{};
    const double s1 = x1 / h, s2 = x2 / h;
    c.I = std::clamp(static_cast<int>(std::floor(s1)), 0, g.n);
    c.J = std::clamp(static_cast<int>(std::floor(s2)), 0, g.n);
    const double f1 = s1 - c.I, f2 = s2 - c.J;
    c.wx[0] = 1.0 - f1;
    c.wx[1] = f1;
    c.wy[0] = 1.0 - f2;
    c.wy[1] = f2;
    return c;
}

}  // namespace

double PhysicalPotential::deformation(double x1, double x2) const {
    const CellLocation c = locate(v_.grid(), x1, x2);
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) s += c.wx[a] * c.wy[b] * v_.at(c.I + a, c.J + b);
    return s;
}

double PhysicalPotential::extended(double x1, double x2, double z) const {
    const CellLocation c = locate(v_.grid(), x1, x2);
    const double eta = (1.0 + z) / (1.0 + deformation(x1, x2));
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const double w = c.wx[a] * c.wy[b];
            if (w != 0.0) s += w * column(c.I + a, c.J + b, eta);
        }
    return s;
}

double PhysicalPotential::operator()(double x1, double x2, double z) const {
    if (!(x1 >= 0.0 && x1 <= 1.0 && x2 >= 0.0 && x2 <= 1.0))
        throw OutOfDomain("psi: point outside the plate square");
    const double top = deformation(x1, x2);
    const double slack = 1e-13 * (1.0 + std::abs(top));
    if (!(z >= -1.0 - slack && z <= top + slack)) {
        std::ostringstream os;
        os << "psi: z = " << z << " outside [-1, " << top << "]";
        throw OutOfDomain(os.str());
    }
    return extended(x1, x2, z);
}

PhysicalPotential reconstruct_psi(const CylinderField& phi, const PlateField& v) {
    return PhysicalPotential(phi, v);
}

PlateField compute_G_physical(const PhysicalPotential& psi, const Parameters& p) {
    const PlateField& v = psi.v();
    const PlateGrid& g = v.grid();
    const double h = g.h();
    const double e2 = p.eps * p.eps;
    auto at_height = [&](int i, int j, double z) {
        return psi.column(i, j, (1.0 + z) / (1.0 + v.at(i, j)));
    };
    PlateField G(g, 1.0 / ((1.0 + v.boundary()) * (1.0 + v.boundary())));
    for (int i = 1; i <= g.n; ++i)
        for (int j = 1; j <= g.n; ++j) {
            const double z = v(i, j);
            const double d1 = (at_height(i + 1, j, z) - at_height(i - 1, j, z)) / (2.0 * h);
            const double d2 = (at_height(i, j + 1, z) - at_height(i, j - 1, z)) / (2.0 * h);
            const double dz = psi.column_derivative(i, j, 1.0) / (1.0 + z);
            G(i, j) = e2 * (d1 * d1 + d2 * d2) + dz * dz;
        }
    return G;
}

double physical_electrostatic_energy(const PhysicalPotential& psi, const Parameters& p,
                                     int z_points) {
    const PlateField& v = psi.v();
    const PlateGrid& g = v.grid();
    const int m = psi.phi().grid().m;
    if (z_points <= 0) z_points = 4 * m + 1;
    const double h = g.h();
    const double e2 = p.eps * p.eps;
    const int last = g.n + 1;
    auto at_height = [&](int i, int j, double z) {
        return psi.column(i, j, (1.0 + z) / (1.0 + v.at(i, j)));
    };
    // Derivative along one axis at fixed height: central inside, one-sided on edges.
    auto slope = [&](int i, int j, double z, int axis) {
        auto val = [&](int o) {
            return axis == 0 ? at_height(i + o, j, z) : at_height(i, j + o, z);
        };
        const int s = axis == 0 ? i : j;
        if (s == 0) return (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h);
        if (s == last) return (3.0 * val(0) - 4.0 * val(-1) + val(-2)) / (2.0 * h);
        return (val(1) - val(-1)) / (2.0 * h);
    };
    FullPlateArray columns(g);
    for (int i = 0; i <= last; ++i)
        for (int j = 0; j <= last; ++j) {
            const double top = v.at(i, j);
            const double dz = (1.0 + top) / (z_points - 1);
            double s = 0.0;
            for (int q = 0; q < z_points; ++q) {
                const double z = -1.0 + q * dz;
                const double a = slope(i, j, z, 0), b = slope(i, j, z, 1);
                const double pz = psi.column_derivative(i, j, (1.0 + z) / (1.0 + top)) / (1.0 + top);
                const double w = (q == 0 || q == z_points - 1) ? 0.5 : 1.0;
                s += w * (e2 * (a * a + b * b) + pz * pz);
            }
            columns(i, j) = s * dz;
        }
    return integrate_full(columns);
}

}  // namespace memsflow
