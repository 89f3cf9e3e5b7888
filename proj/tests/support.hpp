#pragma once

#include "memsflow/grid.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace testing {

inline constexpr double pi = std::numbers::pi;

inline double mode(double x, double y, int k = 1, int l = 1) {
    return std::sin(k * pi * x) * std::sin(l * pi * y);
}

inline memsflow::PlateField mode_field(const memsflow::PlateGrid& g, double amp = 1.0, int k = 1,
                                       int l = 1) {
    return memsflow::PlateField::sample(g, [=](double x, double y) { return amp * mode(x, y, k, l); });
}

inline memsflow::PlateField random_field(const memsflow::PlateGrid& g, std::uint64_t seed,
                                         double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    memsflow::PlateField v(g);
    for (double& x : v.values()) x = scale * normal(rng);
    return v;
}

// Smooth random field from the lowest sine modes, peak value `amp`.
inline memsflow::PlateField smooth_random_field(const memsflow::PlateGrid& g, std::uint64_t seed,
                                                double amp, int modes = 3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> c(modes * modes);
    for (double& x : c) x = normal(rng);
    memsflow::PlateField v = memsflow::PlateField::sample(g, [&](double x, double y) {
        double s = 0.0;
        for (int k = 1; k <= modes; ++k)
            for (int l = 1; l <= modes; ++l) s += c[(k - 1) * modes + l - 1] * mode(x, y, k, l) / (k * k + l * l);
        return s;
    });
    double peak = std::max(std::abs(v.min()), std::abs(v.max()));
    v *= amp / peak;
    return v;
}

template <class F>
double max_error(const memsflow::PlateField& v, F&& exact) {
    const auto& g = v.grid();
    double e = 0.0;
    for (int i = 1; i <= g.n; ++i)
        for (int j = 1; j <= g.n; ++j) e = std::max(e, std::abs(v(i, j) - exact(g.x(i), g.x(j))));
    return e;
}

}  // namespace testing
