#include "memsflow/errors.hpp"
#include "memsflow/grid.hpp"
#include "support.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace memsflow;
using testing::pi;

TEST_CASE("plate grid spacing and bounds", "[grid]") {
    CHECK(PlateGrid::make(4).h() == 0.2);
    CHECK(PlateGrid::make(24).h() == 1.0 / 25.0);
    CHECK_THROWS_AS(PlateGrid::make(3), InvalidParameter);
    CHECK_THROWS_AS(CylinderGrid::make(8, 3), InvalidParameter);
    const CylinderGrid c = CylinderGrid::make(8, 5);
    CHECK(c.eta(0) == 0.0);
    CHECK(c.eta(5) == 1.0);
}

TEST_CASE("gradient of zero and of smooth fields", "[grid]") {
    const PlateGrid g = PlateGrid::make(16);
    const GradientPair z = gradient(PlateField(g));
    CHECK(z.d1.max() == 0.0);
    CHECK(z.d2.min() == 0.0);

    auto error_at = [](int n) {
        const PlateGrid grid = PlateGrid::make(n);
        const GradientPair d = gradient(testing::mode_field(grid));
        return std::max(
            testing::max_error(d.d1, [](double x, double y) { return pi * std::cos(pi * x) * std::sin(pi * y); }),
            testing::max_error(d.d2, [](double x, double y) { return pi * std::sin(pi * x) * std::cos(pi * y); }));
    };
    const double ratio = error_at(32) / error_at(64);
    CHECK(ratio == Catch::Approx(4.0).epsilon(0.15));

    // Central differences are exact on this product of quadratics.
    const PlateField q = PlateField::sample(g, [](double x, double y) { return x * (1 - x) * y * (1 - y); });
    const GradientPair dq = gradient(q);
    CHECK(testing::max_error(dq.d1, [](double x, double y) { return (1 - 2 * x) * y * (1 - y); }) < 1e-13);
    CHECK(testing::max_error(dq.d2, [](double x, double y) { return x * (1 - x) * (1 - 2 * y); }) < 1e-13);
}

TEST_CASE("laplacian and mixed derivative", "[grid]") {
    CHECK(laplacian(PlateField(PlateGrid::make(8))).max() == 0.0);
    auto error_at = [](int n) {
        const PlateGrid grid = PlateGrid::make(n);
        const PlateField lap = laplacian(testing::mode_field(grid, 1.0, 2, 1));
        return testing::max_error(lap, [](double x, double y) { return -5 * pi * pi * testing::mode(x, y, 2, 1); });
    };
    CHECK(error_at(32) / error_at(64) == Catch::Approx(4.0).epsilon(0.15));

    const PlateGrid g = PlateGrid::make(10);
    const PlateField xy = PlateField::sample(g, [](double x, double y) { return x * y; });
    const PlateField mixed = mixed_second(xy);
    for (int i = 2; i < g.n; ++i)
        for (int j = 2; j < g.n; ++j) CHECK(mixed(i, j) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stencil operators are linear", "[grid][property]") {
    const PlateGrid g = PlateGrid::make(12);
    const PlateField v = testing::random_field(g, 11), w = testing::random_field(g, 12);
    const double a = 1.7, b = -0.4;
    const PlateField combo = a * v + b * w;
    for (auto op : {+[](const PlateField& f) { return laplacian(f); },
                    +[](const PlateField& f) { return mixed_second(f); },
                    +[](const PlateField& f) { return gradient(f).d1; }}) {
        const PlateField lhs = op(combo);
        const PlateField rhs = a * op(v) + b * op(w);
        for (std::size_t q = 0; q < lhs.values().size(); ++q)
            CHECK(lhs.values()[q] == Catch::Approx(rhs.values()[q]).margin(1e-9));
    }
}

TEST_CASE("sine transform pair", "[grid]") {
    const PlateGrid g = PlateGrid::make(16);
    const SpectralField zero = to_spectral(PlateField(g));
    for (double c : zero.coefficients()) CHECK(c == 0.0);

    const SpectralField single = to_spectral(testing::mode_field(g));
    for (int k = 1; k <= g.n; ++k)
        for (int l = 1; l <= g.n; ++l)
            CHECK(single(k, l) == Catch::Approx(k == 1 && l == 1 ? 1.0 : 0.0).margin(1e-13));

    const PlateField v = testing::random_field(g, 3);
    const PlateField back = to_nodal(to_spectral(v));
    double err = 0.0, scale = 0.0;
    for (std::size_t q = 0; q < v.values().size(); ++q) {
        err = std::max(err, std::abs(back.values()[q] - v.values()[q]));
        scale = std::max(scale, std::abs(v.values()[q]));
    }
    CHECK(err <= 1e-12 * scale);
}

TEST_CASE("quadrature", "[grid]") {
    const PlateGrid g = PlateGrid::make(20);
    PlateField ones(g, std::vector<double>(g.interior_size(), 1.0));
    CHECK(integrate_plate(ones) == Catch::Approx(g.n * g.n * g.h() * g.h()).epsilon(1e-14));
    CHECK(integrate_plate(PlateField::constant(g, 1.0)) == Catch::Approx(1.0).epsilon(1e-14));

    auto error_at = [](int n) {
        return std::abs(integrate_plate(testing::mode_field(PlateGrid::make(n))) - 4.0 / (pi * pi));
    };
    CHECK(error_at(20) < 1e-2);
    CHECK(error_at(20) > error_at(40));

    CHECK(integrate_cylinder(CylinderField(CylinderGrid::make(6, 5), 1.0)) == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("spectral and stencil derivative routes agree to second order", "[grid]") {
    auto error_at = [](int n) {
        const PlateField v = testing::mode_field(PlateGrid::make(n), 1.0, 1, 2);
        const PlateDerivatives s = plate_derivatives(v, DerivativeRoute::Spectral);
        const PlateDerivatives t = plate_derivatives(v, DerivativeRoute::Stencil);
        double e = 0.0;
        for (std::size_t q = 0; q < s.d11.values.size(); ++q)
            e = std::max({e, std::abs(s.d11.values[q] - t.d11.values[q]),
                          std::abs(s.d12.values[q] - t.d12.values[q])});
        return e;
    };
    CHECK(error_at(16) / error_at(32) == Catch::Approx(4.0).epsilon(0.15));
    PlateField shifted = PlateField::constant(PlateGrid::make(8), 0.5);
    CHECK_THROWS_AS(plate_derivatives(shifted, DerivativeRoute::Spectral), InvalidParameter);
}
