#include <doctest.h>

#include <cmath>

#include "sbl/quadrature.hpp"

using namespace sbl;

TEST_CASE("gk21 integrates polynomials up to degree 31 exactly") {
    for (int p = 0; p <= 31; ++p) {
        const double k = quad::gk21([p](double x) { return std::pow(x, p); }, 0.0, 1.0);
        CHECK(k == doctest::Approx(1.0 / (p + 1)).epsilon(1e-14));
    }
}

TEST_CASE("embedded Gauss rule is exact to degree 19 and not beyond") {
    double g = 0.0;
    quad::gk21([](double x) { return std::pow(x, 19); }, -1.0, 1.0, &g);
    CHECK(std::abs(g) < 1e-15);
    quad::gk21([](double x) { return std::pow(x, 18); }, 0.0, 1.0, &g);
    CHECK(g == doctest::Approx(1.0 / 19).epsilon(1e-14));
    quad::gk21([](double x) { return std::pow(x, 22); }, 0.0, 1.0, &g);
    CHECK(std::abs(g - 1.0 / 23) > 1e-12);
}

TEST_CASE("semi-infinite segments map through the tangent transform") {
    double err = 0.0;
    const double v = quad::integrate_real([](double x) { return std::exp(-x); }, {0.0, INFINITY}, {}, &err);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(err < 1e-9);
    const double lorentz =
        quad::integrate_real([](double x) { return 1.0 / (1.0 + x * x); }, {0.0, 1.0, INFINITY});
    CHECK(lorentz == doctest::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("endpoint singularities converge under adaptive bisection") {
    const double v = quad::integrate_real([](double x) { return x > 0 ? 1.0 / std::sqrt(x) : 0.0; },
                                          {0.0, 1.0}, {1e-10, 0.0, 4000});
    CHECK(v == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("complex integrand components are integrated jointly") {
    const auto v = quad::integrate_complex(
        [](double x) { return std::exp(std::complex<double>(0.0, x)); }, {0.0, M_PI});
    CHECK(v.real() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(v.imag() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("vector integrand and partition reuse") {
    quad::BatchFn f = [](const double* x, std::size_t n, double* out) {
        for (std::size_t i = 0; i < n; ++i) {
            out[2 * i] = std::cos(x[i]);
            out[2 * i + 1] = x[i] * x[i];
        }
    };
    const quad::Result r = quad::integrate(f, 2, {0.0, 2.0});
    REQUIRE(r.converged);
    CHECK(r.value[0] == doctest::Approx(std::sin(2.0)).epsilon(1e-13));
    CHECK(r.value[1] == doctest::Approx(8.0 / 3.0).epsilon(1e-13));
    const quad::Result again = quad::apply_partition(f, 2, r.partition);
    CHECK(again.value[0] == doctest::Approx(r.value[0]).epsilon(1e-15));
    CHECK(again.value[1] == doctest::Approx(r.value[1]).epsilon(1e-15));
}

TEST_CASE("interval budget exhaustion is reported, not hidden") {
    const quad::Result r = quad::integrate(
        [](const double* x, std::size_t n, double* out) {
            for (std::size_t i = 0; i < n; ++i) out[i] = std::sin(1.0 / (x[i] + 1e-4));
        },
        1, {0.0, 1.0}, {1e-14, 0.0, 3});
    CHECK_FALSE(r.converged);
    CHECK(r.max_error() > 1e-14);
}
