#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "sbl/errors.hpp"
#include "sbl/momentum_space.hpp"

using namespace sbl;

namespace {

const Space kSpace{3, 1.0};

TestFunction gauss(double width = 1.0, cplx c = 1.0, Space sp = kSpace) {
    return TestFunction::single(sp, RadialProfile::gaussian(width), c);
}

SourceProfile half_gauss_source() { return SourceProfile(RadialProfile::gaussian(1.0, 0.5), kSpace); }

// Reference values at 30 digits (mpmath), d = 3, s = 1, f = exp(-k^2/2), rho = exp(-k^2/2)/2.
constexpr double kQNonzeroBeta1 = 13.580932982847241;     // 4 pi int k^2 f^2 coth(k/2)
constexpr double kQNonzeroBeta2Mu = 6.2745054336295478;   // beta = 2, mu = -1/2
constexpr double kMPairing = 3.8497601100508316;          // 4 pi int k^2 f rho k^(-3/2)
constexpr double kSymplecticU07 = 3.7302705607739043;     // 4 pi int k^2 f^2 sin(0.7 k)
constexpr double kShiftedOverlap13 = 3.6495169952667486;  // 4 pi int k^2 f^2 sinc(1.3 k)

} // namespace

TEST_CASE("sphere areas") {
    CHECK(sphere_area(1) == doctest::Approx(2.0));
    CHECK(sphere_area(2) == doctest::Approx(2.0 * M_PI));
    CHECK(sphere_area(3) == doctest::Approx(4.0 * M_PI));
    for (int d = 1; d <= 6; ++d) CHECK(sphere_area(d) == doctest::Approx(oracle::unit_sphere(d)).epsilon(1e-14));
}

TEST_CASE("gaussian norm has the closed form pi^(3/2) w^3") {
    for (double w : {0.5, 1.0, 2.0}) {
        const TestFunction f = gauss(w);
        CHECK(inner_product(f, f).value.real() == doctest::Approx(std::pow(M_PI, 1.5) * w * w * w).epsilon(1e-10));
    }
}

TEST_CASE("thermal form against frozen values and a dense Simpson grid") {
    const TestFunction f = gauss();
    const double simpson = oracle::radial_simpson(
        [](double k) { return k == 0.0 ? 0.0 : 4 * M_PI * k * k * std::exp(-k * k) / std::tanh(0.5 * k); },
        14.0, 20000);
    CHECK(simpson == doctest::Approx(kQNonzeroBeta1).epsilon(1e-9));
    const FormValue q = form_nonzero(f, f, 1.0, 0.0);
    CHECK(q.value.real() == doctest::Approx(kQNonzeroBeta1).epsilon(1e-9));
    CHECK(q.value.imag() == doctest::Approx(0.0));
    CHECK(form_nonzero(f, f, 2.0, -0.5).value.real() == doctest::Approx(kQNonzeroBeta2Mu).epsilon(1e-9));
}

TEST_CASE("m-pairing and the source-free limit") {
    const TestFunction f = gauss();
    const MPairing m = m_pairing(f, half_gauss_source());
    REQUIRE(m.in_domain);
    CHECK(m.value.value.real() == doctest::Approx(kMPairing).epsilon(1e-9));
    CHECK(m.value.value.imag() == doctest::Approx(0.0));
    CHECK(m_pairing(f, SourceProfile::none(kSpace)).value.value == cplx{});
    // Antilinear in the test function.
    const MPairing mi = m_pairing(gauss(1.0, cplx(0.0, 2.0)), half_gauss_source());
    CHECK(mi.value.value.imag() == doctest::Approx(-2.0 * kMPairing).epsilon(1e-9));
}

TEST_CASE("symplectic form of a time-evolved copy") {
    const TestFunction f = gauss();
    CHECK(symplectic(f, f.time_evolved(0.7)) == doctest::Approx(kSymplecticU07).epsilon(1e-9));
    CHECK(symplectic(f.time_evolved(0.7), f) == doctest::Approx(-kSymplecticU07).epsilon(1e-9));
    CHECK(symplectic(f, f) == 0.0);
}

TEST_CASE("spatial shifts enter through the angular average sinc(k |x|)") {
    const TestFunction f = gauss();
    const cplx v = inner_product(f, f.shifted({1.3, 0.0, 0.0})).value;
    CHECK(v.real() == doctest::Approx(kShiftedOverlap13).epsilon(1e-9));
    CHECK(std::abs(v.imag()) < 1e-12);
    // Only the distance between the two shifts matters.
    const cplx w = inner_product(f.shifted({0.0, 0.5, 0.0}), f.shifted({0.0, 0.5, 1.3})).value;
    CHECK(w.real() == doctest::Approx(kShiftedOverlap13).epsilon(1e-9));
    CHECK_THROWS_AS(f.shifted({1.0}), std::invalid_argument);
}

TEST_CASE("inner product is sesquilinear and Hermitian") {
    const TestFunction f = gauss(1.0) + TestFunction::single(kSpace, RadialProfile::power_bump(1.0, 2.0), cplx(0.3, -0.4));
    const TestFunction g = gauss(0.7, cplx(0.2, 1.1)).time_evolved(0.4);
    const cplx a(1.5, -0.25);
    const cplx fg = inner_product(f, g).value;
    CHECK(std::abs(inner_product(f, g.scaled(a)).value - a * fg) < 1e-10);
    CHECK(std::abs(inner_product(f.scaled(a), g).value - std::conj(a) * fg) < 1e-10);
    CHECK(std::abs(inner_product(g, f).value - std::conj(fg)) < 1e-10);
    const cplx sum = inner_product(f, g + f).value;
    CHECK(std::abs(sum - fg - inner_product(f, f).value) < 1e-10);
}

TEST_CASE("zero-mode form is the arithmetic 2 (2 pi)^d n0 conj f(0) g(0)") {
    const TestFunction f = gauss(1.0, cplx(0.0, 1.0));
    const TestFunction g = gauss(3.0, 2.0);
    const double n0 = 1e-3;
    const double pref = 2.0 * std::pow(2.0 * M_PI, 3) * n0;
    CHECK(form_zero(f, f, n0).value.real() == doctest::Approx(pref));
    const cplx fg = form_zero(f, g, n0).value;
    CHECK(fg.real() == doctest::Approx(0.0));
    CHECK(fg.imag() == doctest::Approx(-2.0 * pref));
    // A profile vanishing at the origin carries no condensate weight.
    const TestFunction h = TestFunction::single(kSpace, RadialProfile::power_bump(2.0, 1.0));
    CHECK(form_zero(h, h, 1.0).value == cplx{});
    CHECK_THROWS_AS(form_zero(f, f, -1.0), std::invalid_argument);
}

TEST_CASE("damping and time evolution leave the origin value unchanged") {
    const TestFunction f = gauss(1.3, cplx(0.5, 0.5));
    CHECK(f.damped(2.0).at_origin() == f.at_origin());
    CHECK(f.time_evolved(3.0).at_origin() == f.at_origin());
    CHECK(f.damped(0.0).content_hash() == f.content_hash());
    CHECK(f.damped(1.0).content_hash() != f.content_hash());
    CHECK(std::abs(f.damped(1.0).value(2.0) - f.value(2.0) * std::exp(-1.0)) < 1e-15);
}

TEST_CASE("direction classification by exponent arithmetic") {
    const SourceProfile src = half_gauss_source();
    SUBCASE("physical and condensate directions") {
        const TestFunction bump = TestFunction::single(kSpace, RadialProfile::power_bump(2.0, 1.0));
        CHECK(classify_direction(bump, src, 0.1) == Direction::physical);
        CHECK(classify_direction(gauss(), src, 0.0) == Direction::physical);
        CHECK(classify_direction(gauss(), src, 0.1) == Direction::bec_generator);
        CHECK(classify_direction(TestFunction::zero(kSpace), src, 0.1) == Direction::physical);
    }
    SUBCASE("outside the form domain") {
        // Unbounded at the origin, or not square integrable at infinity.
        const TestFunction singular = TestFunction::single(kSpace, RadialProfile::power_bump(-1.2, 1.0));
        CHECK(classify_direction(singular, src, 0.0) == Direction::outside_D0);
        const TestFunction slow = TestFunction::single(kSpace, RadialProfile::power_tail(-1.2));
        CHECK(classify_direction(slow, src, 0.0) == Direction::outside_D0);
    }
    SUBCASE("infrared-singular: divergent m-pairing with a point source and soft dispersion") {
        const Space soft{3, 0.5};
        const SourceProfile point(RadialProfile::point_source_flat(1.0), soft);
        // k^2 k^-2 k^-0.75 decays too slowly for the pairing, yet k^2 k^-4 is integrable.
        const TestFunction f = TestFunction::single(soft, RadialProfile::power_tail(-2.0));
        std::string why;
        CHECK_FALSE(in_m_domain(f, point, &why));
        CHECK(why.find("k -> inf") != std::string::npos);
        CHECK(classify_direction(f, point, 0.0) == Direction::infrared_singular);
        CHECK_FALSE(m_pairing(f, point).in_domain);
        // The same function with a faster tail is physical.
        const TestFunction g = TestFunction::single(soft, RadialProfile::power_tail(-3.0));
        CHECK(classify_direction(g, point, 0.0) == Direction::physical);
    }
}

TEST_CASE("divergent forms raise DomainError") {
    const Space sp{1, 1.0};
    const TestFunction flat = TestFunction::single(sp, RadialProfile::power_bump(0.0, 1.0));
    // d = 1, s = 1: coth(k/2) ~ 2/k makes the thermal form log-divergent at k = 0.
    CHECK_THROWS_AS(form_nonzero(flat, flat, 1.0, 0.0), DomainError);
    CHECK_NOTHROW(form_nonzero(flat, flat, 1.0, -0.1));
    CHECK_THROWS_AS(form_nonzero(flat, flat, 1.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(SourceProfile(RadialProfile::point_source_flat(), Space{1, 2.0}), DomainError);
}

TEST_CASE("profile validation") {
    CHECK_THROWS_AS(RadialProfile::gaussian(0.0), std::invalid_argument);
    CHECK_THROWS_AS(RadialProfile::power_bump(1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(TestFunction(Space{0, 1.0}, {}), std::invalid_argument);
    CHECK_THROWS_AS(TestFunction(Space{3, 0.0}, {}), std::invalid_argument);
    CHECK(RadialProfile::power_tail(-4.0)(1.0) == doctest::Approx(0.25));
}

TEST_CASE("content hashes separate distinct functions") {
    const TestFunction a = gauss(1.0), b = gauss(1.0 + 1e-12), c = gauss(1.0, cplx(1.0, 1e-12));
    CHECK(a.content_hash() == gauss(1.0).content_hash());
    CHECK(a.content_hash() != b.content_hash());
    CHECK(a.content_hash() != c.content_hash());
    CHECK(a.time_evolved(1.0).content_hash() != a.content_hash());
}
