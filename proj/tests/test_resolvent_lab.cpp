#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "oracles.hpp"
#include "sbl/errors.hpp"
#include "sbl/resolvent_lab.hpp"

using namespace sbl;

namespace {

const Space kSpace{3, 1.0};

TestFunction gauss(double width = 1.0, cplx c = 1.0) {
    return TestFunction::single(kSpace, RadialProfile::gaussian(width), c);
}

std::shared_ptr<const EquilibriumState> make(double eps, double n0, double src_amp, std::size_t n = 20000) {
    StateConfig c;
    c.beta = 1.0;
    c.eps = eps;
    c.space = kSpace;
    c.n0 = n0;
    c.src = src_amp == 0.0 ? SourceProfile::none(kSpace)
                           : SourceProfile(RadialProfile::gaussian(1.0, src_amp), kSpace);
    EnsembleOptions o;
    o.samples = n;
    o.seed = 23;
    return EquilibriumState::create(c, o);
}

// -i int_0^inf exp(-lambda s - q s^2 / 4) ds for lambda > 0.
cplx gaussian_laplace(double lambda, double q) {
    const double r = std::sqrt(q);
    return {0.0, -std::sqrt(M_PI / q) * std::exp(lambda * lambda / q) * std::erfc(lambda / r)};
}

constexpr double kQNonzero = 13.580932982847241; // unit gaussian, beta = 1

} // namespace

TEST_CASE("f = 0 gives -i / lambda") {
    const auto st = make(1.0, 0.0, 0.5, 2000);
    for (double l : {0.5, 1.0, -2.0, 7.0}) {
        const ResolventValue r = resolvent_onepoint(*st, l, TestFunction::zero(kSpace));
        CHECK(std::abs(r.value - cplx(0.0, -1.0 / l)) <= r.error() + 1e-10);
    }
    CHECK_THROWS_AS(resolvent_onepoint(*st, 0.0, gauss()), std::invalid_argument);
}

TEST_CASE("zero source one-point function: closed form and dense Simpson oracle") {
    const auto st = make(1.0, 0.0, 0.0, 2000);
    for (double a : {0.3, 1.0}) {
        const TestFunction f = gauss().scaled(a);
        const double q = a * a * kQNonzero;
        const double simpson = oracle::simpson_real(
            [&](double s) { return std::exp(-s - 0.25 * q * s * s); }, 0.0, 60.0, 200000);
        const ResolventValue r = resolvent_onepoint(*st, 1.0, f);
        CHECK(r.mc_error == 0.0);
        CHECK(r.value.imag() == doctest::Approx(-simpson).epsilon(1e-7));
        CHECK(std::abs(r.value - gaussian_laplace(1.0, q)) < 1e-9);
        CHECK(r.value.real() == doctest::Approx(0.0).scale(1.0));
    }
}

TEST_CASE("norm bounds, conjugation symmetry and scaling") {
    const auto st = make(1.0, 0.01, 0.5, 20000);
    const TestFunction f = gauss().scaled(0.4);
    for (double l : {0.25, 1.0, 3.0}) {
        const ResolventValue a = resolvent_onepoint(*st, l, f), b = resolvent_onepoint(*st, -l, f);
        CHECK(onepoint_bound(l, a).ok);
        CHECK(std::abs(a.value - std::conj(b.value)) <= a.error() + b.error());
        const double nu = 2.5;
        const ResolventValue c = resolvent_onepoint(*st, nu * l, f.scaled(nu));
        CHECK(std::abs(nu * c.value - a.value) <= nu * c.error() + a.error());
    }
    const ResolventValue t = resolvent_twopoint(*st, 1.0, f, 2.0, gauss(0.5).scaled(0.3));
    CHECK(twopoint_bound(1.0, 2.0, t).ok);
    CHECK_THROWS_AS(resolvent_twopoint(*st, 1.0, f, 0.0, f), std::invalid_argument);
}

TEST_CASE("derivative in lambda matches a central difference") {
    const auto st = make(1.0, 0.0, 0.5, 20000);
    const TestFunction f = gauss().scaled(0.5);
    for (double l : {0.7, -1.3}) {
        const double h = 1e-4;
        const cplx fd = (resolvent_onepoint(*st, l + h, f).value - resolvent_onepoint(*st, l - h, f).value) / (2.0 * h);
        const ResolventValue d = resolvent_onepoint_derivative(*st, l, f);
        CHECK(std::abs(d.value - fd) < 1e-6);
    }
    // Zero source, f = 0: d/dl (-i / l) = i / l^2.
    const ResolventValue d0 = resolvent_onepoint_derivative(*st, 2.0, TestFunction::zero(kSpace));
    CHECK(std::abs(d0.value - cplx(0.0, 0.25)) < 1e-9);
}

TEST_CASE("zero source two-point function against a nested oracle") {
    const auto st = make(1.0, 0.0, 0.0, 2000);
    const double a = 0.5, lambda = 1.0, mu = 2.0;
    const TestFunction f = gauss().scaled(a);
    const double q = a * a * kQNonzero;
    // -int_0^inf int_0^inf exp(-l s - m t - q (s + t)^2 / 4), the inner integral in closed form.
    auto inner = [&](double s) {
        return std::exp(mu * s + mu * mu / q) * std::sqrt(M_PI / q) * std::erfc(0.5 * std::sqrt(q) * (s + 2.0 * mu / q));
    };
    const double ref = -oracle::simpson_real([&](double s) { return std::exp(-lambda * s) * inner(s); }, 0.0, 12.0, 20000);
    const ResolventValue r = resolvent_twopoint(*st, lambda, f, mu, f);
    CHECK(r.value.real() == doctest::Approx(ref).epsilon(1e-7));
    CHECK(std::abs(r.value.imag()) < 1e-10);
    // f = g = 0 factorizes into (-i / l)(-i / m).
    const ResolventValue z = resolvent_twopoint(*st, lambda, TestFunction::zero(kSpace), mu, TestFunction::zero(kSpace));
    CHECK(std::abs(z.value - cplx(-1.0 / (lambda * mu), 0.0)) < 1e-9);
}

TEST_CASE("condensate decay scan follows the free-gas closed form") {
    const auto st = make(1.0, 1.0, 0.0, 2000);
    const TestFunction f = gauss();
    const double q = 2.0 * std::pow(2.0 * M_PI, 3) + kQNonzero;
    const DecayScan scan = bec_decay_scan(*st, 1.0, f, {1.0, 2.0, 4.0});
    CHECK(scan.asserted);
    CHECK(scan.strictly_decreasing);
    for (const DecayRow& r : scan.rows)
        CHECK(r.modulus == doctest::Approx(std::abs(gaussian_laplace(1.0, r.t * r.t * q))).epsilon(1e-8));
    // The modulus falls roughly like 1 / t here, so four-fold amplitude gives about a quarter.
    const double ratio = scan.rows.back().modulus / scan.rows.front().modulus;
    CHECK(ratio == doctest::Approx(std::abs(gaussian_laplace(1.0, 16.0 * q)) / std::abs(gaussian_laplace(1.0, q))).epsilon(1e-8));
    CHECK(scan.below_threshold == (ratio < 0.1));
    const DecayScan longer = bec_decay_scan(*st, 1.0, f, {1.0, 2.0, 4.0, 8.0, 16.0});
    CHECK(longer.ok());
}

TEST_CASE("decay threshold applies only above the floor") {
    const auto st = make(1.0, 0.0, 0.0, 2000);
    // Compactly supported near k = 0: tiny thermal weight and no condensate.
    const TestFunction tiny = TestFunction::single(kSpace, RadialProfile::power_bump(4.0, 0.05));
    const DecayScan scan = bec_decay_scan(*st, 1.0, tiny, {1.0, 2.0, 4.0});
    CHECK_FALSE(scan.asserted);
    CHECK(scan.ok());
}

TEST_CASE("ideal report classifies directions and attaches witnesses") {
    const auto st = make(1.0, 0.01, 0.5, 5000);
    const std::vector<std::pair<std::string, TestFunction>> dirs{
        {"bump", TestFunction::single(kSpace, RadialProfile::power_bump(2.0, 1.0), 0.3)},
        {"condensate", gauss()},
        {"singular", TestFunction::single(kSpace, RadialProfile::power_bump(-1.2, 1.0))}};
    const IdealReport rep = ideal_report(*st, dirs);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].direction == Direction::physical);
    CHECK(rep.rows[0].witness_ok);
    CHECK(rep.rows[1].direction == Direction::bec_generator);
    CHECK(rep.rows[1].decay_ok);
    CHECK(rep.rows[2].direction == Direction::outside_D0);
    CHECK(rep.rejected == std::vector<std::string>{"singular"});
    CHECK(rep.x_bec == std::vector<std::string>{"condensate"});
    CHECK(rep.j_ir.empty());
    std::ostringstream os;
    write_ideal_csv(os, rep);
    CHECK(os.str().find("condensate,bec_generator") != std::string::npos);
}

TEST_CASE("all-gaussian directions without a condensate: X_bec and J_ir empty") {
    const auto st = make(1.0, 0.0, 0.5, 2000);
    const IdealReport rep = ideal_report(*st, {{"a", gauss()}, {"b", gauss(0.5, 0.2)}});
    CHECK(rep.x_bec_empty());
    CHECK(rep.j_ir.empty());
    for (const IdealRow& r : rep.rows) CHECK(r.direction == Direction::physical);
}
