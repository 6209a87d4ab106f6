#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sbl/harness/seeding.hpp"
#include "sbl/tilted_ensemble.hpp"

using namespace sbl;

namespace {

const Space kSpace{3, 1.0};

SourceProfile gauss_source(double amp) { return SourceProfile(RadialProfile::gaussian(1.0, amp), kSpace); }

TestFunction gauss(double width = 1.0, cplx c = 1.0) {
    return TestFunction::single(kSpace, RadialProfile::gaussian(width), c);
}

std::shared_ptr<const ThermalKernelTable> table_for(double beta, double amp) {
    ThermalParams p;
    p.beta = beta;
    p.src = gauss_source(amp);
    return ThermalKernelTable::build(p);
}

std::shared_ptr<const ThermalKernelTable> unit_table() {
    static const auto t = table_for(1.0, 0.5);
    return t;
}

EnsembleOptions opts(std::size_t n, std::uint64_t seed, int workers = 1) {
    EnsembleOptions o;
    o.samples = n;
    o.seed = seed;
    o.workers = workers;
    return o;
}

// Re<f, m> for f = exp(-k^2/2), rho = exp(-k^2/2)/2 (mpmath).
constexpr double kMPairing = 3.8497601100508316;

} // namespace

TEST_CASE("boundary and pair forms of log W agree on random loops") {
    const auto table = unit_table();
    Rng rng(5);
    for (double eps : {0.5, 3.0}) {
        for (int i = 0; i < 200; ++i) {
            const SpinLoop l = sample_loop(SpinParams{1.0, eps}, rng);
            const double a = log_weight(l, *table), b = log_weight_pairs(l, *table);
            CHECK(a == doctest::Approx(b).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("log W is invariant under rotations of the loop") {
    const auto table = unit_table();
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const SpinLoop l = sample_loop(SpinParams{1.0, 2.0}, rng);
        const double a = 0.8 * uniform01(rng) - 0.4;
        const SpinLoop r = rotate_loop(l, a, 1.0);
        CHECK(r.jumps.size() == l.jumps.size());
        CHECK(log_weight(r, *table) == doctest::Approx(log_weight(l, *table)).epsilon(1e-9).scale(1.0));
        // Value is carried along the circle.
        CHECK(r.value_periodic(0.1 + a, 1.0) == l.value_periodic(0.1, 1.0));
    }
}

TEST_CASE("constant self-kernel gives log W = c0 (int X)^2 / 4") {
    const double c0 = 1.7;
    const auto table = ThermalKernelTable::constant_kappa(c0, 2.0, 512);
    Rng rng(8);
    for (int i = 0; i < 100; ++i) {
        const SpinLoop l = sample_loop(SpinParams{2.0, 1.0}, rng);
        // int_{S_beta} X from the jump times.
        double integral = 0.0, left = -1.0;
        int x = l.initial_sign;
        for (double t : l.jumps) {
            integral += x * (t - left);
            left = t;
            x = -x;
        }
        integral += x * (1.0 - left);
        CHECK(log_weight(l, *table) == doctest::Approx(0.25 * c0 * integral * integral).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("Z is linear in the test function and covariant under rotation") {
    const auto table = unit_table();
    const TestFunction f = gauss(1.0), g = gauss(0.6, cplx(0.3, -0.8));
    const auto kf = TestKernel::build(*table, f), kg = TestKernel::build(*table, g);
    const auto kfg = TestKernel::build(*table, f + g.scaled(2.0));
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        const SpinLoop l = sample_loop(SpinParams{1.0, 1.5}, rng);
        const cplx lhs = z_value(l, *kfg, 0.1);
        const cplx rhs = z_value(l, *kf, 0.1) + 2.0 * z_value(l, *kg, 0.1);
        CHECK(std::abs(lhs - rhs) < 1e-9 * (1.0 + std::abs(lhs)));
        const double a = 0.3;
        CHECK(std::abs(z_value(rotate_loop(l, a, 1.0), *kf, a) - z_value(l, *kf, 0.0)) < 1e-9);
    }
    // A jump-free loop of sign s has Z = s Re<f, m> for real f.
    SpinLoop flat;
    flat.initial_sign = -1;
    CHECK(z_value(flat, *kf, 0.2).real() == doctest::Approx(-kMPairing).epsilon(1e-9));
}

TEST_CASE("eps = 0: spin factor equals cos Re<f, m>, both variance routes equal its square") {
    const auto ens = TiltedEnsemble::build(SpinParams{1.0, 0.0}, unit_table(), opts(20000, 3));
    for (std::size_t i = 0; i < ens->size(); ++i) CHECK(ens->jump_count(i) == 0);
    CHECK(ens->ess() == doctest::Approx(20000.0));
    const TestFunction f = gauss().scaled(0.4);
    const auto kern = TestKernel::build(*unit_table(), f);
    const auto z = ens->z_values(*kern, 0.0);
    const double c = 0.4 * kMPairing;
    const Estimate s = spin_factor(*ens, *z);
    CHECK(std::abs(s.value.real() - std::cos(c)) <= 3.0 * s.se + 1e-12);
    CHECK(std::abs(s.value.imag()) <= 3.0 * s.se + 1e-12);
    const VarianceRoutes v = variance_two_routes(*ens, *kern, *z);
    CHECK(v.var_direct == doctest::Approx(c * c).epsilon(0.05));
    CHECK(v.var_kernel == doctest::Approx(c * c).epsilon(0.05));
    CHECK(v.agree());
    for (const DeviationRow& r : deviation_bound_check(*ens, *z, {0.5, 1.0, 2.0})) CHECK(r.ok);
}

TEST_CASE("zero source: trivial weights, Z = 0 and S = 1") {
    ThermalParams p;
    p.beta = 1.0;
    p.src = SourceProfile::none(kSpace);
    const auto table = ThermalKernelTable::build(p);
    const auto ens = TiltedEnsemble::build(SpinParams{1.0, 1.0}, table, opts(5000, 4));
    CHECK(ens->ess() == doctest::Approx(5000.0));
    CHECK(ens->log_partition() == doctest::Approx(std::log(2.0 * std::cosh(1.0))).epsilon(1e-12));
    const auto kern = TestKernel::build(*table, gauss());
    const auto z = ens->z_values(*kern, 0.0);
    CHECK(z->all_zero);
    const Estimate s = spin_factor(*ens, *z);
    CHECK(s.value == cplx(1.0, 0.0));
    CHECK(s.se == 0.0);
}

TEST_CASE("spin factor modulus and Hermitian symmetry in the scale") {
    const auto ens = TiltedEnsemble::build(SpinParams{1.0, 1.0}, unit_table(), opts(20000, 11));
    const auto kern = TestKernel::build(*unit_table(), gauss());
    const auto z = ens->z_values(*kern, 0.0);
    for (double s : {0.3, 1.0, 2.5}) {
        const Estimate a = spin_factor(*ens, *z, s), b = spin_factor(*ens, *z, -s);
        CHECK(std::abs(a.value) <= 1.0 + 3.0 * a.se);
        CHECK(std::abs(a.value - std::conj(b.value)) < 1e-12);
    }
    CHECK(spin_factor(*ens, *z, 0.0).value == cplx(1.0, 0.0));
}

TEST_CASE("ensembles are reproducible and independent of the worker count") {
    const auto a = TiltedEnsemble::build(SpinParams{1.0, 2.0}, unit_table(), opts(9000, 21, 1));
    const auto b = TiltedEnsemble::build(SpinParams{1.0, 2.0}, unit_table(), opts(9000, 21, 3));
    CHECK(a->log_weights() == b->log_weights());
    CHECK(a->sum_w() == b->sum_w());
    const auto kern = TestKernel::build(*unit_table(), gauss());
    const auto za = a->z_values(*kern, 0.1), zb = b->z_values(*kern, 0.1);
    CHECK(za->re == zb->re);
    const VarianceRoutes va = variance_two_routes(*a, *kern, *za);
    const VarianceRoutes vb = variance_two_routes(*b, *kern, *zb);
    CHECK(va.var_kernel == vb.var_kernel);
    CHECK(va.se_kernel == vb.se_kernel);
    std::ostringstream ca, cb;
    write_ensemble_csv(ca, *a, {{"f", za.get()}});
    write_ensemble_csv(cb, *b, {{"f", zb.get()}});
    CHECK(ca.str() == cb.str());
}

TEST_CASE("memoized Z values are shared per key") {
    const auto ens = TiltedEnsemble::build(SpinParams{1.0, 1.0}, unit_table(), opts(2000, 2));
    const auto kern = TestKernel::build(*unit_table(), gauss());
    CHECK(ens->z_values(*kern, 0.0, 77) == ens->z_values(*kern, 0.0, 77));
    CHECK(ens->z_values(*kern, 0.0, 0) != ens->z_values(*kern, 0.0, 0));
}

TEST_CASE("frozen mode: every loop is the constant +1 path") {
    EnsembleOptions o = opts(1000, 1);
    o.mode = EnsembleMode::frozen;
    const auto ens = TiltedEnsemble::build(SpinParams{1.0, 2.0}, unit_table(), o);
    for (std::size_t i = 0; i < ens->size(); ++i) {
        CHECK(ens->sign(i) == 1);
        CHECK(ens->jump_count(i) == 0);
    }
    const auto kern = TestKernel::build(*unit_table(), gauss());
    const ZMoments m = z_moments(*ens, *ens->z_values(*kern, 0.0));
    CHECK(m.mean == doctest::Approx(kMPairing).epsilon(1e-9));
    CHECK(m.var == doctest::Approx(0.0).scale(1.0));
    const CNumberEvidence c = cnumber_criterion(*ens, *ens->z_values(*kern, 0.0), 1e-9);
    CHECK(c.holds);
}

TEST_CASE("c-number criterion fails for a fluctuating spin") {
    const auto ens = TiltedEnsemble::build(SpinParams{1.0, 1.0}, unit_table(), opts(20000, 12));
    const auto kern = TestKernel::build(*unit_table(), gauss());
    const CNumberEvidence c = cnumber_criterion(*ens, *ens->z_values(*kern, 0.0), 1e-3);
    CHECK_FALSE(c.holds);
    CHECK(c.var_direct > 1.0);
}

TEST_CASE("build rejects inconsistent inputs") {
    CHECK_THROWS_AS(TiltedEnsemble::build(SpinParams{2.0, 1.0}, unit_table(), opts(10, 1)), std::invalid_argument);
    CHECK_THROWS_AS(TiltedEnsemble::build(SpinParams{1.0, 1.0}, unit_table(), opts(0, 1)), std::invalid_argument);
    CHECK_THROWS_AS(TiltedEnsemble::build(SpinParams{1.0, 1.0}, nullptr, opts(10, 1)), std::invalid_argument);
}
