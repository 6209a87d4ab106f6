#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sbl/simd/kernels.hpp"

using namespace sbl;

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

double rel_diff(double a, double b) {
    const double s = std::max(std::abs(a), std::abs(b));
    return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

// Every available implementation, scalar first.
std::vector<const simd::KernelSet*> implementations() {
    std::vector<const simd::KernelSet*> v{&simd::scalar_kernels()};
    if (const simd::KernelSet* a = simd::avx2_kernels()) v.push_back(a);
    return v;
}

} // namespace

TEST_CASE("dispatcher returns one of the available sets") {
    const simd::KernelSet& k = simd::kernels();
    bool known = &k == &simd::scalar_kernels() || &k == simd::avx2_kernels();
    CHECK(known);
    MESSAGE("active kernel set: " << k.name);
}

TEST_CASE("thermal factor matches its definition, including the small-argument series") {
    // Odd lengths exercise the vector tails; tiny w exercises the 1 - exp(-x) series.
    std::vector<double> w = uniform(1027, 1e-3, 40.0, 1);
    for (double x : {1e-9, 1e-6, 1e-3, 0.05, 0.0999, 0.1001}) w.push_back(x);
    for (const auto* set : implementations()) {
        for (double tau : {0.0, 0.13, 0.5, 1.0}) {
            std::vector<double> out(w.size());
            set->thermal_factor(w.data(), w.size(), tau, 1.0, out.data());
            double worst = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i)
                worst = std::max(worst, rel_diff(out[i], oracle::thermal_factor(tau, w[i], 1.0)));
            CHECK_MESSAGE(worst < 1e-13, std::string(set->name) << " tau=" << tau);
        }
    }
}

TEST_CASE("scalar and AVX2 kernels agree elementwise") {
    const simd::KernelSet* avx = simd::avx2_kernels();
    if (!avx) {
        MESSAGE("AVX2 unavailable; equivalence not exercised");
        return;
    }
    const simd::KernelSet& sc = simd::scalar_kernels();

    SUBCASE("thermal_factor") {
        const auto w = uniform(1001, 1e-4, 60.0, 2);
        std::vector<double> a(w.size()), b(w.size());
        sc.thermal_factor(w.data(), w.size(), 0.3, 2.0, a.data());
        avx->thermal_factor(w.data(), w.size(), 0.3, 2.0, b.data());
        for (std::size_t i = 0; i < w.size(); ++i) CHECK(rel_diff(a[i], b[i]) < 1e-14);
    }
    SUBCASE("phase_moments with and without the optional columns") {
        const std::size_t n = 4099;
        const auto w = uniform(n, 0.0, 1.0, 3), x1 = uniform(n, -30.0, 30.0, 4),
                   y1 = uniform(n, -0.5, 0.5, 5), x2 = uniform(n, -5.0, 5.0, 6),
                   y2 = uniform(n, -0.5, 0.5, 7);
        for (int variant = 0; variant < 3; ++variant) {
            const double* py1 = variant >= 1 ? y1.data() : nullptr;
            const double* px2 = variant == 2 ? x2.data() : nullptr;
            const double* py2 = variant == 2 ? y2.data() : nullptr;
            const auto a = sc.phase_moments(w.data(), x1.data(), py1, px2, py2, n, 0.7, -1.3);
            const auto b = avx->phase_moments(w.data(), x1.data(), py1, px2, py2, n, 0.7, -1.3);
            CHECK(a.sw_re == doctest::Approx(b.sw_re).epsilon(1e-12));
            CHECK(a.sw_im == doctest::Approx(b.sw_im).epsilon(1e-12));
            CHECK(a.sw2_re == doctest::Approx(b.sw2_re).epsilon(1e-12));
            CHECK(a.sw2_im == doctest::Approx(b.sw2_im).epsilon(1e-12));
            CHECK(a.sw2_abs2 == doctest::Approx(b.sw2_abs2).epsilon(1e-12));
        }
    }
    SUBCASE("rank1_update") {
        for (std::size_t dim : {1u, 3u, 4u, 7u, 64u, 129u}) {
            const auto x = uniform(dim, -1.0, 1.0, 8 + static_cast<unsigned>(dim));
            std::vector<double> a(dim * dim, 0.25), b(dim * dim, 0.25);
            sc.rank1_update(a.data(), dim, x.data(), 0.37);
            avx->rank1_update(b.data(), dim, x.data(), 0.37);
            // Entries are 0.25 + 0.37 x_i x_j and may nearly cancel, so compare on the operand scale.
            for (std::size_t i = 0; i < dim * dim; ++i) CHECK(std::abs(a[i] - b[i]) < 1e-15);
        }
    }
    SUBCASE("shifted_exp_sum") {
        const auto lw = uniform(70001, -700.0, 5.0, 9);
        std::vector<double> a(lw.size()), b(lw.size());
        const auto sa = sc.shifted_exp_sum(lw.data(), lw.size(), 5.0, a.data());
        const auto sb = avx->shifted_exp_sum(lw.data(), lw.size(), 5.0, b.data());
        for (std::size_t i = 0; i < lw.size(); ++i) CHECK(rel_diff(a[i], b[i]) < 1e-14);
        CHECK(sa.sum == doctest::Approx(sb.sum).epsilon(1e-13));
        CHECK(sa.sum_sq == doctest::Approx(sb.sum_sq).epsilon(1e-13));
    }
}

TEST_CASE("phase moments match a direct complex evaluation") {
    const std::size_t n = 513;
    const auto w = uniform(n, 0.0, 2.0, 10), x1 = uniform(n, -4.0, 4.0, 11), y1 = uniform(n, -0.3, 0.3, 12);
    std::complex<double> sw{}, sw2{};
    double sw2a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> h = std::exp(std::complex<double>(0.0, -1.0) * (0.9 * std::complex<double>(x1[i], y1[i])));
        sw += w[i] * h;
        sw2 += w[i] * w[i] * h;
        sw2a += w[i] * w[i] * std::norm(h);
    }
    for (const auto* set : implementations()) {
        const auto m = set->phase_moments(w.data(), x1.data(), y1.data(), nullptr, nullptr, n, 0.9, 0.0);
        CHECK(m.sw_re == doctest::Approx(sw.real()).epsilon(1e-12));
        CHECK(m.sw_im == doctest::Approx(sw.imag()).epsilon(1e-12));
        CHECK(m.sw2_re == doctest::Approx(sw2.real()).epsilon(1e-12));
        CHECK(m.sw2_im == doctest::Approx(sw2.imag()).epsilon(1e-12));
        CHECK(m.sw2_abs2 == doctest::Approx(sw2a).epsilon(1e-12));
    }
}

TEST_CASE("shifted exponential sums match std::exp") {
    const auto lw = uniform(1000, -50.0, 0.0, 13);
    for (const auto* set : implementations()) {
        std::vector<double> out(lw.size());
        const auto s = set->shifted_exp_sum(lw.data(), lw.size(), -1.0, out.data());
        double sum = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < lw.size(); ++i) {
            const double e = std::exp(lw[i] + 1.0);
            CHECK(rel_diff(out[i], e) < 1e-14);
            sum += e;
            sq += e * e;
        }
        CHECK(s.sum == doctest::Approx(sum).epsilon(1e-13));
        CHECK(s.sum_sq == doctest::Approx(sq).epsilon(1e-13));
    }
}
