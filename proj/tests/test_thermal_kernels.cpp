#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "oracles.hpp"
#include "sbl/quadrature.hpp"
#include "sbl/thermal_kernels.hpp"

using namespace sbl;

namespace {

const Space kSpace{3, 1.0};

SourceProfile half_gauss_source() { return SourceProfile(RadialProfile::gaussian(1.0, 0.5), kSpace); }

TestFunction unit_gauss() { return TestFunction::single(kSpace, RadialProfile::gaussian(1.0)); }

std::shared_ptr<const ThermalKernelTable> shared_table() {
    static const auto table = [] {
        ThermalParams p;
        p.beta = 1.0;
        p.src = half_gauss_source();
        return ThermalKernelTable::build(p);
    }();
    return table;
}

// mpmath references at beta = 1, rho = exp(-k^2/2)/2, f = exp(-k^2/2), d = 3, s = 1.
constexpr double kKappa0 = 5.7948593914086386;
constexpr double kKappaQuarter = 5.5396383824721954;
constexpr double kKappaHalf = 5.4570889526045166;
constexpr double kKappaBeta2Tau07 = 2.6356066800988614;
constexpr double kPsi03 = 0.25551946181793098;
constexpr double kPsi1 = 2.7841639984158539;
constexpr double kK0 = 8.1675465366954427;
constexpr double kK03 = 7.5786709450705433;
constexpr double kP03 = 2.3484812323162391;
constexpr double kMPairing = 3.8497601100508316;

} // namespace

TEST_CASE("thermal factor antiderivatives integrate the factor") {
    for (double w : {1e-7, 0.01, 0.5, 3.0, 40.0}) {
        for (double tau : {0.0, 0.2, 0.77, 1.0}) {
            const double t = thermal::factor(tau, w, 1.0);
            CHECK(t == doctest::Approx(oracle::thermal_factor(tau, w, 1.0)).epsilon(1e-12));
            const double a1 = quad::integrate_real([&](double x) { return thermal::factor(x, w, 1.0); }, {0.0, tau});
            const double a2 = quad::integrate_real(
                [&](double x) { return thermal::first_antiderivative(x, w, 1.0); }, {0.0, tau});
            CHECK(thermal::first_antiderivative(tau, w, 1.0) == doctest::Approx(a1).epsilon(1e-11));
            CHECK(thermal::second_antiderivative(tau, w, 1.0) == doctest::Approx(a2).epsilon(1e-11));
        }
        // Full period: int_0^beta T = 2 / w.
        CHECK(thermal::first_antiderivative(1.0, w, 1.0) == doctest::Approx(2.0 / w).epsilon(1e-12));
    }
}

TEST_CASE("direct self-kernel against frozen values") {
    const SourceProfile src = half_gauss_source();
    CHECK(kappa(src, 1.0, 0.0) == doctest::Approx(kKappa0).epsilon(1e-10));
    CHECK(kappa(src, 1.0, 0.25) == doctest::Approx(kKappaQuarter).epsilon(1e-10));
    CHECK(kappa(src, 1.0, 0.5) == doctest::Approx(kKappaHalf).epsilon(1e-10));
    CHECK(kappa(src, 2.0, 0.7) == doctest::Approx(kKappaBeta2Tau07).epsilon(1e-10));
    CHECK(kappa(SourceProfile::none(kSpace), 1.0, 0.3) == 0.0);
    CHECK_THROWS_AS(kappa(src, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("self-kernel table: nodes, reflection and the second antiderivative") {
    const auto table = shared_table();
    REQUIRE(table->intervals() >= 2048);
    const auto& k = table->kappa_values();
    CHECK(k.front() == doctest::Approx(kKappa0).epsilon(1e-10));
    CHECK(k[k.size() / 2] == doctest::Approx(kKappaHalf).epsilon(1e-10));
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(std::abs(k[i] - k[k.size() - 1 - i]) <= 1e-10);
    CHECK(table->psi(0.0) == 0.0);
    CHECK(table->psi(0.3) == doctest::Approx(kPsi03).epsilon(1e-9));
    CHECK(table->psi(1.0) == doctest::Approx(kPsi1).epsilon(1e-9));
    // Between nodes the Hermite interpolant still matches Psi(u) = int_0^u (u - t) kappa(t) dt.
    const SourceProfile src = half_gauss_source();
    const double u = 0.123456789;
    const double ref = oracle::simpson_real([&](double t) { return (u - t) * kappa(src, 1.0, t); }, 0.0, u, 64);
    CHECK(table->psi(u) == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("double_block against a 2-D Simpson oracle") {
    const auto table = shared_table();
    const SourceProfile src = half_gauss_source();
    const int n = 96;
    // Equal panel widths keep |t - s| on one lattice, so kappa is evaluated once per offset.
    auto block = [&](double a, double c, double w) {
        const double h = w / n;
        std::map<long, double> memo;
        auto kap = [&](double t, double s) {
            const long key = std::lround((t - s) / h * 2.0);
            auto it = memo.find(key);
            if (it != memo.end()) return it->second;
            return memo[key] = kappa(src, 1.0, std::abs(t - s));
        };
        return oracle::simpson_2d(kap, a, a + w, c, c + w, n);
    };
    // Disjoint blocks only: on a diagonal block the kink at t = s spoils the tensor rule.
    CHECK(table->double_block(0.05, 0.35, -0.45, -0.15) == doctest::Approx(block(0.05, -0.45, 0.3)).epsilon(1e-7));
    CHECK(table->double_block(0.0, 0.2, 0.3, 0.5) == doctest::Approx(block(0.0, 0.3, 0.2)).epsilon(1e-7));
    // Symmetry and additivity.
    CHECK(table->double_block(0.1, 0.4, 0.6, 0.9) == doctest::Approx(table->double_block(0.6, 0.9, 0.1, 0.4)));
    const double whole = table->double_block(0.0, 0.4, 0.0, 0.4);
    const double parts = table->double_block(0.0, 0.25, 0.0, 0.4) + table->double_block(0.25, 0.4, 0.0, 0.4);
    CHECK(whole == doctest::Approx(parts).epsilon(1e-12));
    CHECK_THROWS_AS(table->double_block(0.5, 0.8, -0.45, -0.15), std::invalid_argument);
    // Diagonal block: 2 Psi(w).
    CHECK(whole == doctest::Approx(2.0 * table->psi(0.4)).epsilon(1e-13));
}

TEST_CASE("constant self-kernel hook") {
    const auto t = ThermalKernelTable::constant_kappa(2.5, 1.0, 64);
    CHECK(t->psi(0.4) == doctest::Approx(2.5 * 0.4 * 0.4 / 2.0));
    CHECK(t->double_block(0.0, 0.3, 0.5, 0.9) == doctest::Approx(2.5 * 0.3 * 0.4));
}

TEST_CASE("test-function kernel: equal-time coth identity and the full circle") {
    const TestFunction f = unit_gauss();
    const SourceProfile src = half_gauss_source();
    CHECK(kernel_K(f, src, 1.0, 0.0, 0.0).real() == doctest::Approx(kK0).epsilon(1e-10));
    CHECK(kernel_K(f, src, 1.0, 0.1, 0.4).real() == doctest::Approx(kK03).epsilon(1e-10));
    CHECK(equal_time_pairing(f, src, 1.0).real() == doctest::Approx(kK0).epsilon(1e-10));

    const auto kern = TestKernel::build(*shared_table(), f);
    CHECK(kern->k_values().front().real() == doctest::Approx(kK0).epsilon(1e-9));
    CHECK(kern->antiderivative(0.3).real() == doctest::Approx(kP03).epsilon(1e-9));
    // Half the integral over the whole circle is Re<f, m>.
    CHECK(0.5 * kern->antiderivative(1.0).real() == doctest::Approx(kMPairing).epsilon(1e-9));
    CHECK(0.5 * kern->interval_integral(0.2, -0.5, 0.5).real() == doctest::Approx(kMPairing).epsilon(1e-9));
    CHECK(kern->odd_antiderivative(-0.3) == -kern->antiderivative(0.3));
}

TEST_CASE("interval integrals split additively and respect periodicity") {
    const auto kern = TestKernel::build(*shared_table(), unit_gauss());
    const cplx whole = kern->interval_integral(0.1, -0.3, 0.4);
    const cplx split = kern->interval_integral(0.1, -0.3, 0.05) + kern->interval_integral(0.1, 0.05, 0.4);
    CHECK(std::abs(whole - split) < 1e-12);
    // Direct quadrature of K(|t - u|) with the kernel read from the periodic distance.
    const SourceProfile src = half_gauss_source();
    const double direct = quad::integrate_real(
        [&](double u) {
            double d = std::abs(0.1 - u);
            return kernel_K(unit_gauss(), src, 1.0, 0.0, std::min(d, 1.0)).real();
        },
        {-0.3, 0.1, 0.4}, {1e-11, 0.0, 200});
    CHECK(whole.real() == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("zero-temperature kernel is approached as beta grows") {
    const TestFunction f = unit_gauss();
    const SourceProfile src = half_gauss_source();
    const cplx ground = kernel_K_ground(f, src, 0.5);
    double prev = INFINITY;
    for (double beta : {2.0, 4.0, 8.0, 16.0}) {
        const double gap = std::abs(kernel_K(f, src, beta, 0.0, 0.5) - ground);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("kernel table cache round trip and key mismatch") {
    const auto dir = std::filesystem::temp_directory_path() / "sbl_test_cache";
    std::filesystem::remove_all(dir);
    ThermalParams p;
    p.beta = 1.0;
    p.src = half_gauss_source();
    p.grid_intervals = 256;
    const auto built = ThermalKernelTable::build_cached(p, dir.string());
    const auto loaded = ThermalKernelTable::build_cached(p, dir.string());
    REQUIRE(loaded->key() == built->key());
    CHECK(loaded->psi_values() == built->psi_values());
    CHECK(loaded->kappa_values() == built->kappa_values());
    ThermalParams other = p;
    other.beta = 2.0;
    CHECK(other.key() != p.key());
    for (const auto& e : std::filesystem::directory_iterator(dir))
        CHECK(ThermalKernelTable::load(e.path().string(), other) == nullptr);
    std::filesystem::remove_all(dir);
}
