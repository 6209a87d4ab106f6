#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sbl/cluster_nogo.hpp"

using namespace sbl;

namespace {

const Space kSpace{3, 1.0};

TestFunction gauss(double width = 1.0, cplx c = 1.0) {
    return TestFunction::single(kSpace, RadialProfile::gaussian(width), c);
}

std::shared_ptr<const EquilibriumState> make(double eps, double n0, double src_amp, std::size_t n,
                                             EnsembleMode mode = EnsembleMode::sampled) {
    StateConfig c;
    c.beta = 1.0;
    c.eps = eps;
    c.space = kSpace;
    c.n0 = n0;
    c.src = src_amp == 0.0 ? SourceProfile::none(kSpace)
                           : SourceProfile(RadialProfile::gaussian(1.0, src_amp), kSpace);
    EnsembleOptions o;
    o.samples = n;
    o.seed = 17;
    o.mode = mode;
    return EquilibriumState::create(c, o);
}

// exp(q0 / 2) - 1 with q0 = 2 (2 pi)^3 x 10^-3 for unit zero-mode functions.
constexpr double kGapMilli = 0.28152428032406945;
constexpr double kMPairing = 3.8497601100508316; // Re<f, m>, f = exp(-k^2/2), rho = f/2

} // namespace

TEST_CASE("default grid is geometric from 1 to 128") {
    const auto g = default_cluster_grid();
    REQUIRE(g.size() == 8);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == std::ldexp(1.0, static_cast<int>(i)));
}

TEST_CASE("zero source with a condensate: moderate spin ratio and the no-go record") {
    const auto st = make(1.0, 1e-3, 0.0, 2000);
    const TestFunction f = gauss(), g = gauss();
    for (TransportMode mode : {TransportMode::time, TransportMode::space}) {
        const ClusterReport rep = cluster_scan(*st, f, g, mode, default_cluster_grid());
        CHECK(rep.verdict == ClusterVerdict::moderate);
        CHECK(rep.zero_mode_factor == doctest::Approx(1.0 + kGapMilli).epsilon(1e-13));
        for (const ClusterRung& r : rep.rungs) {
            CHECK(r.spin_ratio == cplx(1.0, 0.0));
            CHECK(r.zero_mode_factor == rep.zero_mode_factor);
        }
        // The non-zero modes decorrelate; what is left of lhs / product is the zero-mode deficit.
        CHECK(std::abs(rep.rungs.back().full_ratio * rep.zero_mode_factor - 1.0) < 0.05);
        const NogoRecord rec = nogo_verdict(*st, f, g, rep);
        CHECK(rec.contradiction);
        CHECK_FALSE(rec.consistent);
        CHECK_FALSE(rec.bec_set_empty);
        CHECK(rec.gap == doctest::Approx(kGapMilli).epsilon(1e-13));
        CHECK(rec.gap == doctest::Approx(std::expm1(0.5 * rec.q0_fg)).epsilon(1e-15));
    }
}

TEST_CASE("without a condensate the same scan is consistent") {
    const auto st = make(1.0, 0.0, 0.0, 2000);
    const ClusterReport rep = cluster_scan(*st, gauss(), gauss(), TransportMode::time, default_cluster_grid());
    CHECK(rep.verdict == ClusterVerdict::moderate);
    const NogoRecord rec = nogo_verdict(*st, gauss(), gauss(), rep);
    CHECK(rec.consistent);
    CHECK_FALSE(rec.contradiction);
    CHECK(rec.bec_set_empty);
    CHECK(rec.gap == 0.0);
}

TEST_CASE("eps = 0: two-point functional has a closed form at every rung") {
    // Z = +-<h, m> for every loop, so S(h) = cos <h, m> even for complex h.
    const auto st = make(0.0, 0.0, 0.5, 20000);
    const TestFunction f = gauss().scaled(0.3), g = gauss(0.7, 0.2);
    const std::vector<double> grid{0.5, 2.0, 8.0};
    const ClusterReport rep = cluster_scan(*st, f, g, TransportMode::time, grid);
    const SourceProfile& src = st->config().src;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const TestFunction h = f + g.time_evolved(grid[i]);
        const cplx mh = m_pairing(h, src).value.value;
        const double q = form_nonzero(h, h, 1.0, 0.0).value.real();
        const cplx expected = std::exp(-0.25 * q) * std::cos(mh);
        CHECK(std::abs(rep.rungs[i].lhs - expected) <= 3.0 * rep.rungs[i].lhs_se + 1e-12);
    }
}

TEST_CASE("frozen spin: the classical-limit scan is classical with a = -Re<f, m>") {
    const auto st = make(1.0, 0.0, 0.5, 1000, EnsembleMode::frozen);
    const std::vector<TestFunction> seq{gauss().scaled(0.5), gauss().scaled(0.25), gauss().scaled(0.1)};
    const GpReport rep = gp_limit_scan(*st, seq, {0.5, 1.0, 2.0});
    CHECK(rep.verdict == GpVerdict::classical);
    CHECK(rep.a == doctest::Approx(-0.1 * kMPairing).epsilon(1e-9));
    CHECK(rep.rows.size() == 9);
    for (const GpRow& r : rep.rows) CHECK(r.se == doctest::Approx(0.0).scale(1.0));
    CHECK_THROWS_AS(gp_limit_scan(*st, {}, {1.0}), std::invalid_argument);
}

TEST_CASE("fluctuating spin: the classical-limit scan does not report classical") {
    const auto st = make(1.0, 0.0, 0.5, 20000);
    const GpReport rep = gp_limit_scan(*st, {gauss(), gauss().scaled(0.8)}, {1.0, 2.0});
    CHECK(rep.verdict != GpVerdict::classical);
}

TEST_CASE("cluster CSV layout") {
    const auto st = make(1.0, 1e-3, 0.0, 1000);
    const ClusterReport rep = cluster_scan(*st, gauss(), gauss(), TransportMode::space, {1.0, 2.0});
    std::ostringstream os;
    write_cluster_csv(os, rep);
    const std::string s = os.str();
    CHECK(s.rfind("rung,at,re_lhs,im_lhs,se_lhs,cross_term,zero_mode_factor,abs_spin_ratio,arg_spin_ratio,se_spin_ratio\n", 0) == 0);
    CHECK(s.find("# verdict,moderate") != std::string::npos);
    CHECK(std::string(to_string(ClusterVerdict::cluster_with_zero_mode)) == "cluster_with_zero_mode");
    CHECK(std::string(to_string(GpVerdict::not_classical)) == "not_classical");
}
