#include "sbl/cluster_nogo.hpp"

#include "sbl/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sbl {

namespace {

double rel_se(const Estimate& e) {
    const double m = std::abs(e.value);
    return m > 0.0 ? e.se / m : 0.0;
}

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

const char* to_string(ClusterVerdict v) {
    switch (v) {
    case ClusterVerdict::moderate: return "moderate";
    case ClusterVerdict::cluster_with_zero_mode: return "cluster_with_zero_mode";
    case ClusterVerdict::neither: return "neither";
    case ClusterVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

const char* to_string(GpVerdict v) {
    switch (v) {
    case GpVerdict::classical: return "classical";
    case GpVerdict::not_classical: return "not_classical";
    case GpVerdict::inconclusive: return "inconclusive";
    }
    return "?";
}

std::vector<double> default_cluster_grid() {
    std::vector<double> g;
    for (double u = 1.0; u <= 128.0; u *= 2.0) g.push_back(u);
    return g;
}

ClusterReport cluster_scan(const EquilibriumState& state, const TestFunction& f,
                           const TestFunction& g, TransportMode mode,
                           const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("cluster grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("cluster grid must increase");
    if (mode == TransportMode::space && f.space().d != 3)
        throw std::invalid_argument("spatial cluster scans need d = 3");

    ClusterReport rep;
    rep.mode = mode;
    rep.grid = grid;
    rep.ess = state.ensemble().ess();

    const StateValue cf = state.charfun(f, 0.0);
    const StateValue cg = state.charfun(g, 0.0);
    rep.product = cf.value * cg.value;
    rep.product_se = std::abs(rep.product) * std::hypot(rel_se({cf.value, cf.se}), rel_se({cg.value, cg.se}));
    const double q0fg = state.q0(f, g).value.real();
    rep.zero_mode_factor = std::exp(0.5 * q0fg);
    const Estimate sf = cf.spin, sg = cg.spin;
    const cplx sprod = sf.value * sg.value;

    rep.rungs.resize(grid.size());
    parallel_for(grid.size(), state.ensemble().options().workers, [&](std::size_t i) {
        const Transport tr{mode, grid[i]};
        const TestFunction tg = tr.apply(g);
        ClusterRung& r = rep.rungs[i];
        r.at = grid[i];
        const StateValue two = state.two_point_charfun(f, g, tr);
        r.lhs = two.value;
        r.lhs_se = two.se;
        r.cross_term = state.q_nonzero(f, tg).value.real();
        r.zero_mode_factor = std::exp(0.5 * state.q0(f, g).value.real());
        r.spin_ratio = two.spin.value / sprod;
        r.ratio_se = std::abs(r.spin_ratio) *
                     std::sqrt(std::pow(rel_se(two.spin), 2) + std::pow(rel_se(sf), 2) +
                               std::pow(rel_se(sg), 2));
        r.full_ratio = r.lhs / rep.product;
    });

    const ClusterRung& last = rep.rungs.back();
    const double gap = std::abs(rep.zero_mode_factor - 1.0);
    const double slack = 3.0 * last.ratio_se + 1e-12;
    if (gap > 0.0 && last.ratio_se > 0.5 * gap)
        rep.verdict = ClusterVerdict::inconclusive;
    else if (std::abs(last.spin_ratio - 1.0) <= slack)
        rep.verdict = ClusterVerdict::moderate;
    else if (std::abs(last.spin_ratio - rep.zero_mode_factor) <= slack)
        rep.verdict = ClusterVerdict::cluster_with_zero_mode;
    else
        rep.verdict = ClusterVerdict::neither;
    return rep;
}

NogoRecord nogo_verdict(const EquilibriumState& state, const TestFunction& f,
                        const TestFunction& g, const ClusterReport& report, double tol) {
    NogoRecord rec;
    rec.q0_f = state.q0(f);
    rec.q0_g = state.q0(g);
    rec.q0_fg = state.q0(f, g).value.real();
    rec.gap = std::expm1(0.5 * rec.q0_fg);
    const bool bec = rec.q0_f > tol || rec.q0_g > tol;
    rec.bec_set_empty = !bec;
    std::ostringstream msg;
    if (report.verdict != ClusterVerdict::moderate) {
        msg << "no moderateness observed (verdict " << to_string(report.verdict)
            << "); the no-go statement does not apply";
    } else if (bec) {
        rec.contradiction = true;
        msg << "moderate spin factor with a condensate direction: the two-point functional misses "
               "factorization by exp(Re q0(f,g)/2) - 1 = "
            << g17(rec.gap);
    } else {
        rec.consistent = true;
        msg << "moderate and q0 vanishes on the tested set; no condensate direction found";
    }
    rec.message = msg.str();
    return rec;
}

GpReport gp_limit_scan(const EquilibriumState& state, const std::vector<TestFunction>& sequence,
                       const std::vector<double>& s_grid, double tol) {
    if (sequence.empty()) throw std::invalid_argument("classical-limit scan needs a sequence");
    GpReport rep;
    std::vector<double> means;
    for (const TestFunction& fl : sequence) {
        state.admit(fl);
        means.push_back(z_mean(state.ensemble(), *state.z(fl)).value.real());
    }
    rep.a = -means.back();
    bool all_ok = true;
    double max_se = 0.0;
    for (std::size_t l = 0; l < sequence.size(); ++l) {
        const auto z = state.z(sequence[l]);
        for (double s : s_grid) {
            GpRow row;
            row.index = l;
            row.s = s;
            const Estimate e = phase_average(state.ensemble(), *z, s);
            row.phi = e.value;
            row.se = e.se;
            row.mean_z = means[l];
            row.gap = std::abs(e.value - std::polar(1.0, s * rep.a));
            if (l + 1 == sequence.size()) {
                max_se = std::max(max_se, e.se);
                if (row.gap > 3.0 * e.se + tol) all_ok = false;
            }
            rep.rows.push_back(row);
        }
    }
    if (all_ok)
        rep.verdict = GpVerdict::classical;
    else
        rep.verdict = max_se > tol ? GpVerdict::inconclusive : GpVerdict::not_classical;
    return rep;
}

void write_cluster_csv(std::ostream& os, const ClusterReport& report) {
    os << "rung,at,re_lhs,im_lhs,se_lhs,cross_term,zero_mode_factor,abs_spin_ratio,"
          "arg_spin_ratio,se_spin_ratio\n";
    for (std::size_t i = 0; i < report.rungs.size(); ++i) {
        const ClusterRung& r = report.rungs[i];
        os << i << ',' << g17(r.at) << ',' << g17(r.lhs.real()) << ',' << g17(r.lhs.imag()) << ','
           << g17(r.lhs_se) << ',' << g17(r.cross_term) << ',' << g17(r.zero_mode_factor) << ','
           << g17(std::abs(r.spin_ratio)) << ',' << g17(std::arg(r.spin_ratio)) << ','
           << g17(r.ratio_se) << '\n';
    }
    os << "# verdict," << to_string(report.verdict) << '\n';
}

} // namespace sbl
