#include "sbl/harness/runner.hpp"

#include "sbl/cluster_nogo.hpp"
#include "sbl/equilibrium_state.hpp"
#include "sbl/errors.hpp"
#include "sbl/harness/config.hpp"
#include "sbl/harness/csv.hpp"
#include "sbl/parallel.hpp"
#include "sbl/resolvent_lab.hpp"
#include "sbl/simd/kernels.hpp"
#include "sbl/spin_loop.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace sbl::harness {

namespace fs = std::filesystem;

namespace {

struct Context {
    Context(const RunConfig& c, fs::path o, std::string cache, int w)
        : cfg(c), out(std::move(o)), cache_dir(std::move(cache)), workers(w) {}

    const RunConfig& cfg;
    fs::path out;
    std::string cache_dir;
    int workers{1};
    std::vector<Assertion> asserts;
    std::vector<std::string> files;
    std::vector<std::pair<std::string, std::string>> facts;
    std::shared_ptr<const EquilibriumState> state_;

    void check(const std::string& name, bool pass, const std::string& detail = {}) {
        asserts.push_back({name, pass, detail});
    }
    void fact(const std::string& key, const std::string& value) { facts.emplace_back(key, value); }
    void csv(const std::string& name, const std::string& description, const std::string& body) {
        if (!cfg.output.csv) return;
        const fs::path p = out / name;
        write_csv(p.string(), description, body);
        files.push_back(p.string());
    }
    const EquilibriumState& state() {
        if (!state_) {
            state_ = EquilibriumState::create(cfg.state_config(), cfg.ensemble_options(workers),
                                              cache_dir);
            fact("ess", g17(state_->ensemble().ess()));
            fact("log_partition", g17(state_->ensemble().log_partition()));
            if (state_->ensemble().degenerate()) fact("weight_degeneracy", "true");
        }
        return *state_;
    }
    const TestFunction& fn(const std::string& key, std::size_t fallback_index = 0) {
        const auto& order = cfg.function_names();
        if (cfg.has(key)) return cfg.function(cfg.str(key, ""));
        if (order.size() <= fallback_index)
            throw ConfigError("experiment." + key + ": no test function declared in [functions]");
        return cfg.function(order[fallback_index]);
    }
    std::string fn_name(const std::string& key, std::size_t fallback_index = 0) const {
        if (cfg.has(key)) return cfg.str(key, "");
        const auto& order = cfg.function_names();
        return order.size() > fallback_index ? order[fallback_index] : std::string{};
    }
};

std::string detail(double got, double want, double tol) {
    std::ostringstream os;
    os << "got " << g17(got) << ", reference " << g17(want) << ", tolerance " << g17(tol);
    return os.str();
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

bool is_real_function(const TestFunction& f) {
    for (const Component& c : f.components())
        if (c.coeff.imag() != 0.0 || c.time_phase != 0.0 || !c.shift.empty()) return false;
    return true;
}

// ---------------------------------------------------------------- spin-check

std::pair<double, double> parse_case(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos)
        throw ConfigError("experiment.cases: expected eps:beta pairs, got '" + s + "'");
    try {
        return {std::stod(s.substr(0, colon)), std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ConfigError("experiment.cases: expected eps:beta pairs, got '" + s + "'");
    }
}

void cmd_spin_check(Context& c) {
    const RunConfig& cfg = c.cfg;
    const auto cases = cfg.names("cases", {"0.5:1", "1:2", "2:1"});
    const auto fracs = cfg.list("tau_fracs", {0.1, 0.25, 0.5});
    const std::size_t n = cfg.numerics.samples;
    const std::size_t chunk = cfg.numerics.chunk_size;
    const std::uint64_t seed = cfg.numerics.seed;

    std::string body = "quantity,eps,beta,tau,sigma,oracle,mc,se,z_score,pass\n";
    auto record = [&](const std::string& what, double eps, double beta, double tau, int sigma,
                      double oracle, double mc, double se) {
        const bool pass = se > 0.0 ? std::abs(mc - oracle) <= 3.0 * se : mc == oracle;
        const double z = se > 0.0 ? (mc - oracle) / se : 0.0;
        body += (Row() << what << eps << beta << tau << sigma << oracle << mc << se << z << pass).str();
        std::ostringstream name;
        name << what << "(eps=" << eps << ",beta=" << beta << ",tau=" << tau;
        if (sigma) name << ",sigma=" << sigma;
        name << ")";
        c.check(name.str(), pass, detail(mc, oracle, 3.0 * se));
    };

    for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const auto [eps, beta] = parse_case(cases[ci]);
        const SpinParams p{beta, eps};
        p.validate();
        const auto loops = sample_loops(p, n, seed_derivation(seed, 0x10000 + ci), chunk, c.workers);

        bool even = true;
        double jumps = 0.0, jumps2 = 0.0;
        for (const SpinLoop& l : loops) {
            even = even && l.jumps.size() % 2 == 0;
            const double j = static_cast<double>(l.jumps.size());
            jumps += j;
            jumps2 += j * j;
        }
        const double jm = jumps / n;
        const double jse = std::sqrt(std::max(0.0, jumps2 / n - jm * jm) / (n - 1.0));
        record("jump_count_mean", eps, beta, 0.0, 0, eps * beta * std::tanh(eps * beta), jm, jse);
        c.check("jump_parity_even(eps=" + g17(eps) + ",beta=" + g17(beta) + ")", even);

        for (std::size_t ti = 0; ti < fracs.size(); ++ti) {
            const double tau = fracs[ti] * beta;
            double acc = 0.0;
            for (const SpinLoop& l : loops) acc += l.value_periodic(0.0, beta) * l.value_periodic(tau, beta);
            const double m = acc / n;
            const double se = std::sqrt(std::max(0.0, 1.0 - m * m) / (n - 1.0));
            record("two_point", eps, beta, tau, 0, two_point_oracle(p, tau), m, se);

            for (int sigma : {1, -1}) {
                const std::uint64_t master =
                    seed_derivation(seed, 0x20000 + 64 * ci + 2 * ti + (sigma > 0 ? 1 : 0));
                const std::size_t chunks = (n + chunk - 1) / chunk;
                std::vector<std::size_t> stay(chunks, 0);
                parallel_for(chunks, c.workers, [&](std::size_t k) {
                    Rng rng(seed_derivation(master, k));
                    const std::size_t stop = std::min(n, (k + 1) * chunk);
                    for (std::size_t i = k * chunk; i < stop; ++i)
                        if (sample_jump_path(eps, tau, sigma, rng).value(tau) == sigma) ++stay[k];
                });
                std::size_t total = 0;
                for (std::size_t s : stay) total += s;
                const double freq = static_cast<double>(total) / n;
                const double oracle = transition_prob(eps, tau, sigma, sigma);
                record("transition_same_sign", eps, beta, tau, sigma, oracle, freq,
                       std::sqrt(oracle * (1.0 - oracle) / n));
            }
        }
    }
    c.csv("spin_check.csv",
          "spin-loop Monte Carlo vs closed-form oracles; times in units of 1/energy, probabilities "
          "and correlations dimensionless",
          body);
}

// ------------------------------------------------------------------ kernels

// 2-D Simpson of kappa(t - s) over [c, c + w] x [a, a + w] with c >= a + w; kappa is
// evaluated directly and memoized on the lattice of differences.
double simpson_disjoint_block(const SourceProfile& src, double beta, double a, double cc,
                              double w, int n, const quad::Options& qo) {
    const double h = w / n;
    std::map<int, double> memo;
    auto kap = [&](int diff) {
        auto it = memo.find(diff);
        if (it != memo.end()) return it->second;
        const double v = kappa(src, beta, (cc - a) + diff * h, qo);
        memo.emplace(diff, v);
        return v;
    };
    auto weight = [n](int i) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    double acc = 0.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) acc += weight(i) * weight(j) * kap(i - j);
    return acc * (h / 3.0) * (h / 3.0);
}

// 2-D Simpson of the diagonal block [a, a + w]^2 in (tau, v) coordinates, s = v (w - tau).
double simpson_diagonal_block(const SourceProfile& src, double beta, double w, int n,
                              const quad::Options& qo) {
    const double h = w / n, hv = 1.0 / n;
    auto weight = [n](int i) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double tau = i * h;
        const double k = kappa(src, beta, tau, qo) * (w - tau);
        for (int j = 0; j <= n; ++j) acc += weight(i) * weight(j) * k;
    }
    return 2.0 * acc * (h / 3.0) * (hv / 3.0);
}

void cmd_kernels(Context& c) {
    const RunConfig& cfg = c.cfg;
    const StateConfig sc = cfg.state_config();
    if (sc.src.is_zero()) throw ConfigError("physical.source must be nonzero for the kernel suite");
    const TestFunction& f = c.fn("f");
    ThermalParams tp;
    tp.beta = sc.beta;
    tp.src = sc.src;
    tp.grid_intervals = sc.kernel_grid;
    tp.quad = sc.quad;
    const auto table = ThermalKernelTable::build_cached(tp, c.cache_dir);
    const auto kern = TestKernel::build(*table, f, sc.kernel_grid);
    quad::Options tight;
    tight.abs_tol = 1e-14;
    tight.rel_tol = 1e-13;
    const double beta = sc.beta;

    std::string body = "identity,computed,reference,error,tolerance,pass\n";
    auto rel = [&](const std::string& name, double got, double want, double tol) {
        const double e = rel_err(got, want);
        body += (Row() << name << got << want << e << tol << (e <= tol)).str();
        c.check(name, e <= tol, detail(got, want, tol));
    };
    auto abs_check = [&](const std::string& name, double got, double want, double tol) {
        const double e = std::abs(got - want);
        body += (Row() << name << got << want << e << tol << (e <= tol)).str();
        c.check(name, e <= tol, detail(got, want, tol));
    };

    const double coth_form = equal_time_pairing(f, sc.src, beta, tight).real();
    rel("equal_time_coth_table", kern->k_values().front().real(), coth_form, 1e-6);
    rel("equal_time_coth_direct", kernel_K(f, sc.src, beta, 0.0, 0.0, tight).real(), coth_form, 1e-8);

    const MPairing mp = m_pairing(f, sc.src, tight);
    if (!mp.in_domain) throw DomainError("kernel suite test function outside dom m: " + mp.reason);
    rel("full_circle", 0.5 * kern->interval_integral(0.0, -0.5 * beta, 0.5 * beta).real(),
        mp.value.value.real(), 1e-6);

    const auto& kv = table->kappa_values();
    double worst = 0.0;
    for (std::size_t i = 0; i < kv.size(); ++i) worst = std::max(worst, std::abs(kv[i] - kv[kv.size() - 1 - i]));
    abs_check("kappa_reflection_table", worst, 0.0, 1e-10);
    abs_check("kappa_reflection_direct", kappa(sc.src, beta, 0.3 * beta, tight),
              kappa(sc.src, beta, 0.7 * beta, tight), 1e-10);

    const double w = 0.3 * beta, a = -0.45 * beta, cc = 0.05 * beta;
    rel("double_block_disjoint", table->double_block(cc, cc + w, a, a + w),
        simpson_disjoint_block(sc.src, beta, a, cc, w, 128, tight), 1e-7);
    const double wd = 0.25 * beta;
    rel("double_block_diagonal", table->double_block(0.0, wd, 0.0, wd),
        simpson_diagonal_block(sc.src, beta, wd, 128, tight), 1e-7);

    const auto ladder = cfg.list("ground_ladder", {4.0, 8.0, 16.0});
    const auto gaps = ground_kernel_gaps(f, sc.src, ladder, 1.0, tight);
    bool monotone = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) monotone = monotone && gaps[i] < gaps[i - 1];
    for (std::size_t i = 0; i < gaps.size(); ++i)
        body += (Row() << ("ground_kernel_gap(beta=" + g17(ladder[i]) + ")") << gaps[i] << 0.0
                       << gaps[i] << 0.0 << true).str();
    c.check("ground_kernel_gap_monotone", monotone);
    c.csv("kernels.csv",
          "kernel identity suite: kappa, K_f and their time integrals (energy^-1 time units); "
          "error is relative unless the identity is a symmetry",
          body);

    std::string tab = "tau,kappa,phi,psi\n";
    for (std::size_t i = 0; i < kv.size(); ++i)
        tab += (Row() << (i * table->step()) << kv[i] << table->phi_values()[i]
                      << table->psi_values()[i]).str();
    c.csv("kappa_table.csv",
          "self-kernel kappa(tau) with Phi = int_0^tau kappa and Psi = int_0^tau Phi on the table grid",
          tab);
}

// ------------------------------------------------------------------ charfun

void cmd_charfun(Context& c) {
    const RunConfig& cfg = c.cfg;
    const EquilibriumState& st = c.state();
    const TestFunction& f = c.fn("f");
    const auto s_grid = cfg.list("s_grid", {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0});
    const bool real_f = is_real_function(f);

    std::string body = "s,re,im,se,gaussian,van_hove_re,van_hove_im\n";
    std::map<double, cplx> seen;
    bool modulus_ok = true, zero_ok = true;
    for (double s : s_grid) {
        const StateValue v = st.charfun_scaled(f, s);
        cplx vh = std::numeric_limits<double>::quiet_NaN();
        if (in_m_domain(f, st.config().src)) vh = st.van_hove_charfun(f, s);
        const double gauss = std::exp(-0.25 * s * s * (v.q0 + v.q_nonzero));
        body += (Row() << s << v.value.real() << v.value.imag() << v.se << gauss << vh.real()
                       << vh.imag()).str();
        if (std::abs(v.value) > gauss * (1.0 + 3.0 * v.spin.se) + 1e-12) modulus_ok = false;
        if (s == 0.0 && v.value != cplx{1.0, 0.0}) zero_ok = false;
        seen[s] = v.value;
    }
    c.check("charfun_modulus_bound", modulus_ok);
    c.check("charfun_normalized_at_zero", zero_ok);
    if (real_f) {
        bool herm = true;
        for (const auto& [s, v] : seen)
            if (seen.count(-s) && std::abs(seen[-s] - std::conj(v)) > 1e-13) herm = false;
        c.check("charfun_hermitian", herm);
    }
    const StateValue at0 = st.charfun(f, 0.0);
    const StateValue one = st.charfun_scaled(f, 1.0);
    c.check("charfun_scaled_unit_matches", std::abs(at0.value - one.value) <= 1e-14,
            detail(std::abs(one.value), std::abs(at0.value), 1e-14));
    if (std::abs(at0.spin.value) > 0.0 && std::abs(at0.value) > 0.0) {
        const double lhs = -4.0 * (std::log(std::abs(at0.value)) - std::log(std::abs(at0.spin.value)));
        const double rhs = at0.q0 + at0.q_nonzero;
        c.check("gaussian_factor_separates", std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, rhs),
                detail(lhs, rhs, 1e-10));
    }
    c.csv("charfun.csv",
          "scaled characteristic function psi(exp(i s Phi(f))) with its van Hove comparator; s "
          "dimensionless",
          body);

    const auto t_grid = cfg.list("t_grid", {0.0, 0.125, 0.25, 0.5});
    std::string tb = "t,re,im,se,q0,q_nonzero\n";
    for (double t : t_grid) {
        const StateValue v = st.charfun(f, t * st.config().beta);
        tb += (Row() << t << v.value.real() << v.value.imag() << v.se << v.q0 << v.q_nonzero).str();
    }
    c.csv("charfun_euclid.csv",
          "Euclidean-time characteristic function at t = fraction of beta; forms of the damped function",
          tb);
}

// ------------------------------------------------------------------ cluster

void cmd_cluster(Context& c) {
    const RunConfig& cfg = c.cfg;
    const EquilibriumState& st = c.state();
    const TestFunction& f = c.fn("f", 0);
    const TestFunction& g = c.fn("g", 1);
    const std::string mode_s = cfg.str("mode", "time");
    if (mode_s != "time" && mode_s != "space")
        throw ConfigError("experiment.mode must be time or space (got '" + mode_s + "')");
    const TransportMode mode = mode_s == "time" ? TransportMode::time : TransportMode::space;
    const auto grid = cfg.list("grid", default_cluster_grid());
    const ClusterReport rep = cluster_scan(st, f, g, mode, grid);

    std::ostringstream body;
    write_cluster_csv(body, rep);
    c.csv("cluster.csv",
          std::string("cluster scan in ") + to_string(mode) +
              " (grid in units of 1/energy or length); lhs is the two-point characteristic function",
          body.str());

    bool zm_same = true;
    for (const ClusterRung& r : rep.rungs) zm_same = zm_same && r.zero_mode_factor == rep.zero_mode_factor;
    c.check("zero_mode_factor_grid_independent", zm_same);
    const double cross0 = st.q_nonzero(f, g).value.real();
    const double floor = cfg.num("cross_floor", 0.05);
    const double cross_last = rep.rungs.back().cross_term;
    c.check("cross_term_decay", std::abs(cross_last) <= floor * std::abs(cross0),
            detail(cross_last, cross0, floor));
    const StateValue again = st.two_point_charfun(f, g, Transport{mode, grid.back()});
    c.check("two_point_recomposition", again.value == rep.rungs.back().lhs);

    const NogoRecord rec = nogo_verdict(st, f, g, rep);
    std::string nb = "verdict,q0_f,q0_g,q0_fg,gap,contradiction,consistent,bec_set_empty,message\n";
    nb += (Row() << to_string(rep.verdict) << rec.q0_f << rec.q0_g << rec.q0_fg << rec.gap
                 << rec.contradiction << rec.consistent << rec.bec_set_empty << rec.message).str();
    c.csv("nogo.csv",
          "no-go record for the tested pair; gap = exp(Re q0(f,g)/2) - 1 (dimensionless); tested "
          "set {" + c.fn_name("f", 0) + ", " + c.fn_name("g", 1) + "}",
          nb);
    c.fact("verdict", to_string(rep.verdict));
    c.fact("nogo", rec.message);
    if (cfg.has("expect_verdict"))
        c.check("verdict_matches", cfg.str("expect_verdict", "") == to_string(rep.verdict),
                std::string("verdict ") + to_string(rep.verdict));
    if (cfg.has("expect_gap")) {
        const double want = cfg.num("expect_gap", 0.0);
        const double tol = cfg.num("gap_tol", 1e-4);
        c.check("nogo_gap", rec.contradiction && std::abs(rec.gap - want) <= tol, detail(rec.gap, want, tol));
    }
    if (cfg.has("expect_consistent"))
        c.check("nogo_consistent", rec.consistent == cfg.flag("expect_consistent", true) &&
                                       rec.bec_set_empty == cfg.flag("expect_consistent", true));
}

// ----------------------------------------------------------------- variance

void cmd_variance(Context& c) {
    const RunConfig& cfg = c.cfg;
    const EquilibriumState& st = c.state();
    const TestFunction& f = c.fn("f");
    if (!is_real_function(f)) throw ConfigError("experiment.f: the variance routes need a real test function");
    st.admit(f);
    const auto z = st.z(f);
    const VarianceRoutes vr = variance_two_routes(st.ensemble(), *st.kernel(f), *z,
                                                  cfg.numerics.variance_cells, cfg.numerics.batches);
    std::string vb = "var_direct,se_direct,var_kernel,se_kernel,var_kernel_fine,cells,grid_too_coarse,ess,agree\n";
    vb += (Row() << vr.var_direct << vr.se_direct << vr.var_kernel << vr.se_kernel
                 << vr.var_kernel_fine << vr.cells << vr.grid_too_coarse << vr.ess << vr.agree()).str();
    c.csv("variance.csv", "variance of the spin variable Z by two routes (dimensionless)", vb);
    c.check("variance_routes_agree", vr.agree(),
            detail(vr.var_kernel, vr.var_direct, std::max(0.05 * vr.var_direct, 3.0 * std::hypot(vr.se_direct, vr.se_kernel))));
    if (vr.grid_too_coarse) c.fact("variance_grid", "too coarse: doubling shifted var_kernel by > 2%");

    const auto s_grid = cfg.list("s_grid", {0.0, 0.25, 0.5, 1.0, 2.0});
    const auto rows = deviation_bound_check(st.ensemble(), *z, s_grid);
    std::string db = "s,lhs,rhs,se,margin,ok\n";
    bool all_ok = true;
    for (const DeviationRow& r : rows) {
        db += (Row() << r.s << r.lhs << r.rhs << r.se << r.margin << r.ok).str();
        all_ok = all_ok && r.ok;
    }
    c.csv("deviation.csv", "deviation bound |S(sf) - exp(-i s E[Z])| <= s^2 Var(Z)/2 + 5 SE", db);
    c.check("deviation_bound", all_ok);

    const double tol = cfg.num("cnumber_tol", 1e-3);
    const CNumberEvidence ev = cnumber_criterion(st.ensemble(), *z, tol);
    std::string cb = "holds,var_direct,mean,se_var,ess,tol\n";
    cb += (Row() << ev.holds << ev.var_direct << ev.mean << ev.se_var << ev.ess << tol).str();
    c.csv("cnumber.csv", "c-number substitution criterion: Var(Z) <= tol (E[Z]^2 + 1)", cb);
    c.fact("cnumber_holds", ev.holds ? "true" : "false");
    if (cfg.has("expect_cnumber"))
        c.check("cnumber_expected", ev.holds == cfg.flag("expect_cnumber", false));

    std::ofstream diag(c.out / "ensemble_diagnostics.txt", std::ios::binary);
    write_ensemble_diagnostics(diag, st.ensemble());
    c.files.push_back((c.out / "ensemble_diagnostics.txt").string());
}

// ---------------------------------------------------------------- resolvent

void cmd_resolvent(Context& c) {
    const RunConfig& cfg = c.cfg;
    const auto lambdas = cfg.list("lambda", {1.0, 2.0, -1.0});
    for (double l : lambdas)
        if (l == 0.0) throw ConfigError("experiment.lambda must be nonzero (got 0)");
    const double mu = cfg.num("mu", 2.0);
    if (mu == 0.0) throw ConfigError("experiment.mu must be nonzero (got 0)");
    const EquilibriumState& st = c.state();
    const TestFunction& f = c.fn("f");
    ResolventOptions ro;
    ro.abs_tol = cfg.num("quad_tol", 1e-10);

    std::string body = "kind,lambda,mu,t,re,im,abs,err,bound,ok\n";
    bool bounds_ok = true;
    for (double l : lambdas) {
        const ResolventValue r = resolvent_onepoint(st, l, f, ro);
        const BoundCheck b = onepoint_bound(l, r);
        bounds_ok = bounds_ok && b.ok;
        body += (Row() << "onepoint" << l << 0.0 << 1.0 << r.value.real() << r.value.imag()
                       << b.modulus << r.error() << b.bound << b.ok).str();
    }
    c.check("onepoint_norm_bound", bounds_ok);
    if (cfg.has("g")) {
        const TestFunction& g = c.fn("g", 1);
        const double l = lambdas.front();
        const ResolventValue r = resolvent_twopoint(st, l, f, mu, g, ro);
        const BoundCheck b = twopoint_bound(l, mu, r);
        body += (Row() << "twopoint" << l << mu << 1.0 << r.value.real() << r.value.imag()
                       << b.modulus << r.error() << b.bound << b.ok).str();
        c.check("twopoint_norm_bound", b.ok, detail(b.modulus, b.bound, b.error));
    }
    if (cfg.has("decay_f")) {
        const TestFunction& h = c.fn("decay_f");
        const double l = cfg.num("decay_lambda", 1.0);
        const DecayScan scan = bec_decay_scan(st, l, h, cfg.list("t_grid", {1.0, 2.0, 4.0}),
                                              cfg.num("decay_ratio", 0.1), cfg.num("q_floor", 1e-3), ro);
        for (const DecayRow& r : scan.rows)
            body += (Row() << "decay" << l << 0.0 << r.t << r.r.value.real() << r.r.value.imag()
                           << r.modulus << r.r.error() << 1.0 / std::abs(l) << scan.ok()).str();
        c.check("bec_decay", scan.ok(),
                detail(scan.rows.back().modulus,
                       cfg.num("decay_ratio", 0.1) * scan.rows.front().modulus, 0.0));
    }
    c.csv("resolvent.csv",
          "resolvent expectations psi(R(lambda, t f)) via Laplace quadrature; lambda in energy units, "
          "err = quadrature + 3 x Monte Carlo bound",
          body);
}

// ------------------------------------------------------------------- ideals

void cmd_ideals(Context& c) {
    const RunConfig& cfg = c.cfg;
    const EquilibriumState& st = c.state();
    std::vector<std::pair<std::string, TestFunction>> dirs;
    for (const std::string& name : cfg.names("directions", cfg.function_names()))
        dirs.emplace_back(name, cfg.function(name));
    const IdealReport rep = ideal_report(st, dirs, cfg.list("t_grid", {1.0, 2.0, 4.0, 8.0}));
    std::ostringstream body;
    write_ideal_csv(body, rep);
    c.csv("ideals.csv", "direction classification with resolvent witnesses and decay summaries",
          body.str());
    bool ok = true;
    for (const IdealRow& r : rep.rows) {
        if (r.direction == Direction::physical) ok = ok && r.witness_ok;
        if (r.direction == Direction::bec_generator) ok = ok && r.decay_ok;
    }
    c.check("ideal_witnesses", ok);
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
        return s.empty() ? std::string("(empty)") : s;
    };
    c.fact("J_ir_generators", join(rep.j_ir));
    c.fact("rejected_outside_D0", join(rep.rejected));
    c.fact("X_bec", join(rep.x_bec));
    if (cfg.has("expect_xbec_empty"))
        c.check("x_bec_empty_expected", rep.x_bec_empty() == cfg.flag("expect_xbec_empty", true));
}

// ------------------------------------------------------------------ gp-scan

void cmd_gp_scan(Context& c) {
    const RunConfig& cfg = c.cfg;
    const EquilibriumState& st = c.state();
    std::vector<TestFunction> seq;
    for (const std::string& name : cfg.names("sequence", cfg.function_names()))
        seq.push_back(cfg.function(name));
    const GpReport rep = gp_limit_scan(st, seq, cfg.list("s_grid", {0.5, 1.0, 2.0}), cfg.num("tol", 1e-3));
    std::string body = "member,s,re,im,se,mean_z,gap\n";
    for (const GpRow& r : rep.rows)
        body += (Row() << static_cast<unsigned long>(r.index) << r.s << r.phi.real() << r.phi.imag()
                       << r.se << r.mean_z << r.gap).str();
    body += "# a," + g17(rep.a) + ",verdict," + to_string(rep.verdict) + "\n";
    c.csv("gp_scan.csv",
          "empirical characteristic functions of Z along the sequence vs exp(i s a), a = -E[Z] on the "
          "last member",
          body);
    c.fact("gp_verdict", to_string(rep.verdict));
    c.fact("gp_a", g17(rep.a));
    if (cfg.has("expect"))
        c.check("gp_verdict_expected", cfg.str("expect", "") == to_string(rep.verdict));
}

using Command = std::function<void(Context&)>;

const std::map<std::string, std::pair<Command, bool>>& table() {
    static const std::map<std::string, std::pair<Command, bool>> t{
        {"spin-check", {cmd_spin_check, true}}, {"kernels", {cmd_kernels, false}},
        {"charfun", {cmd_charfun, true}},       {"cluster", {cmd_cluster, true}},
        {"variance", {cmd_variance, true}},     {"resolvent", {cmd_resolvent, true}},
        {"ideals", {cmd_ideals, true}},         {"gp-scan", {cmd_gp_scan, true}},
    };
    return t;
}

void write_summary(const fs::path& path, const RunRequest& req, const RunConfig* cfg,
                   const Context* ctx, const RunResult& res) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return;
    out << "subcommand = " << req.subcommand << '\n';
    if (cfg) {
        out << "seed = " << cfg->numerics.seed << '\n';
        out << "samples = " << cfg->numerics.samples << '\n';
        out << "config_sha1 = " << git_blob_sha1(cfg->text) << '\n';
    }
    out << "simd = " << simd::kernels().name << '\n';
    if (ctx)
        for (const auto& [k, v] : ctx->facts) out << k << " = " << v << '\n';
    for (const Assertion& a : res.assertions)
        out << (a.pass ? "PASS " : "FAIL ") << a.name << (a.detail.empty() ? "" : ": " + a.detail) << '\n';
    out << "exit_status = " << res.exit_code << '\n';
    if (!res.message.empty()) out << "message = " << res.message << '\n';
}

} // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"spin-check", "kernels", "charfun", "cluster",
                                                "variance",   "resolvent", "ideals", "gp-scan"};
    return names;
}

RunResult run(const RunRequest& req) {
    RunResult res;
    std::optional<RunConfig> cfg;
    std::optional<Context> ctx;
    fs::path out;
    try {
        auto it = table().find(req.subcommand);
        if (it == table().end()) throw ConfigError("unknown subcommand '" + req.subcommand + "'");
        cfg = load_config(req.config_path);
        if (req.seed) cfg->numerics.seed = *req.seed;
        if (req.samples) cfg->numerics.samples = *req.samples;
        if (req.out_dir) cfg->output.dir = *req.out_dir;
        if (req.cache_dir) cfg->output.cache_dir = *req.cache_dir;
        cfg->validate(it->second.second);
        out = cfg->output.dir;
        fs::create_directories(out);
        const int workers = req.workers > 0 ? req.workers : default_workers();
        ctx.emplace(*cfg, out, cfg->output.cache ? cfg->output.cache_dir : std::string{}, workers);
        it->second.first(*ctx);
        res.assertions = ctx->asserts;
        res.files = ctx->files;
        for (const Assertion& a : res.assertions)
            if (!a.pass) {
                res.exit_code = exit_assertion;
                res.message = "assertion failed: " + a.name;
                break;
            }
    } catch (const ConfigError& e) {
        res.exit_code = exit_config;
        res.message = std::string("config error: ") + e.what();
    } catch (const ConvergenceError& e) {
        res.exit_code = exit_convergence;
        res.message = std::string("numerical non-convergence: ") + e.what() +
                      " (achieved " + g17(e.achieved()) + ")";
    } catch (const DomainError& e) {
        res.exit_code = exit_config;
        res.message = std::string("domain error: ") + e.what();
    } catch (const std::invalid_argument& e) {
        res.exit_code = exit_config;
        res.message = std::string("invalid argument: ") + e.what();
    } catch (const std::exception& e) {
        res.exit_code = exit_assertion;
        res.message = std::string("failure: ") + e.what();
    }
    if (ctx) {
        res.assertions = ctx->asserts;
        res.files = ctx->files;
    }
    if (!out.empty()) {
        const fs::path summary = out / "summary.txt";
        write_summary(summary, req, cfg ? &*cfg : nullptr, ctx ? &*ctx : nullptr, res);
        res.files.push_back(summary.string());
    }
    if (!req.quiet) {
        for (const Assertion& a : res.assertions)
            std::cout << (a.pass ? "PASS " : "FAIL ") << a.name << '\n';
        if (!res.message.empty()) std::cerr << res.message << '\n';
    }
    return res;
}

} // namespace sbl::harness
