#include "sbl/equilibrium_state.hpp"

#include "sbl/errors.hpp"
#include "sbl/hash.hpp"

#include <cmath>
#include <stdexcept>

namespace sbl {

const char* to_string(TransportMode m) { return m == TransportMode::time ? "time" : "space"; }

TestFunction Transport::apply(const TestFunction& g) const {
    if (mode == TransportMode::time) return g.time_evolved(amount);
    std::vector<double> x(static_cast<std::size_t>(g.space().d), 0.0);
    x[0] = amount;
    return g.shifted(x);
}

EquilibriumState::EquilibriumState(StateConfig cfg, std::shared_ptr<const ThermalKernelTable> table,
                                   std::shared_ptr<const TiltedEnsemble> ensemble)
    : cfg_(std::move(cfg)), table_(std::move(table)), ens_(std::move(ensemble)) {
    if (!table_ || !ens_) throw std::invalid_argument("state needs a kernel table and an ensemble");
    if (table_->beta() != cfg_.beta || ens_->params().beta != cfg_.beta)
        throw std::invalid_argument("beta differs between state, kernel table and ensemble");
    if (ens_->params().eps != cfg_.eps)
        throw std::invalid_argument("epsilon differs between state and ensemble");
    if (table_->source().content_hash() != cfg_.src.content_hash())
        throw std::invalid_argument("kernel table was built for a different source");
    if (ens_->table().key() != table_->key())
        throw std::invalid_argument("ensemble was weighted with a different kernel table");
    if (cfg_.n0 < 0.0) throw std::invalid_argument("n0 must be >= 0");
}

std::shared_ptr<const EquilibriumState> EquilibriumState::create(const StateConfig& cfg,
                                                                 const EnsembleOptions& opt,
                                                                 const std::string& cache_dir) {
    ThermalParams tp;
    tp.beta = cfg.beta;
    tp.src = cfg.src;
    tp.grid_intervals = cfg.kernel_grid;
    tp.quad = cfg.quad;
    auto table = ThermalKernelTable::build_cached(tp, cache_dir);
    auto ens = TiltedEnsemble::build(SpinParams{cfg.beta, cfg.eps}, table, opt);
    return std::make_shared<EquilibriumState>(cfg, table, ens);
}

Direction EquilibriumState::admit(const TestFunction& f) const {
    const Direction d = classify_direction(f, cfg_.src, cfg_.n0);
    if (d == Direction::infrared_singular) {
        std::string why;
        in_m_domain(f, cfg_.src, &why);
        throw DomainError("infrared-singular direction (J_ir generator): " + why);
    }
    if (d == Direction::outside_D0)
        throw DomainError("direction outside the form domain: transform not bounded and square integrable");
    return d;
}

std::shared_ptr<const TestKernel> EquilibriumState::kernel(const TestFunction& f) const {
    const std::uint64_t key = f.content_hash();
    {
        std::lock_guard<std::mutex> lock(memo_mutex_);
        auto it = kernels_.find(key);
        if (it != kernels_.end()) return it->second;
    }
    auto k = TestKernel::build(*table_, f, cfg_.kernel_grid);
    std::lock_guard<std::mutex> lock(memo_mutex_);
    return kernels_.emplace(key, k).first->second;
}

std::shared_ptr<const ZValues> EquilibriumState::z(const TestFunction& f, double t_offset) const {
    if (std::abs(t_offset) > 0.5 * cfg_.beta)
        throw std::invalid_argument("Euclidean time offset outside [-beta/2, beta/2]");
    const std::uint64_t key = Fnv1a().add(f.content_hash()).add(std::uint64_t{1}).value();
    return ens_->z_values(*kernel(f), t_offset, key);
}

double EquilibriumState::q0(const TestFunction& f) const {
    return form_zero(f, f, cfg_.n0).value.real();
}

double EquilibriumState::q_nonzero(const TestFunction& f) const {
    return form_nonzero(f, f, cfg_.beta, cfg_.mu, cfg_.quad).value.real();
}

FormValue EquilibriumState::q0(const TestFunction& f, const TestFunction& g) const {
    return form_zero(f, g, cfg_.n0);
}

FormValue EquilibriumState::q_nonzero(const TestFunction& f, const TestFunction& g) const {
    return form_nonzero(f, g, cfg_.beta, cfg_.mu, cfg_.quad);
}

Estimate EquilibriumState::spin_factor(const TestFunction& f, double t) const {
    return sbl::spin_factor(*ens_, *z(f, t), 1.0);
}

StateValue EquilibriumState::charfun(const TestFunction& f, double t) const {
    StateValue r;
    if (f.is_zero()) return r;
    admit(f);
    const double at = std::abs(t);
    if (at == 0.0) {
        r.q0 = q0(f);
        r.q_nonzero = q_nonzero(f);
    } else {
        const TestFunction ft = f.damped(at);
        r.q0 = q0(ft);
        const double undamped = q0(f);
        if (std::abs(r.q0 - undamped) > 1e-12 * std::max(1.0, std::abs(undamped)))
            throw std::logic_error("zero-mode form changed under Euclidean damping");
        r.q_nonzero = q_nonzero(ft);
    }
    r.spin = spin_factor(f, t);
    const double g = std::exp(-0.25 * (r.q0 + r.q_nonzero));
    r.value = g * r.spin.value;
    r.se = g * r.spin.se;
    return r;
}

StateValue EquilibriumState::charfun_scaled(const TestFunction& f, double s) const {
    StateValue r;
    if (f.is_zero() || s == 0.0) return r;
    admit(f);
    r.q0 = q0(f);
    r.q_nonzero = q_nonzero(f);
    r.spin = phase_average(*ens_, *z(f, 0.0), s);
    const double g = std::exp(-0.25 * s * s * (r.q0 + r.q_nonzero));
    r.value = g * r.spin.value;
    r.se = g * r.spin.se;
    return r;
}

StateValue EquilibriumState::two_point_charfun(const TestFunction& f, const TestFunction& g,
                                               const Transport& transport) const {
    const TestFunction tg = transport.apply(g);
    const TestFunction h = f + tg;
    StateValue r;
    if (h.is_zero()) return r;
    admit(f);
    if (!g.is_zero()) admit(tg);
    const TestFunction plain = f + g;
    r.q0 = q0(plain);
    r.q_nonzero = q_nonzero(h);
    r.spin = spin_factor(h, 0.0);
    const double gauss = std::exp(-0.25 * (r.q0 + r.q_nonzero));
    r.value = gauss * r.spin.value;
    r.se = gauss * r.spin.se;
    if (cfg_.weyl_phase) r.value *= std::polar(1.0, -0.5 * symplectic(f, tg, cfg_.quad));
    return r;
}

cplx EquilibriumState::van_hove_charfun(const TestFunction& f, double s) const {
    if (f.is_zero() || s == 0.0) return 1.0;
    const MPairing mp = m_pairing(f, cfg_.src, cfg_.quad);
    if (!mp.in_domain) throw DomainError("van Hove comparator diverges: " + mp.reason);
    const double g = std::exp(-0.25 * s * s * q_bec(f));
    return g * std::polar(1.0, -s * mp.value.value.real());
}

bool WeylMatrix::positive(double n_se) const {
    return eigenvalues.size() == 0 || eigenvalues.minCoeff() >= -n_se * se - 1e-12;
}

WeylMatrix weyl_matrix(const EquilibriumState& state, const std::vector<TestFunction>& fs) {
    const auto n = static_cast<Eigen::Index>(fs.size());
    WeylMatrix w;
    w.m.resize(n, n);
    double se2 = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (j == k) {
                w.m(j, k) = 1.0;
                continue;
            }
            const TestFunction diff = fs[k] + fs[j].scaled(-1.0);
            const StateValue v = state.charfun(diff, 0.0);
            const double sigma = symplectic(fs[j], fs[k], state.config().quad);
            w.m(j, k) = std::polar(1.0, 0.5 * sigma) * v.value;
            se2 += v.se * v.se;
        }
    }
    w.se = std::sqrt(se2);
    // Symmetrize against Monte Carlo asymmetry before the Hermitian solve.
    const Eigen::MatrixXcd herm = 0.5 * (w.m + w.m.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    w.eigenvalues = solver.eigenvalues();
    return w;
}

std::vector<GroundRung> ground_limit_spin_factor(const StateConfig& cfg, const TestFunction& f,
                                                 const std::vector<double>& beta_ladder,
                                                 const EnsembleOptions& opt,
                                                 const std::string& cache_dir) {
    for (std::size_t i = 1; i < beta_ladder.size(); ++i)
        if (!(beta_ladder[i] > beta_ladder[i - 1]))
            throw std::invalid_argument("beta ladder must be strictly increasing");
    std::vector<GroundRung> out;
    for (double beta : beta_ladder) {
        StateConfig c = cfg;
        c.beta = beta;
        const auto state = EquilibriumState::create(c, opt, cache_dir);
        GroundRung r;
        r.beta = beta;
        r.spin = state->spin_factor(f, 0.0);
        const MPairing mp = m_pairing(f, cfg.src, cfg.quad);
        if (mp.in_domain) r.m_pairing = mp.value.value.real();
        if (!out.empty()) r.diff_from_previous = std::abs(r.spin.value - out.back().spin.value);
        out.push_back(r);
    }
    return out;
}

std::vector<double> ground_kernel_gaps(const TestFunction& f, const SourceProfile& src,
                                       const std::vector<double>& beta_ladder, double tau,
                                       const quad::Options& opt) {
    const cplx ground = kernel_K_ground(f, src, tau, opt);
    std::vector<double> gaps;
    for (double beta : beta_ladder)
        gaps.push_back(std::abs(kernel_K(f, src, beta, 0.0, tau, opt) - ground));
    return gaps;
}

} // namespace sbl
