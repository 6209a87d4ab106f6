// equilibrium_state.hpp - characteristic functionals of the thermal spin-boson state, the
// van Hove comparator and the zero-temperature ladder of the spin factor

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sbl/momentum_space.hpp"
#include "sbl/thermal_kernels.hpp"
#include "sbl/tilted_ensemble.hpp"

namespace sbl {

struct StateConfig {
    double beta{1.0};
    double eps{0.0};
    Space space{};
    double mu{0.0};
    double n0{0.0}; // condensate number density
    SourceProfile src;
    quad::Options quad{};
    int kernel_grid{2048};
    bool weyl_phase{false}; // insert exp(-(i/2) sigma(f, Tg)) into two-point functionals
};

// A charfun value with its Gaussian and spin ingredients.
struct StateValue {
    cplx value{1.0, 0.0};
    double se{0.0};
    double q0{0.0};
    double q_nonzero{0.0};
    Estimate spin;
};

enum class TransportMode { time, space };

struct Transport {
    TransportMode mode{TransportMode::time};
    double amount{0.0}; // u for time, |x| along the first axis for space

    TestFunction apply(const TestFunction& g) const;
};

const char* to_string(TransportMode m);

class EquilibriumState {
public:
    EquilibriumState(StateConfig cfg, std::shared_ptr<const ThermalKernelTable> table,
                     std::shared_ptr<const TiltedEnsemble> ensemble);

    // Builds (or loads from cache_dir when non-empty) the kernel table and samples the ensemble.
    static std::shared_ptr<const EquilibriumState> create(const StateConfig& cfg,
                                                          const EnsembleOptions& opt,
                                                          const std::string& cache_dir = "");

    const StateConfig& config() const { return cfg_; }
    const ThermalKernelTable& table() const { return *table_; }
    const TiltedEnsemble& ensemble() const { return *ens_; }
    std::shared_ptr<const TiltedEnsemble> ensemble_handle() const { return ens_; }

    // Throws DomainError unless f is physical or a BEC generator.
    Direction admit(const TestFunction& f) const;

    std::shared_ptr<const TestKernel> kernel(const TestFunction& f) const;
    std::shared_ptr<const ZValues> z(const TestFunction& f, double t_offset = 0.0) const;

    double q0(const TestFunction& f) const;
    double q_nonzero(const TestFunction& f) const;
    FormValue q0(const TestFunction& f, const TestFunction& g) const;
    FormValue q_nonzero(const TestFunction& f, const TestFunction& g) const;
    double q_bec(const TestFunction& f) const { return q0(f) + q_nonzero(f); }

    // S_t(f) = E~[exp(-i Z_{f,t})].
    Estimate spin_factor(const TestFunction& f, double t = 0.0) const;

    // exp(-q0(f_t)/4 - q_nonzero(f_t)/4) S_t(f) with f_t = exp(-|t| omega / 2) f.
    StateValue charfun(const TestFunction& f, double t = 0.0) const;
    // exp(-s^2 (q0 + q_nonzero)(f) / 4) E~[exp(-i s Z_f)].
    StateValue charfun_scaled(const TestFunction& f, double s) const;
    // exp(-q0(f+g)/4 - q_nonzero(f+Tg)/4) S(f + Tg), optionally with the Weyl phase.
    StateValue two_point_charfun(const TestFunction& f, const TestFunction& g,
                                 const Transport& transport) const;
    // exp(-s^2 (q0 + q_nonzero)(f) / 4) exp(-i s Re<f, m>).
    cplx van_hove_charfun(const TestFunction& f, double s) const;

private:
    StateConfig cfg_;
    std::shared_ptr<const ThermalKernelTable> table_;
    std::shared_ptr<const TiltedEnsemble> ens_;

    mutable std::mutex memo_mutex_;
    mutable std::map<std::uint64_t, std::shared_ptr<const TestKernel>> kernels_;
};

// Weyl-expectation matrix M_jk = exp((i/2) sigma(f_j, f_k)) psi(W(f_k - f_j)). Hermitian when
// every f_j has a real transform; complex transforms make Z complex and break the symmetry.
struct WeylMatrix {
    Eigen::MatrixXcd m;
    Eigen::VectorXd eigenvalues;
    double se{0.0}; // Frobenius norm of the entrywise standard errors
    bool positive(double n_se = 5.0) const;
};
WeylMatrix weyl_matrix(const EquilibriumState& state, const std::vector<TestFunction>& fs);

struct GroundRung {
    double beta{0.0};
    Estimate spin;
    double diff_from_previous{0.0};
    double m_pairing{0.0}; // Re<f, m>
};
// S_{beta,0}(f) along an increasing ladder, each rung with its own exact finite-beta kernel.
std::vector<GroundRung> ground_limit_spin_factor(const StateConfig& cfg, const TestFunction& f,
                                                 const std::vector<double>& beta_ladder,
                                                 const EnsembleOptions& opt,
                                                 const std::string& cache_dir = "");
// |K_beta(tau) - K_inf(tau)| per rung, the finite-beta kernel's gap to the ground-state kernel.
std::vector<double> ground_kernel_gaps(const TestFunction& f, const SourceProfile& src,
                                       const std::vector<double>& beta_ladder, double tau,
                                       const quad::Options& opt = {});

} // namespace sbl
