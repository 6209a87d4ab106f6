// tilted_ensemble.hpp - weighted spin-loop ensembles, the spin random variable Z, and the
// estimators built from it (spin factor, field shift, variance routes, c-number test)

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "sbl/momentum_space.hpp"
#include "sbl/spin_loop.hpp"
#include "sbl/thermal_kernels.hpp"

namespace sbl {

enum class EnsembleMode {
    sampled, // loops from the free spin measure, importance-weighted by W
    frozen,  // diagnostic: every loop is X = +1 with no jumps
};

struct EnsembleOptions {
    std::size_t samples{200000};
    std::uint64_t seed{1};
    std::size_t chunk_size{4096};
    int workers{1};
    EnsembleMode mode{EnsembleMode::sampled};
};

// Per-loop values of Z for one (test function, time offset).
struct ZValues {
    std::vector<double> re;
    std::vector<double> im;
    bool all_zero{true};
    bool real{true};
};

struct Estimate {
    cplx value{0.0, 0.0};
    double se{0.0};
    double ess{0.0};
};

// log W of a loop via the jump-boundary form -1/2 sum_{p<q} g_p g_q Psi(|b_p - b_q|).
double log_weight(const SpinLoop& loop, const ThermalKernelTable& table);
// Reference form 1/4 sum_{i,j} X_i X_j double_block(I_i, I_j) over constancy intervals.
double log_weight_pairs(const SpinLoop& loop, const ThermalKernelTable& table);
// Z = 1/2 sum_i X_i int_{I_i} K_f(|t - u|) du.
cplx z_value(const SpinLoop& loop, const TestKernel& kernel, double t_offset);
// The loop rotated by a on the circle S_beta.
SpinLoop rotate_loop(const SpinLoop& loop, double a, double beta);

class TiltedEnsemble {
public:
    static std::shared_ptr<const TiltedEnsemble> build(const SpinParams& params,
                                                       std::shared_ptr<const ThermalKernelTable> table,
                                                       const EnsembleOptions& opt);

    std::size_t size() const { return signs_.size(); }
    const SpinParams& params() const { return params_; }
    const ThermalKernelTable& table() const { return *table_; }
    std::shared_ptr<const ThermalKernelTable> table_handle() const { return table_; }
    const EnsembleOptions& options() const { return opt_; }
    std::uint64_t master_seed() const { return opt_.seed; }
    bool frozen() const { return opt_.mode == EnsembleMode::frozen; }

    SpinLoop loop(std::size_t i) const;
    int sign(std::size_t i) const { return signs_[i]; }
    std::size_t jump_count(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
    const std::vector<double>& log_weights() const { return logw_; }
    // exp(logW - max logW)
    const std::vector<double>& weights() const { return w_; }
    double max_log_weight() const { return max_logw_; }
    double sum_w() const { return sum_w_; }
    double sum_w2() const { return sum_w2_; }
    double ess() const { return sum_w2_ > 0.0 ? sum_w_ * sum_w_ / sum_w2_ : 0.0; }
    bool degenerate() const { return ess() < 0.01 * static_cast<double>(size()); }

    // log(E_free[W] * 2 cosh(eps beta)).
    double log_partition() const;

    // Memoized when cache_key != 0.
    std::shared_ptr<const ZValues> z_values(const TestKernel& kernel, double t_offset,
                                            std::uint64_t cache_key = 0) const;

private:
    SpinParams params_;
    std::shared_ptr<const ThermalKernelTable> table_;
    EnsembleOptions opt_;
    std::vector<std::int8_t> signs_;
    std::vector<std::uint32_t> offsets_;
    std::vector<double> jumps_;
    std::vector<double> logw_;
    std::vector<double> w_;
    double max_logw_{0.0};
    double sum_w_{0.0};
    double sum_w2_{0.0};

    mutable std::mutex cache_mutex_;
    mutable std::map<std::pair<std::uint64_t, double>, std::shared_ptr<const ZValues>> z_cache_;
};

// E~[exp(-i (c1 Z1 + c2 Z2))] with the self-normalized standard error.
Estimate phase_average(const TiltedEnsemble& ens, const ZValues& z1, double c1,
                       const ZValues* z2 = nullptr, double c2 = 0.0);
// S(s f) = E~[exp(-i s Z_f)]. For real Z, std::logic_error if |S| exceeds 1 by more than 3 SE.
Estimate spin_factor(const TiltedEnsemble& ens, const ZValues& z, double s = 1.0);
// Plain average E~[Z] (complex for complex test functions).
Estimate z_mean(const TiltedEnsemble& ens, const ZValues& z);
// ell = -E~[Re Z].
double ell_shift(const TiltedEnsemble& ens, const ZValues& z);

struct ZMoments {
    double mean{0.0};
    double var{0.0};
    double se_mean{0.0};
    double se_var{0.0};
    double ess{0.0};
};
ZMoments z_moments(const TiltedEnsemble& ens, const ZValues& z);

struct VarianceRoutes {
    double var_direct{0.0};
    double se_direct{0.0};
    double var_kernel{0.0};      // default cell grid
    double se_kernel{0.0};       // batch means
    double var_kernel_fine{0.0}; // doubled cell grid
    int cells{64};
    bool grid_too_coarse{false};
    double ess{0.0};

    bool agree(double rel = 0.05, double n_se = 3.0) const;
};
VarianceRoutes variance_two_routes(const TiltedEnsemble& ens, const TestKernel& kernel,
                                   const ZValues& z, int cells = 64, int batches = 20);

struct DeviationRow {
    double s{0.0};
    double lhs{0.0};
    double rhs{0.0};
    double se{0.0};
    double margin{0.0}; // rhs - lhs
    bool ok{true};
};
std::vector<DeviationRow> deviation_bound_check(const TiltedEnsemble& ens, const ZValues& z,
                                                const std::vector<double>& s_grid);

struct CNumberEvidence {
    bool holds{false};
    double var_direct{0.0};
    double mean{0.0};
    double ess{0.0};
    double se_var{0.0};
};
CNumberEvidence cnumber_criterion(const TiltedEnsemble& ens, const ZValues& z, double tol);

// Ensemble summary CSV: index, sign, jumps, logW, then Re/Im Z per named column.
void write_ensemble_csv(std::ostream& os, const TiltedEnsemble& ens,
                        const std::vector<std::pair<std::string, const ZValues*>>& columns);
// Flat key = value diagnostics.
void write_ensemble_diagnostics(std::ostream& os, const TiltedEnsemble& ens);

} // namespace sbl
