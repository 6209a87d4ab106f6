// thermal_kernels.hpp - beta-periodic covariance kernels of the source, their exact time
// antiderivatives, and per-test-function kernels tabulated on a uniform time grid

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "sbl/momentum_space.hpp"
#include "sbl/quadrature.hpp"

namespace sbl {

// Thermal factor T(tau, w) = (e^{-tau w} + e^{-(beta - tau) w}) / (1 - e^{-beta w}) and its
// first two time antiderivatives from tau = 0.
namespace thermal {
double factor(double tau, double w, double beta);
double first_antiderivative(double tau, double w, double beta);
double second_antiderivative(double tau, double w, double beta);
} // namespace thermal

struct ThermalParams {
    double beta{1.0};
    SourceProfile src;
    int grid_intervals{2048};
    int max_doublings{4};
    double refine_tol{1e-9};
    quad::Options quad{};

    std::uint64_t key() const;
};

// Uniform-grid cubic Hermite table: node values and node derivatives on [0, span].
template <class T>
struct HermiteGrid {
    double span{0.0};
    std::vector<T> value;
    std::vector<T> deriv;

    std::size_t intervals() const { return value.empty() ? 0 : value.size() - 1; }
    T operator()(double u) const;
};

class ThermalKernelTable {
public:
    static std::shared_ptr<const ThermalKernelTable> build(const ThermalParams& params);
    // Reuses a cached table from cache_dir when its header matches; writes one otherwise.
    static std::shared_ptr<const ThermalKernelTable> build_cached(const ThermalParams& params,
                                                                  const std::string& cache_dir);
    // Test hook: kappa identically c0 (Psi(u) = c0 u^2 / 2).
    static std::shared_ptr<const ThermalKernelTable> constant_kappa(double c0, double beta,
                                                                    int intervals);

    double beta() const { return beta_; }
    const SourceProfile& source() const { return src_; }
    bool zero_source() const { return zero_; }
    std::size_t intervals() const { return psi_.intervals(); }
    double step() const { return beta_ / static_cast<double>(intervals()); }
    std::uint64_t key() const { return key_; }
    const quad::Options& quad_options() const { return quad_; }
    int doublings() const { return doublings_; }

    const std::vector<double>& kappa_values() const { return kappa_; }
    const std::vector<double>& phi_values() const { return psi_.deriv; }
    const std::vector<double>& psi_values() const { return psi_.value; }

    // Psi(u) = int_0^u int_0^v kappa, for 0 <= u <= beta (clamped).
    double psi(double u) const;
    // int_[a,b] x [c,d] kappa(|t - s|) dt ds; all four times must lie within one period.
    double double_block(double a, double b, double c, double d) const;

    bool save(const std::string& path) const;
    static std::shared_ptr<const ThermalKernelTable> load(const std::string& path,
                                                          const ThermalParams& params);

private:
    double beta_{1.0};
    SourceProfile src_;
    bool zero_{true};
    std::uint64_t key_{0};
    quad::Options quad_{};
    int doublings_{0};
    std::vector<double> kappa_;
    HermiteGrid<double> psi_; // value Psi, derivative Phi
};

// K_f(tau) = <f, T(tau) omega m> on [0, beta] with its antiderivative P_f.
class TestKernel {
public:
    static std::shared_ptr<const TestKernel> build(const ThermalKernelTable& table,
                                                   const TestFunction& f, int grid_intervals = 2048,
                                                   int max_doublings = 4, double refine_tol = 1e-9);

    bool zero() const { return zero_; }
    double beta() const { return beta_; }
    std::size_t intervals() const { return p_.intervals(); }
    const std::vector<cplx>& k_values() const { return p_.deriv; }
    const std::vector<cplx>& p_values() const { return p_.value; }

    cplx antiderivative(double tau) const; // P_f(tau), 0 <= tau <= beta
    cplx odd_antiderivative(double v) const; // sign(v) P_f(|v|), |v| <= beta
    // int_a^b K_f(|t - u|) du for a, b in S_beta.
    cplx interval_integral(double t, double a, double b) const;

private:
    double beta_{1.0};
    bool zero_{true};
    HermiteGrid<cplx> p_;
};

// Direct quadratures (reference paths, not tabulated).
double kappa(const SourceProfile& src, double beta, double tau, const quad::Options& opt = {});
cplx kernel_K(const TestFunction& f, const SourceProfile& src, double beta, double t, double s,
              const quad::Options& opt = {});
// Zero-temperature kernel <f, e^{-tau omega} omega m>.
cplx kernel_K_ground(const TestFunction& f, const SourceProfile& src, double tau,
                     const quad::Options& opt = {});
// <f, coth(beta omega / 2) omega m>, the equal-time pairing evaluated as a form.
cplx equal_time_pairing(const TestFunction& f, const SourceProfile& src, double beta,
                        const quad::Options& opt = {});

} // namespace sbl
