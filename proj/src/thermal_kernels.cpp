#include "sbl/thermal_kernels.hpp"

#include "sbl/errors.hpp"
#include "sbl/hash.hpp"
#include "sbl/simd/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sbl {

namespace {

constexpr double kSeriesCut = 0.1;
constexpr std::size_t kNodeChunk = 256;

double one_minus_exp_neg(double x) {
    if (x < kSeriesCut) {
        double acc = 1.0;
        for (int k = 12; k >= 2; --k) acc = 1.0 - x / k * acc;
        return x * acc;
    }
    return -std::expm1(-x);
}

// sum_{n>=2} (sign x)^n / n!, i.e. e^{-x} - 1 + x (sign -1) or e^x - 1 - x (sign +1).
double exp_remainder2(double x, double sign) {
    if (x < kSeriesCut) {
        double acc = 1.0;
        for (int k = 14; k >= 3; --k) acc = 1.0 + sign * x / k * acc;
        return 0.5 * x * x * acc;
    }
    return sign < 0 ? std::expm1(-x) + x : std::expm1(x) - x;
}

struct TimeWeights {
    double t;  // thermal factor
    double a1; // int_0^u
    double a2; // int_0^u int_0^v
};

TimeWeights time_weights(double u, double w, double beta) {
    const double x = u * w;
    const double xb = beta * w;
    const double den = one_minus_exp_neg(xb);
    const double eb = std::exp(-xb);
    const double e_rest = std::exp(-(beta - u) * w);
    TimeWeights r;
    r.t = (std::exp(-x) + e_rest) / den;
    const double late = x < 1.0 ? eb * std::expm1(x) : e_rest - eb;
    r.a1 = (one_minus_exp_neg(x) + late) / (w * den);
    const double late2 = x < kSeriesCut ? eb * exp_remainder2(x, 1.0) : e_rest - eb * (1.0 + x);
    r.a2 = (exp_remainder2(x, -1.0) + late2) / (w * w * den);
    return r;
}

std::vector<double> linspace_nodes(double span, std::size_t n, bool odd_only) {
    std::vector<double> out;
    if (odd_only) {
        out.reserve(n);
        for (std::size_t j = 0; j < n; ++j) out.push_back(span * (2.0 * j + 1.0) / (2.0 * n));
    } else {
        out.reserve(n + 1);
        for (std::size_t j = 0; j <= n; ++j) out.push_back(span * double(j) / double(n));
    }
    return out;
}

// Builds the k-integrand for a set of time nodes; comps reals per node.
using NodeBatchFactory = std::function<quad::BatchFn(const std::vector<double>& taus)>;

std::vector<double> evaluate_nodes(const NodeBatchFactory& make, std::size_t comps,
                                   const std::vector<double>& taus,
                                   const std::vector<quad::Interval>& partition) {
    std::vector<double> out(taus.size() * comps);
    for (std::size_t start = 0; start < taus.size(); start += kNodeChunk) {
        const std::size_t stop = std::min(taus.size(), start + kNodeChunk);
        std::vector<double> chunk(taus.begin() + start, taus.begin() + stop);
        const quad::Result r = quad::apply_partition(make(chunk), comps * chunk.size(), partition);
        std::copy(r.value.begin(), r.value.end(), out.begin() + start * comps);
    }
    return out;
}

std::vector<quad::Interval> adapt_partition(const NodeBatchFactory& make, std::size_t comps,
                                            double beta, const std::vector<double>& breakpoints,
                                            const quad::Options& base, const char* what) {
    const std::vector<double> reps{0.0, beta / 16.0, beta / 4.0, beta / 2.0};
    quad::Options opt = base;
    opt.abs_tol = 0.1 * base.abs_tol;
    opt.rel_tol = std::max(base.rel_tol, 1e-13);
    const quad::Result r = quad::integrate(make(reps), comps * reps.size(), breakpoints, opt);
    if (!r.converged)
        throw ConvergenceError(std::string(what) + ": radial quadrature did not converge",
                               r.max_error());
    return r.partition;
}

template <class T>
double magnitude(const T& v) {
    return std::abs(v);
}

// Doubles the grid (odd nodes only) until the Hermite prediction of the new nodes matches the
// quadrature within tol relative to the table scale.
template <class T, class Eval>
int refine(HermiteGrid<T>& grid, const Eval& eval_odd, int max_doublings, double tol,
           const char* what) {
    double scale = 0.0;
    for (const T& v : grid.value) scale = std::max(scale, magnitude(v));
    if (scale == 0.0) return 0;
    for (int level = 1; level <= max_doublings; ++level) {
        const std::size_t n = grid.intervals();
        std::vector<T> val, der;
        eval_odd(n, val, der);
        double worst = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double u = grid.span * (2.0 * j + 1.0) / (2.0 * n);
            worst = std::max(worst, magnitude(grid(u) - val[j]));
        }
        HermiteGrid<T> fine;
        fine.span = grid.span;
        fine.value.resize(2 * n + 1);
        fine.deriv.resize(2 * n + 1);
        for (std::size_t j = 0; j <= n; ++j) {
            fine.value[2 * j] = grid.value[j];
            fine.deriv[2 * j] = grid.deriv[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            fine.value[2 * j + 1] = val[j];
            fine.deriv[2 * j + 1] = der[j];
        }
        grid = std::move(fine);
        if (worst <= tol * scale) return level;
    }
    std::ostringstream os;
    os << what << ": time grid did not converge after " << max_doublings << " doublings";
    throw ConvergenceError(os.str(), tol);
}

constexpr char kMagic[4] = {'S', 'B', 'L', 'K'};
constexpr std::uint32_t kCacheVersion = 1;

} // namespace

namespace thermal {

double factor(double tau, double w, double beta) { return time_weights(tau, w, beta).t; }
double first_antiderivative(double tau, double w, double beta) {
    return time_weights(tau, w, beta).a1;
}
double second_antiderivative(double tau, double w, double beta) {
    return time_weights(tau, w, beta).a2;
}

} // namespace thermal

template <class T>
T HermiteGrid<T>::operator()(double u) const {
    const std::size_t n = intervals();
    if (u <= 0.0) return value.front();
    if (u >= span) return value.back();
    const double h = span / static_cast<double>(n);
    const double pos = u / h;
    const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 1);
    const double t = pos - static_cast<double>(i);
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * value[i] + (h10 * h) * deriv[i] + h01 * value[i + 1] + (h11 * h) * deriv[i + 1];
}

template struct HermiteGrid<double>;
template struct HermiteGrid<cplx>;

std::uint64_t ThermalParams::key() const {
    Fnv1a h;
    h.add(src.content_hash())
        .add(beta)
        .add(std::int64_t{grid_intervals})
        .add(std::int64_t{max_doublings})
        .add(refine_tol)
        .add(quad.abs_tol)
        .add(quad.rel_tol);
    return h.value();
}

std::shared_ptr<const ThermalKernelTable> ThermalKernelTable::build(const ThermalParams& params) {
    if (!(params.beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (params.grid_intervals < 2 || params.grid_intervals % 2)
        throw std::invalid_argument("tau grid must have an even number of intervals >= 2");
    auto table = std::make_shared<ThermalKernelTable>();
    table->beta_ = params.beta;
    table->src_ = params.src;
    table->key_ = params.key();
    table->quad_ = params.quad;
    table->zero_ = params.src.is_zero();
    table->psi_.span = params.beta;
    const std::size_t n = static_cast<std::size_t>(params.grid_intervals);

    if (table->zero_) {
        table->kappa_.assign(n + 1, 0.0);
        table->psi_.value.assign(n + 1, 0.0);
        table->psi_.deriv.assign(n + 1, 0.0);
        return table;
    }

    const SourceProfile src = params.src;
    const Space sp = src.space();
    const double beta = params.beta;
    require_convergent("thermal self-kernel", sp.d - 1 + 2.0 * src.rho().exponent_at_zero() - 2.0 * sp.s,
                       sp.d - 1 + 2.0 * src.rho().exponent_at_infinity() - sp.s);

    const double area = sphere_area(sp.d);
    NodeBatchFactory make = [=](const std::vector<double>& taus) -> quad::BatchFn {
        return [=](const double* k, std::size_t m, double* out) {
            const std::size_t nt = taus.size();
            for (std::size_t i = 0; i < m; ++i) {
                double* row = out + i * 3 * nt;
                if (k[i] == 0.0) {
                    std::fill(row, row + 3 * nt, 0.0);
                    continue;
                }
                const double w = dispersion(k[i], sp.s);
                const double rho = src.rho()(k[i]);
                const double base = area * std::pow(k[i], sp.d - 1) * rho * rho / w;
                for (std::size_t j = 0; j < nt; ++j) {
                    if (base == 0.0) {
                        row[3 * j] = row[3 * j + 1] = row[3 * j + 2] = 0.0;
                        continue;
                    }
                    const TimeWeights tw = time_weights(taus[j], w, beta);
                    row[3 * j] = base * tw.t;
                    row[3 * j + 1] = base * tw.a1;
                    row[3 * j + 2] = base * tw.a2;
                }
            }
        };
    };

    const TestFunction unit = TestFunction::zero(sp);
    const auto partition =
        adapt_partition(make, 3, beta, radial_breakpoints(unit, nullptr, &src), params.quad,
                        "thermal self-kernel");

    auto fill = [&](const std::vector<double>& taus, std::vector<double>& kap,
                    std::vector<double>& psi, std::vector<double>& phi) {
        const std::vector<double> raw = evaluate_nodes(make, 3, taus, partition);
        kap.resize(taus.size());
        phi.resize(taus.size());
        psi.resize(taus.size());
        for (std::size_t j = 0; j < taus.size(); ++j) {
            kap[j] = raw[3 * j];
            phi[j] = raw[3 * j + 1];
            psi[j] = raw[3 * j + 2];
        }
    };

    std::vector<double> kap;
    fill(linspace_nodes(beta, n, false), kap, table->psi_.value, table->psi_.deriv);
    // Psi(0) = Phi(0) = 0 exactly.
    table->psi_.value[0] = 0.0;
    table->psi_.deriv[0] = 0.0;

    std::vector<std::vector<double>> kappa_levels{kap};
    auto eval_odd = [&](std::size_t m, std::vector<double>& val, std::vector<double>& der) {
        std::vector<double> k_odd;
        fill(linspace_nodes(beta, m, true), k_odd, val, der);
        kappa_levels.push_back(std::move(k_odd));
    };
    table->doublings_ =
        refine(table->psi_, eval_odd, params.max_doublings, params.refine_tol, "thermal self-kernel");

    // Interleave kappa the same way the Hermite grid was interleaved.
    std::vector<double> merged = kappa_levels.front();
    for (std::size_t lvl = 1; lvl < kappa_levels.size(); ++lvl) {
        const std::vector<double>& odd = kappa_levels[lvl];
        std::vector<double> next(2 * merged.size() - 1);
        for (std::size_t j = 0; j < merged.size(); ++j) next[2 * j] = merged[j];
        for (std::size_t j = 0; j < odd.size(); ++j) next[2 * j + 1] = odd[j];
        merged = std::move(next);
    }
    table->kappa_ = std::move(merged);
    return table;
}

std::shared_ptr<const ThermalKernelTable> ThermalKernelTable::constant_kappa(double c0, double beta,
                                                                             int intervals) {
    auto table = std::make_shared<ThermalKernelTable>();
    table->beta_ = beta;
    table->src_ = SourceProfile::none(Space{});
    table->zero_ = c0 == 0.0;
    table->key_ = Fnv1a().add(std::string_view("constant")).add(c0).add(beta).value();
    table->psi_.span = beta;
    const std::size_t n = static_cast<std::size_t>(intervals);
    for (std::size_t j = 0; j <= n; ++j) {
        const double u = beta * double(j) / double(n);
        table->kappa_.push_back(c0);
        table->psi_.value.push_back(0.5 * c0 * u * u);
        table->psi_.deriv.push_back(c0 * u);
    }
    return table;
}

double ThermalKernelTable::psi(double u) const { return psi_(std::abs(u)); }

double ThermalKernelTable::double_block(double a, double b, double c, double d) const {
    const double span = std::max({a, b, c, d}) - std::min({a, b, c, d});
    if (span > beta_ * (1.0 + 1e-12))
        throw std::invalid_argument("double_block: time blocks span more than one period");
    if (zero_) return 0.0;
    return psi(std::abs(d - a)) - psi(std::abs(c - a)) - psi(std::abs(d - b)) +
           psi(std::abs(c - b));
}

bool ThermalKernelTable::save(const std::string& path) const {
    static_assert(std::endian::native == std::endian::little, "cache format is little-endian");
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) return false;
    const std::uint64_t n = psi_.value.size();
    os.write(kMagic, 4);
    os.write(reinterpret_cast<const char*>(&kCacheVersion), sizeof kCacheVersion);
    os.write(reinterpret_cast<const char*>(&key_), sizeof key_);
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    os.write(reinterpret_cast<const char*>(&beta_), sizeof beta_);
    std::int32_t dbl = doublings_;
    os.write(reinterpret_cast<const char*>(&dbl), sizeof dbl);
    for (const auto* v : {&kappa_, &psi_.deriv, &psi_.value})
        os.write(reinterpret_cast<const char*>(v->data()), std::streamsize(n * sizeof(double)));
    return bool(os);
}

std::shared_ptr<const ThermalKernelTable> ThermalKernelTable::load(const std::string& path,
                                                                   const ThermalParams& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return nullptr;
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t key = 0, n = 0;
    double beta = 0.0;
    std::int32_t dbl = 0;
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(&version), sizeof version);
    is.read(reinterpret_cast<char*>(&key), sizeof key);
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    is.read(reinterpret_cast<char*>(&beta), sizeof beta);
    is.read(reinterpret_cast<char*>(&dbl), sizeof dbl);
    if (!is || std::memcmp(magic, kMagic, 4) != 0 || version != kCacheVersion ||
        key != params.key() || beta != params.beta || n < 3 || n > (1u << 26))
        return nullptr;
    auto table = std::make_shared<ThermalKernelTable>();
    table->beta_ = beta;
    table->src_ = params.src;
    table->zero_ = params.src.is_zero();
    table->key_ = key;
    table->quad_ = params.quad;
    table->doublings_ = dbl;
    table->psi_.span = beta;
    for (auto* v : {&table->kappa_, &table->psi_.deriv, &table->psi_.value}) {
        v->resize(n);
        is.read(reinterpret_cast<char*>(v->data()), std::streamsize(n * sizeof(double)));
    }
    if (!is) return nullptr;
    return table;
}

std::shared_ptr<const ThermalKernelTable>
ThermalKernelTable::build_cached(const ThermalParams& params, const std::string& cache_dir) {
    if (cache_dir.empty()) return build(params);
    std::ostringstream name;
    name << "kernel_" << std::hex << params.key() << ".bin";
    const std::filesystem::path path = std::filesystem::path(cache_dir) / name.str();
    if (auto t = load(path.string(), params)) return t;
    auto t = build(params);
    std::error_code ec;
    std::filesystem::create_directories(cache_dir, ec);
    t->save(path.string());
    return t;
}

std::shared_ptr<const TestKernel> TestKernel::build(const ThermalKernelTable& table,
                                                    const TestFunction& f, int grid_intervals,
                                                    int max_doublings, double refine_tol) {
    auto kern = std::make_shared<TestKernel>();
    kern->beta_ = table.beta();
    kern->p_.span = table.beta();
    const std::size_t n = static_cast<std::size_t>(grid_intervals);
    kern->zero_ = table.zero_source() || f.is_zero();
    if (kern->zero_) {
        kern->p_.value.assign(n + 1, cplx{});
        kern->p_.deriv.assign(n + 1, cplx{});
        return kern;
    }
    const SourceProfile src = table.source();
    const Space sp = f.space();
    const double beta = table.beta();
    require_convergent("test-function kernel",
                       sp.d - 1 + f.a0() + src.rho().exponent_at_zero() - 1.5 * sp.s,
                       sp.d - 1 + f.a_inf() + src.rho().exponent_at_infinity() - 0.5 * sp.s);

    const TestFunction fc = f;
    NodeBatchFactory make = [=](const std::vector<double>& taus) -> quad::BatchFn {
        return [=](const double* k, std::size_t m, double* out) {
            const std::size_t nt = taus.size();
            std::vector<double> w(m), t(m);
            std::vector<cplx> dens(m);
            for (std::size_t i = 0; i < m; ++i) {
                w[i] = dispersion(k[i], sp.s);
                dens[i] = k[i] == 0.0 ? cplx{} : source_density(fc, src, k[i]) / std::sqrt(w[i]);
                if (k[i] == 0.0) w[i] = 1.0; // density already zero there
            }
            for (std::size_t j = 0; j < nt; ++j) {
                simd::kernels().thermal_factor(w.data(), m, taus[j], beta, t.data());
                for (std::size_t i = 0; i < m; ++i) {
                    double* cell = out + i * 4 * nt + 4 * j;
                    const cplx kv = dens[i] * t[i];
                    const cplx pv = dens[i] * time_weights(taus[j], w[i], beta).a1;
                    cell[0] = kv.real();
                    cell[1] = kv.imag();
                    cell[2] = pv.real();
                    cell[3] = pv.imag();
                }
            }
        };
    };

    const auto partition = adapt_partition(make, 4, beta, radial_breakpoints(f, nullptr, &src),
                                           table.quad_options(), "test-function kernel");
    auto fill = [&](const std::vector<double>& taus, std::vector<cplx>& p, std::vector<cplx>& k) {
        const std::vector<double> raw = evaluate_nodes(make, 4, taus, partition);
        p.resize(taus.size());
        k.resize(taus.size());
        for (std::size_t j = 0; j < taus.size(); ++j) {
            k[j] = {raw[4 * j], raw[4 * j + 1]};
            p[j] = {raw[4 * j + 2], raw[4 * j + 3]};
        }
    };
    fill(linspace_nodes(beta, n, false), kern->p_.value, kern->p_.deriv);
    kern->p_.value[0] = cplx{};
    auto eval_odd = [&](std::size_t m, std::vector<cplx>& val, std::vector<cplx>& der) {
        fill(linspace_nodes(beta, m, true), val, der);
    };
    refine(kern->p_, eval_odd, max_doublings, refine_tol, "test-function kernel");
    return kern;
}

cplx TestKernel::antiderivative(double tau) const { return p_(tau); }

cplx TestKernel::odd_antiderivative(double v) const {
    return v < 0.0 ? -p_(-v) : p_(v);
}

cplx TestKernel::interval_integral(double t, double a, double b) const {
    if (zero_ || a == b) return {};
    return odd_antiderivative(b - t) - odd_antiderivative(a - t);
}

namespace {

quad::Options tight(quad::Options opt) {
    if (opt.rel_tol == 0.0) opt.rel_tol = 1e-12;
    return opt;
}

cplx source_weighted(const TestFunction& f, const SourceProfile& src,
                     const std::function<double(double)>& weight_of_omega,
                     const quad::Options& opt) {
    if (src.is_zero() || f.is_zero()) return {};
    const double s = f.space().s;
    return quad::integrate_complex(
        [&](double k) {
            if (k == 0.0) return cplx{};
            const double w = dispersion(k, s);
            return source_density(f, src, k) / std::sqrt(w) * weight_of_omega(w);
        },
        radial_breakpoints(f, nullptr, &src), tight(opt));
}

void check_kernel_domain(const TestFunction& f, const SourceProfile& src) {
    const Space& sp = f.space();
    require_convergent("test-function kernel",
                       sp.d - 1 + f.a0() + src.rho().exponent_at_zero() - 1.5 * sp.s,
                       sp.d - 1 + f.a_inf() + src.rho().exponent_at_infinity() - 0.5 * sp.s);
}

} // namespace

double kappa(const SourceProfile& src, double beta, double tau, const quad::Options& opt) {
    if (!(tau >= 0.0 && tau <= beta)) throw std::invalid_argument("kappa: tau outside [0, beta]");
    if (src.is_zero()) return 0.0;
    const Space sp = src.space();
    require_convergent("thermal self-kernel",
                       sp.d - 1 + 2.0 * src.rho().exponent_at_zero() - 2.0 * sp.s,
                       sp.d - 1 + 2.0 * src.rho().exponent_at_infinity() - sp.s);
    const double area = sphere_area(sp.d);
    const TestFunction none = TestFunction::zero(sp);
    return quad::integrate_real(
        [&](double k) {
            if (k == 0.0) return 0.0;
            const double w = dispersion(k, sp.s);
            const double r = src.rho()(k);
            return area * std::pow(k, sp.d - 1) * r * r / w * thermal::factor(tau, w, beta);
        },
        radial_breakpoints(none, nullptr, &src), tight(opt));
}

cplx kernel_K(const TestFunction& f, const SourceProfile& src, double beta, double t, double s,
              const quad::Options& opt) {
    const double tau = std::abs(t - s);
    if (tau > beta) throw std::invalid_argument("kernel_K: |t - s| exceeds beta");
    if (src.is_zero() || f.is_zero()) return {};
    check_kernel_domain(f, src);
    return source_weighted(
        f, src, [&](double w) { return thermal::factor(tau, w, beta); }, opt);
}

cplx kernel_K_ground(const TestFunction& f, const SourceProfile& src, double tau,
                     const quad::Options& opt) {
    if (src.is_zero() || f.is_zero()) return {};
    check_kernel_domain(f, src);
    return source_weighted(f, src, [&](double w) { return std::exp(-tau * w); }, opt);
}

cplx equal_time_pairing(const TestFunction& f, const SourceProfile& src, double beta,
                        const quad::Options& opt) {
    if (src.is_zero() || f.is_zero()) return {};
    check_kernel_domain(f, src);
    return source_weighted(
        f, src, [&](double w) { return 1.0 / std::tanh(0.5 * beta * w); }, opt);
}

} // namespace sbl
