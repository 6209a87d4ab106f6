#include "sbl/tilted_ensemble.hpp"

#include "sbl/parallel.hpp"
#include "sbl/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace sbl {

namespace {

// Reductions run over fixed index blocks combined in order, independent of the worker count.
constexpr std::size_t kFoldBlock = 65536;

std::size_t fold_blocks(std::size_t n) { return (n + kFoldBlock - 1) / kFoldBlock; }

// Boundaries b_0 = -beta/2 < jumps < b_n = beta/2 and the sign X_i on [b_i, b_{i+1}].
void intervals_of(const SpinLoop& loop, double beta, std::vector<double>& b, std::vector<int>& x) {
    b.clear();
    x.clear();
    b.push_back(-0.5 * beta);
    int sign = loop.initial_sign;
    for (double t : loop.jumps) {
        b.push_back(t);
        x.push_back(sign);
        sign = -sign;
    }
    b.push_back(0.5 * beta);
    x.push_back(sign);
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

double log_weight(const SpinLoop& loop, const ThermalKernelTable& table) {
    if (table.zero_source()) return 0.0;
    const double beta = table.beta();
    const std::size_t n = loop.jumps.size();
    // Points b_0..b_{n+1} with jumps g_0 = X_0, g_p = X_p - X_{p-1}, g_{n+1} = -X_n.
    std::vector<double> b(n + 2);
    std::vector<double> g(n + 2);
    b[0] = -0.5 * beta;
    b[n + 1] = 0.5 * beta;
    int sign = loop.initial_sign;
    g[0] = sign;
    for (std::size_t j = 0; j < n; ++j) {
        b[j + 1] = loop.jumps[j];
        g[j + 1] = -2.0 * sign;
        sign = -sign;
    }
    g[n + 1] = -sign;
    double acc = 0.0;
    for (std::size_t p = 0; p < b.size(); ++p)
        for (std::size_t q = p + 1; q < b.size(); ++q)
            acc += g[p] * g[q] * table.psi(b[q] - b[p]);
    return -0.5 * acc;
}

double log_weight_pairs(const SpinLoop& loop, const ThermalKernelTable& table) {
    std::vector<double> b;
    std::vector<int> x;
    intervals_of(loop, table.beta(), b, x);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j)
            acc += x[i] * x[j] * table.double_block(b[i], b[i + 1], b[j], b[j + 1]);
    return 0.25 * acc;
}

cplx z_value(const SpinLoop& loop, const TestKernel& kernel, double t_offset) {
    if (kernel.zero()) return {};
    std::vector<double> b;
    std::vector<int> x;
    intervals_of(loop, kernel.beta(), b, x);
    cplx acc{};
    cplx prev = kernel.odd_antiderivative(b[0] - t_offset);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const cplx next = kernel.odd_antiderivative(b[i + 1] - t_offset);
        acc += double(x[i]) * (next - prev);
        prev = next;
    }
    return 0.5 * acc;
}

SpinLoop rotate_loop(const SpinLoop& loop, double a, double beta) {
    SpinLoop r;
    const double half = 0.5 * beta;
    r.initial_sign = loop.value_periodic(-half - a, beta);
    for (double t : loop.jumps) {
        double s = std::fmod(t + a + half, beta);
        if (s < 0.0) s += beta;
        r.jumps.push_back(s - half);
    }
    std::sort(r.jumps.begin(), r.jumps.end());
    return r;
}

std::shared_ptr<const TiltedEnsemble> TiltedEnsemble::build(
    const SpinParams& params, std::shared_ptr<const ThermalKernelTable> table,
    const EnsembleOptions& opt) {
    params.validate();
    if (opt.samples < 1) throw std::invalid_argument("ensemble needs at least one sample");
    if (opt.chunk_size < 1) throw std::invalid_argument("chunk size must be >= 1");
    if (!table) throw std::invalid_argument("ensemble needs a kernel table");
    if (std::abs(table->beta() - params.beta) > 1e-12 * params.beta)
        throw std::invalid_argument("kernel table and spin measure disagree on beta");

    auto ens = std::make_shared<TiltedEnsemble>();
    ens->params_ = params;
    ens->table_ = table;
    ens->opt_ = opt;
    const std::size_t n = opt.samples;

    if (opt.mode == EnsembleMode::frozen) {
        ens->signs_.assign(n, 1);
        ens->offsets_.assign(n + 1, 0);
        ens->logw_.assign(n, log_weight(SpinLoop{1, {}}, *table));
    } else {
        const std::size_t chunks = (n + opt.chunk_size - 1) / opt.chunk_size;
        struct Chunk {
            std::vector<std::int8_t> signs;
            std::vector<std::uint32_t> counts;
            std::vector<double> jumps;
            std::vector<double> logw;
        };
        std::vector<Chunk> parts(chunks);
        parallel_for(chunks, opt.workers, [&](std::size_t c) {
            Rng rng(seed_derivation(opt.seed, c));
            const std::size_t stop = std::min(n, (c + 1) * opt.chunk_size);
            Chunk& part = parts[c];
            for (std::size_t i = c * opt.chunk_size; i < stop; ++i) {
                const SpinLoop loop = sample_loop(params, rng);
                part.signs.push_back(static_cast<std::int8_t>(loop.initial_sign));
                part.counts.push_back(static_cast<std::uint32_t>(loop.jumps.size()));
                part.jumps.insert(part.jumps.end(), loop.jumps.begin(), loop.jumps.end());
                part.logw.push_back(log_weight(loop, *table));
            }
        });
        ens->offsets_.reserve(n + 1);
        ens->offsets_.push_back(0);
        for (const Chunk& part : parts) {
            ens->signs_.insert(ens->signs_.end(), part.signs.begin(), part.signs.end());
            ens->jumps_.insert(ens->jumps_.end(), part.jumps.begin(), part.jumps.end());
            ens->logw_.insert(ens->logw_.end(), part.logw.begin(), part.logw.end());
            for (std::uint32_t c : part.counts) ens->offsets_.push_back(ens->offsets_.back() + c);
        }
    }

    ens->max_logw_ = *std::max_element(ens->logw_.begin(), ens->logw_.end());
    ens->w_.resize(n);
    const auto& k = simd::kernels();
    for (std::size_t blk = 0; blk < fold_blocks(n); ++blk) {
        const std::size_t lo = blk * kFoldBlock, len = std::min(n, lo + kFoldBlock) - lo;
        const simd::ExpSums s =
            k.shifted_exp_sum(ens->logw_.data() + lo, len, ens->max_logw_, ens->w_.data() + lo);
        ens->sum_w_ += s.sum;
        ens->sum_w2_ += s.sum_sq;
    }
    if (ens->degenerate())
        std::fprintf(stderr, "warning: weight degeneracy, ESS = %.1f of N = %zu\n", ens->ess(), n);
    return ens;
}

SpinLoop TiltedEnsemble::loop(std::size_t i) const {
    SpinLoop l;
    l.initial_sign = signs_[i];
    l.jumps.assign(jumps_.begin() + offsets_[i], jumps_.begin() + offsets_[i + 1]);
    return l;
}

double TiltedEnsemble::log_partition() const {
    const double x = params_.eps * params_.beta;
    const double log_2cosh = x + std::log1p(std::exp(-2.0 * x));
    return max_logw_ + std::log(sum_w_ / static_cast<double>(size())) + log_2cosh;
}

std::shared_ptr<const ZValues> TiltedEnsemble::z_values(const TestKernel& kernel, double t_offset,
                                                        std::uint64_t cache_key) const {
    if (cache_key != 0) {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = z_cache_.find({cache_key, t_offset});
        if (it != z_cache_.end()) return it->second;
    }
    auto z = std::make_shared<ZValues>();
    const std::size_t n = size();
    z->re.assign(n, 0.0);
    z->im.assign(n, 0.0);
    if (!kernel.zero()) {
        parallel_for(fold_blocks(n), opt_.workers, [&](std::size_t blk) {
            const std::size_t stop = std::min(n, (blk + 1) * kFoldBlock);
            for (std::size_t i = blk * kFoldBlock; i < stop; ++i) {
                const cplx v = z_value(loop(i), kernel, t_offset);
                z->re[i] = v.real();
                z->im[i] = v.imag();
            }
        });
        for (std::size_t i = 0; i < n; ++i) {
            if (z->re[i] != 0.0 || z->im[i] != 0.0) z->all_zero = false;
            if (z->im[i] != 0.0) z->real = false;
        }
    }
    if (cache_key != 0) {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        z_cache_.emplace(std::make_pair(cache_key, t_offset), z);
    }
    return z;
}

Estimate phase_average(const TiltedEnsemble& ens, const ZValues& z1, double c1, const ZValues* z2,
                       double c2) {
    const bool trivial = (z1.all_zero || c1 == 0.0) && (!z2 || z2->all_zero || c2 == 0.0);
    Estimate e;
    e.ess = ens.ess();
    if (trivial) {
        e.value = 1.0;
        return e;
    }
    const std::size_t n = ens.size();
    const double* w = ens.weights().data();
    const double* y1 = z1.real ? nullptr : z1.im.data();
    const double* x2 = z2 ? z2->re.data() : nullptr;
    const double* y2 = z2 && !z2->real ? z2->im.data() : nullptr;
    std::vector<simd::PhaseMoments> parts(fold_blocks(n));
    const auto& k = simd::kernels();
    parallel_for(parts.size(), ens.options().workers, [&](std::size_t blk) {
        const std::size_t lo = blk * kFoldBlock, len = std::min(n, lo + kFoldBlock) - lo;
        parts[blk] = k.phase_moments(w + lo, z1.re.data() + lo, y1 ? y1 + lo : nullptr,
                                     x2 ? x2 + lo : nullptr, y2 ? y2 + lo : nullptr, len, c1, c2);
    });
    simd::PhaseMoments m;
    for (const auto& p : parts) {
        m.sw_re += p.sw_re;
        m.sw_im += p.sw_im;
        m.sw2_re += p.sw2_re;
        m.sw2_im += p.sw2_im;
        m.sw2_abs2 += p.sw2_abs2;
    }
    const double W = ens.sum_w();
    e.value = cplx{m.sw_re, m.sw_im} / W;
    // sum w^2 |h - S|^2 = sum w^2 |h|^2 - 2 Re(conj(S) sum w^2 h) + |S|^2 sum w^2
    const double cross = e.value.real() * m.sw2_re + e.value.imag() * m.sw2_im;
    const double num = m.sw2_abs2 - 2.0 * cross + std::norm(e.value) * ens.sum_w2();
    e.se = std::sqrt(std::max(0.0, num)) / W;
    return e;
}

Estimate spin_factor(const TiltedEnsemble& ens, const ZValues& z, double s) {
    Estimate e = phase_average(ens, z, s);
    // A complex Z makes exp(-i s Z) a damped or amplified phase; the unit bound needs real Z.
    if (z.real && std::abs(e.value) > 1.0 + 3.0 * e.se + 1e-12)
        throw std::logic_error("spin factor modulus exceeds 1 beyond statistical allowance");
    return e;
}

Estimate z_mean(const TiltedEnsemble& ens, const ZValues& z) {
    Estimate e;
    e.ess = ens.ess();
    if (z.all_zero) return e;
    const auto& w = ens.weights();
    double sr = 0.0, si = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        sr += w[i] * z.re[i];
        si += w[i] * z.im[i];
    }
    const double W = ens.sum_w();
    e.value = {sr / W, si / W};
    double acc = 0.0;
    for (std::size_t i = 0; i < ens.size(); ++i)
        acc += w[i] * w[i] * std::norm(cplx{z.re[i], z.im[i]} - e.value);
    e.se = std::sqrt(acc) / W;
    return e;
}

double ell_shift(const TiltedEnsemble& ens, const ZValues& z) {
    return -z_mean(ens, z).value.real();
}

ZMoments z_moments(const TiltedEnsemble& ens, const ZValues& z) {
    ZMoments r;
    r.ess = ens.ess();
    if (z.all_zero) return r;
    const auto& w = ens.weights();
    const double W = ens.sum_w();
    const std::size_t n = ens.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * z.re[i];
    r.mean = s / W;
    double v = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = z.re[i] - r.mean;
        v += w[i] * d * d;
        m2 += w[i] * w[i] * d * d;
    }
    r.var = v / W;
    r.se_mean = std::sqrt(m2) / W;
    double m4 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = z.re[i] - r.mean;
        const double e = d * d - r.var;
        m4 += w[i] * w[i] * e * e;
    }
    r.se_var = std::sqrt(m4) / W;
    return r;
}

bool VarianceRoutes::agree(double rel, double n_se) const {
    const double diff = std::abs(var_direct - var_kernel);
    const double scale = std::max(std::abs(var_direct), std::abs(var_kernel));
    if (diff <= rel * scale) return true;
    return diff <= n_se * std::hypot(se_direct, se_kernel);
}

namespace {

// Weighted second moments of the cell averages of X for one cell grid and one index batch.
struct CellMoments {
    std::vector<double> m;  // upper triangle of sum w xi xi^T (jumping loops only)
    std::vector<double> mu; // sum w xi
    double w{0.0};
    double w_flat{0.0}; // weight of loops without jumps (xi xi^T = all ones)
};

void accumulate_cells(const TiltedEnsemble& ens, std::size_t lo, std::size_t hi, int cells,
                      CellMoments& out) {
    const std::size_t C = static_cast<std::size_t>(cells);
    out.m.assign(C * C, 0.0);
    out.mu.assign(C, 0.0);
    const double beta = ens.params().beta;
    const double dt = beta / cells;
    const auto& w = ens.weights();
    const auto& k = simd::kernels();
    std::vector<double> xi(C);
    std::vector<double> b;
    std::vector<int> x;
    for (std::size_t i = lo; i < hi; ++i) {
        const double wi = w[i];
        out.w += wi;
        if (ens.jump_count(i) == 0) {
            out.w_flat += wi;
            const double v = wi * ens.sign(i);
            for (std::size_t c = 0; c < C; ++c) out.mu[c] += v;
            continue;
        }
        intervals_of(ens.loop(i), beta, b, x);
        std::fill(xi.begin(), xi.end(), 0.0);
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double a = b[j] + 0.5 * beta, e = b[j + 1] + 0.5 * beta;
            std::size_t c0 = std::min(C - 1, static_cast<std::size_t>(a / dt));
            std::size_t c1 = std::min(C - 1, static_cast<std::size_t>(e / dt));
            if (c0 == c1) {
                xi[c0] += x[j] * (e - a);
                continue;
            }
            xi[c0] += x[j] * ((c0 + 1) * dt - a);
            for (std::size_t c = c0 + 1; c < c1; ++c) xi[c] += x[j] * dt;
            xi[c1] += x[j] * (e - c1 * dt);
        }
        for (std::size_t c = 0; c < C; ++c) {
            xi[c] /= dt;
            out.mu[c] += wi * xi[c];
        }
        k.rank1_update(out.m.data(), C, xi.data(), wi);
    }
}

double kernel_variance(const CellMoments& cm, const std::vector<double>& kbar) {
    const std::size_t C = kbar.size();
    if (cm.w <= 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t a = 0; a < C; ++a) {
        for (std::size_t b = a; b < C; ++b) {
            const double second = (cm.m[a * C + b] + cm.w_flat) / cm.w;
            const double cov = second - (cm.mu[a] / cm.w) * (cm.mu[b] / cm.w);
            acc += (a == b ? 1.0 : 2.0) * kbar[a] * cov * kbar[b];
        }
    }
    return 0.25 * acc;
}

void merge(CellMoments& into, const CellMoments& part) {
    if (into.m.empty()) {
        into = part;
        return;
    }
    for (std::size_t i = 0; i < into.m.size(); ++i) into.m[i] += part.m[i];
    for (std::size_t i = 0; i < into.mu.size(); ++i) into.mu[i] += part.mu[i];
    into.w += part.w;
    into.w_flat += part.w_flat;
}

std::vector<double> cell_kernel_integrals(const TestKernel& kernel, double beta, int cells) {
    std::vector<double> kbar(cells);
    const double dt = beta / cells;
    for (int c = 0; c < cells; ++c) {
        const double a = -0.5 * beta + c * dt;
        kbar[c] = kernel.interval_integral(0.0, a, a + dt).real();
    }
    return kbar;
}

} // namespace

VarianceRoutes variance_two_routes(const TiltedEnsemble& ens, const TestKernel& kernel,
                                   const ZValues& z, int cells, int batches) {
    if (cells < 2 || cells % 2) throw std::invalid_argument("variance grid needs an even cell count");
    VarianceRoutes r;
    r.cells = cells;
    r.ess = ens.ess();
    const ZMoments mom = z_moments(ens, z);
    r.var_direct = mom.var;
    r.se_direct = mom.se_var;
    if (kernel.zero()) return r;

    const std::size_t n = ens.size();
    const std::size_t B = static_cast<std::size_t>(std::max(2, std::min<int>(batches, int(n))));
    const double beta = ens.params().beta;

    for (int pass = 0; pass < 2; ++pass) {
        const int C = pass == 0 ? cells : 2 * cells;
        const std::vector<double> kbar = cell_kernel_integrals(kernel, beta, C);
        std::vector<CellMoments> parts(B);
        parallel_for(B, ens.options().workers, [&](std::size_t bi) {
            accumulate_cells(ens, bi * n / B, (bi + 1) * n / B, C, parts[bi]);
        });
        CellMoments total;
        std::vector<double> per_batch;
        for (const CellMoments& p : parts) {
            merge(total, p);
            per_batch.push_back(kernel_variance(p, kbar));
        }
        const double v = kernel_variance(total, kbar);
        if (pass == 0) {
            r.var_kernel = v;
            double mean = 0.0;
            for (double x : per_batch) mean += x;
            mean /= double(B);
            double ss = 0.0;
            for (double x : per_batch) ss += (x - mean) * (x - mean);
            r.se_kernel = std::sqrt(ss / double(B - 1) / double(B));
        } else {
            r.var_kernel_fine = v;
        }
    }
    r.grid_too_coarse =
        std::abs(r.var_kernel_fine - r.var_kernel) > 0.02 * std::abs(r.var_kernel);
    return r;
}

std::vector<DeviationRow> deviation_bound_check(const TiltedEnsemble& ens, const ZValues& z,
                                                const std::vector<double>& s_grid) {
    const ZMoments mom = z_moments(ens, z);
    std::vector<DeviationRow> rows;
    for (double s : s_grid) {
        DeviationRow row;
        row.s = s;
        const Estimate sf = phase_average(ens, z, s);
        row.lhs = std::abs(sf.value - std::polar(1.0, -s * mom.mean));
        row.se = sf.se;
        row.rhs = 0.5 * s * s * mom.var + 5.0 * sf.se;
        row.margin = row.rhs - row.lhs;
        row.ok = row.lhs <= row.rhs + 1e-12;
        rows.push_back(row);
    }
    return rows;
}

CNumberEvidence cnumber_criterion(const TiltedEnsemble& ens, const ZValues& z, double tol) {
    const ZMoments mom = z_moments(ens, z);
    CNumberEvidence ev;
    ev.var_direct = mom.var;
    ev.mean = mom.mean;
    ev.ess = mom.ess;
    ev.se_var = mom.se_var;
    ev.holds = mom.var <= tol * (mom.mean * mom.mean + 1.0);
    return ev;
}

void write_ensemble_csv(std::ostream& os, const TiltedEnsemble& ens,
                        const std::vector<std::pair<std::string, const ZValues*>>& columns) {
    os << "index,sign,jumps,logW";
    for (const auto& c : columns) os << ",Re_Z_" << c.first << ",Im_Z_" << c.first;
    os << '\n';
    for (std::size_t i = 0; i < ens.size(); ++i) {
        os << i << ',' << ens.sign(i) << ',' << ens.jump_count(i) << ','
           << fmt17(ens.log_weights()[i]);
        for (const auto& c : columns) os << ',' << fmt17(c.second->re[i]) << ',' << fmt17(c.second->im[i]);
        os << '\n';
    }
}

void write_ensemble_diagnostics(std::ostream& os, const TiltedEnsemble& ens) {
    os << "N = " << ens.size() << '\n';
    os << "seed = " << ens.master_seed() << '\n';
    os << "chunk_size = " << ens.options().chunk_size << '\n';
    os << "mode = " << (ens.frozen() ? "frozen" : "sampled") << '\n';
    os << "max_logW = " << fmt17(ens.max_log_weight()) << '\n';
    os << "sum_W = " << fmt17(ens.sum_w()) << '\n';
    os << "ESS = " << fmt17(ens.ess()) << '\n';
    os << "log_partition = " << fmt17(ens.log_partition()) << '\n';
    os << "degenerate = " << (ens.degenerate() ? "true" : "false") << '\n';
}

} // namespace sbl
