#include "sbl/spin_loop.hpp"

#include "sbl/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace sbl {

namespace {

using Mat2 = std::array<double, 4>; // row-major

Mat2 mul(const Mat2& a, const Mat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

// e^{eps sigma_x t} e^{-eps t}: stays bounded for large eps t.
Mat2 scaled_propagator(double eps, double t) {
    const double e = std::exp(-2.0 * eps * t);
    const double c = 0.5 * (1.0 + e);
    const double s = 0.5 * (1.0 - e);
    return {c, s, s, c};
}

constexpr double kMaxCoupling = 500.0;

} // namespace

void SpinParams::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be > 0");
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("epsilon must be >= 0");
    if (eps * beta > kMaxCoupling)
        throw std::invalid_argument("epsilon * beta too large for the even-count series");
}

int SpinLoop::value(double t) const {
    const auto n = std::upper_bound(jumps.begin(), jumps.end(), t) - jumps.begin();
    return (n % 2) ? -initial_sign : initial_sign;
}

int SpinLoop::value_periodic(double t, double beta) const {
    const double half = 0.5 * beta;
    double r = std::fmod(t + half, beta);
    if (r < 0.0) r += beta;
    return value(r - half);
}

int JumpPath::value(double t) const {
    const auto n = std::upper_bound(jumps.begin(), jumps.end(), t) - jumps.begin();
    return (n % 2) ? -initial_sign : initial_sign;
}

double transition_prob(double eps, double t, int sigma1, int sigma2) {
    if (t < 0.0) throw std::invalid_argument("transition_prob: t must be >= 0");
    return 0.5 * (1.0 + sigma1 * sigma2 * std::exp(-2.0 * eps * t));
}

double even_series_mass(double x) {
    const double x2 = x * x;
    double term = 1.0, sum = 1.0;
    for (int m = 1; m < 100000; ++m) {
        term *= x2 / ((2.0 * m - 1.0) * (2.0 * m));
        sum += term;
        if (term < 1e-16 * sum && 2.0 * m > x) break;
    }
    return sum;
}

int draw_pair_count(double x, double u) {
    if (x == 0.0) return 0;
    const double target = u * even_series_mass(x);
    const double x2 = x * x;
    double term = 1.0, acc = 1.0;
    int m = 0;
    while (acc <= target) {
        ++m;
        term *= x2 / ((2.0 * m - 1.0) * (2.0 * m));
        const double next = acc + term;
        if (next == acc) break; // past the truncation point of the mass
        acc = next;
    }
    return m;
}

SpinLoop sample_loop(const SpinParams& params, Rng& rng) {
    SpinLoop loop;
    loop.initial_sign = uniform01(rng) < 0.5 ? 1 : -1;
    const int m = draw_pair_count(params.eps * params.beta, uniform01(rng));
    loop.jumps.resize(2 * static_cast<std::size_t>(m));
    for (double& t : loop.jumps) t = params.beta * (uniform01(rng) - 0.5);
    std::sort(loop.jumps.begin(), loop.jumps.end());
    return loop;
}

JumpPath sample_jump_path(double eps, double horizon, int initial_sign, Rng& rng) {
    JumpPath p;
    p.initial_sign = initial_sign;
    if (eps <= 0.0) return p;
    double t = 0.0;
    for (;;) {
        t += -std::log1p(-uniform01(rng)) / eps;
        if (t > horizon) break;
        p.jumps.push_back(t);
    }
    return p;
}

std::vector<SpinLoop> sample_loops(const SpinParams& params, std::size_t n, std::uint64_t seed,
                                   std::size_t chunk_size, int workers) {
    params.validate();
    if (chunk_size == 0) throw std::invalid_argument("chunk size must be > 0");
    std::vector<SpinLoop> out(n);
    const std::size_t chunks = (n + chunk_size - 1) / chunk_size;
    parallel_for(chunks, workers, [&](std::size_t c) {
        Rng rng(seed_derivation(seed, c));
        const std::size_t stop = std::min(n, (c + 1) * chunk_size);
        for (std::size_t i = c * chunk_size; i < stop; ++i) out[i] = sample_loop(params, rng);
    });
    return out;
}

double two_point_oracle(const SpinParams& params, double tau) {
    if (tau < 0.0 || tau > params.beta)
        throw std::invalid_argument("two_point_oracle: tau outside [0, beta]");
    const double e = params.eps;
    // cosh(e(beta - 2 tau)) / cosh(e beta), scaled by e^{-e beta}.
    return (std::exp(-2.0 * e * tau) + std::exp(-2.0 * e * (params.beta - tau))) /
           (1.0 + std::exp(-2.0 * e * params.beta));
}

double correlation_trace(const SpinParams& params, const std::vector<double>& times,
                         const std::vector<DiagObservable>& observables) {
    if (times.size() != observables.size())
        throw std::invalid_argument("correlation_trace: times and observables differ in length");
    if (!std::is_sorted(times.begin(), times.end()))
        throw std::invalid_argument("correlation_trace: times must be sorted");
    const double half = 0.5 * params.beta;
    Mat2 acc{1.0, 0.0, 0.0, 1.0};
    double prev = -half;
    for (std::size_t i = 0; i < times.size(); ++i) {
        acc = mul(acc, scaled_propagator(params.eps, times[i] - prev));
        const DiagObservable& f = observables[i];
        acc = mul(acc, Mat2{f.up, 0.0, 0.0, f.down});
        prev = times[i];
    }
    acc = mul(acc, scaled_propagator(params.eps, half - prev));
    return (acc[0] + acc[3]) / (1.0 + std::exp(-2.0 * params.eps * params.beta));
}

void write_loops_csv(std::ostream& os, const std::vector<SpinLoop>& loops) {
    os << "index,sign,pairs,jumps\n";
    char buf[32];
    for (std::size_t i = 0; i < loops.size(); ++i) {
        os << i << ',' << loops[i].initial_sign << ',' << loops[i].pairs() << ',';
        for (std::size_t j = 0; j < loops[i].jumps.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", loops[i].jumps[j]);
            os << (j ? ";" : "") << buf;
        }
        os << '\n';
    }
}

} // namespace sbl
