// spin_loop.hpp - beta-periodic two-state jump paths: sampler and exact transfer-matrix oracles

#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sbl/harness/seeding.hpp"

namespace sbl {

struct SpinParams {
    double beta{1.0};
    double eps{0.0}; // tunnelling rate of H_spin = -eps sigma_x

    void validate() const; // throws std::invalid_argument
};

// A loop on S_beta = [-beta/2, beta/2]: initial sign and an even, sorted list of jump times.
struct SpinLoop {
    int initial_sign{1};
    std::vector<double> jumps;

    int value(double t) const;
    // Value at t reduced into S_beta by periodicity.
    int value_periodic(double t, double beta) const;
    std::size_t pairs() const { return jumps.size() / 2; }
};

// Unconditioned jump path on [0, horizon] started at initial_sign.
struct JumpPath {
    int initial_sign{1};
    std::vector<double> jumps;
    int value(double t) const;
};

double transition_prob(double eps, double t, int sigma1, int sigma2);

// sum_m x^(2m) / (2m)!, truncated where the term falls below 1e-16 of the running sum.
double even_series_mass(double x);

// Inverse-CDF draw of the pair count m with P(m) = x^(2m) / ((2m)! cosh x).
int draw_pair_count(double x, double u);

SpinLoop sample_loop(const SpinParams& params, Rng& rng);
JumpPath sample_jump_path(double eps, double horizon, int initial_sign, Rng& rng);

// Chunked, seed-derived sampling; the result depends only on (seed, n, chunk_size).
std::vector<SpinLoop> sample_loops(const SpinParams& params, std::size_t n, std::uint64_t seed,
                                   std::size_t chunk_size, int workers);

// E[X_u X_{u+tau}] = cosh(eps (beta - 2 tau)) / cosh(eps beta).
double two_point_oracle(const SpinParams& params, double tau);

// Diagonal 2x2 observable diag(up, down) in the sigma_z basis.
struct DiagObservable {
    double up{1.0};
    double down{1.0};
    static DiagObservable identity() { return {1.0, 1.0}; }
    static DiagObservable sigma_z() { return {1.0, -1.0}; }
};

// Normalized trace Tr[e^{eps sx (s1 + beta/2)} f1 e^{eps sx (s2 - s1)} f2 ... e^{eps sx (beta/2 - sn)}]
// divided by 2 cosh(eps beta).
double correlation_trace(const SpinParams& params, const std::vector<double>& times,
                         const std::vector<DiagObservable>& observables);

// CSV rows: index, sign, pairs, jump times separated by ';'.
void write_loops_csv(std::ostream& os, const std::vector<SpinLoop>& loops);

} // namespace sbl
