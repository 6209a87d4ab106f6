// kernels.hpp - data-parallel inner loops with scalar and AVX2 implementations

#pragma once

#include <cstddef>

namespace sbl::simd {

struct PhaseMoments {
    double sw_re{0.0};    // sum w * Re h
    double sw_im{0.0};    // sum w * Im h
    double sw2_re{0.0};   // sum w^2 * Re h
    double sw2_im{0.0};   // sum w^2 * Im h
    double sw2_abs2{0.0}; // sum w^2 * |h|^2
};

struct ExpSums {
    double sum{0.0};
    double sum_sq{0.0};
};

// out[i] = (exp(-tau w_i) + exp(-(beta - tau) w_i)) / (1 - exp(-beta w_i)), w_i > 0.
using ThermalFactorFn = void (*)(const double* omega, std::size_t n, double tau, double beta,
                                 double* out);

// Moments of h_i = exp(-i z_i) with z_i = c1 (x1 + i y1) + c2 (x2 + i y2).
// Any of y1, x2, y2 may be null and is then read as zero.
using PhaseMomentsFn = PhaseMoments (*)(const double* w, const double* x1, const double* y1,
                                        const double* x2, const double* y2, std::size_t n,
                                        double c1, double c2);

// Upper triangle (j >= i) of the row-major dim x dim matrix m += w x x^T.
using Rank1UpdateFn = void (*)(double* m, std::size_t dim, const double* x, double w);

// w_out[i] = exp(logw[i] - shift); returns the sum and the sum of squares.
using ShiftedExpSumFn = ExpSums (*)(const double* logw, std::size_t n, double shift,
                                    double* w_out);

struct KernelSet {
    const char* name;
    ThermalFactorFn thermal_factor;
    PhaseMomentsFn phase_moments;
    Rank1UpdateFn rank1_update;
    ShiftedExpSumFn shifted_exp_sum;
};

const KernelSet& scalar_kernels();

// nullptr when the binary was built without AVX2 support or the CPU lacks AVX2/FMA.
const KernelSet* avx2_kernels();

// Selected once per process. SBL_SIMD=scalar|avx2|auto overrides the CPU probe.
const KernelSet& kernels();

} // namespace sbl::simd
