// Scalar reference implementations of the SIMD kernel set.

#include "sbl/simd/kernels.hpp"
#include "kernels_common.hpp"

#include <cmath>

namespace sbl::simd {

namespace {

void thermal_factor_scalar(const double* omega, std::size_t n, double tau, double beta,
                           double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        const double w = omega[i];
        const double x = beta * w;
        const double den = x < detail::kSeriesCut ? detail::one_minus_exp_neg_series(x)
                                                  : -std::expm1(-x);
        out[i] = (std::exp(-tau * w) + std::exp(-(beta - tau) * w)) / den;
    }
}

PhaseMoments phase_moments_scalar(const double* w, const double* x1, const double* y1,
                                  const double* x2, const double* y2, std::size_t n, double c1,
                                  double c2) {
    PhaseMoments m;
    for (std::size_t i = 0; i < n; ++i) {
        double x = c1 * x1[i];
        double y = y1 ? c1 * y1[i] : 0.0;
        if (x2) x += c2 * x2[i];
        if (y2) y += c2 * y2[i];
        // exp(-i(x + iy)) = e^y (cos x - i sin x)
        const double amp = y1 || y2 ? std::exp(y) : 1.0;
        const double hr = amp * std::cos(x);
        const double hi = -amp * std::sin(x);
        const double wi = w[i];
        const double w2 = wi * wi;
        m.sw_re += wi * hr;
        m.sw_im += wi * hi;
        m.sw2_re += w2 * hr;
        m.sw2_im += w2 * hi;
        m.sw2_abs2 += w2 * (hr * hr + hi * hi);
    }
    return m;
}

void rank1_update_scalar(double* m, std::size_t dim, const double* x, double w) {
    for (std::size_t i = 0; i < dim; ++i) {
        const double a = w * x[i];
        double* row = m + i * dim;
        for (std::size_t j = i; j < dim; ++j) row[j] += a * x[j];
    }
}

ExpSums shifted_exp_sum_scalar(const double* logw, std::size_t n, double shift, double* w_out) {
    ExpSums s;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::exp(logw[i] - shift);
        w_out[i] = v;
        s.sum += v;
        s.sum_sq += v * v;
    }
    return s;
}

} // namespace

const KernelSet& scalar_kernels() {
    static const KernelSet set{"scalar", thermal_factor_scalar, phase_moments_scalar,
                               rank1_update_scalar, shifted_exp_sum_scalar};
    return set;
}

} // namespace sbl::simd
