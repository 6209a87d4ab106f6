// AVX2/FMA implementations of the kernel set. Compiled with -mavx2 -mfma; only reached
// through the dispatcher after a CPU feature probe.

#include "sbl/simd/kernels.hpp"
#include "kernels_common.hpp"

#include <immintrin.h>

#include <cmath>
#include <cstdint>

namespace sbl::simd {

namespace {

// Cephes-style exp: reduce by ln 2, rational approximation on [-ln2/2, ln2/2], scale by 2^n
// in two steps so that the exponent field never overflows.
inline __m256d exp_pd(__m256d x) {
    const __m256d lo = _mm256_set1_pd(-745.1332191019411);
    const __m256d hi = _mm256_set1_pd(709.782712893384);
    const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                       _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125e-1), x);
    r = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212e-6), r);
    const __m256d r2 = _mm256_mul_pd(r, r);

    __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
    p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_fmadd_pd(p, r2, _mm256_set1_pd(9.99999999999999999910e-1));
    const __m256d px = _mm256_mul_pd(p, r);

    __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
    q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_fmadd_pd(q, r2, _mm256_set1_pd(2.00000000000000000009e0));

    __m256d e = _mm256_div_pd(px, _mm256_sub_pd(q, px));
    e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    const __m128i n = _mm256_cvtpd_epi32(fx);
    const __m128i n1 = _mm_srai_epi32(n, 1);
    const __m128i n2 = _mm_sub_epi32(n, n1);
    const __m256i bias = _mm256_set1_epi64x(1023);
    const __m256d s1 = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n1), bias), 52));
    const __m256d s2 = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n2), bias), 52));
    e = _mm256_mul_pd(_mm256_mul_pd(e, s1), s2);
    return _mm256_blendv_pd(e, _mm256_setzero_pd(), underflow);
}

inline __m256d poly6(__m256d z, const double* c) {
    __m256d p = _mm256_set1_pd(c[0]);
    for (int i = 1; i < 6; ++i) p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(c[i]));
    return p;
}

constexpr double kSinCof[6] = {1.58962301576546568060e-10, -2.50507477628578072866e-8,
                               2.75573136213857245213e-6,  -1.98412698295895385996e-4,
                               8.33333333332211858878e-3,  -1.66666666666666307295e-1};
constexpr double kCosCof[6] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9,
                               -2.75573141792967388112e-7,  2.48015872888517045348e-5,
                               -1.38888888888730564116e-3,  4.16666666666665929218e-2};

// Beyond this magnitude the three-term pi/2 reduction is no longer exact in the first term.
constexpr double kSinCosLimit = 1e5;

inline void sincos_pd(__m256d x, __m256d* s_out, __m256d* c_out) {
    const __m256d absx = _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
    if (_mm256_movemask_pd(_mm256_cmp_pd(absx, _mm256_set1_pd(kSinCosLimit), _CMP_GT_OQ))) {
        alignas(32) double xs[4], ss[4], cs[4];
        _mm256_store_pd(xs, x);
        for (int i = 0; i < 4; ++i) {
            ss[i] = std::sin(xs[i]);
            cs[i] = std::cos(xs[i]);
        }
        *s_out = _mm256_load_pd(ss);
        *c_out = _mm256_load_pd(cs);
        return;
    }
    const __m256d j = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(0.63661977236758134308)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(j, _mm256_set1_pd(1.57079632673412561417e+00), x);
    r = _mm256_fnmadd_pd(j, _mm256_set1_pd(6.07710050630396597660e-11), r);
    r = _mm256_fnmadd_pd(j, _mm256_set1_pd(2.02226624871116645580e-21), r);
    const __m256d z = _mm256_mul_pd(r, r);

    const __m256d sr = _mm256_fmadd_pd(_mm256_mul_pd(r, z), poly6(z, kSinCof), r);
    const __m256d cr = _mm256_add_pd(
        _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, _mm256_set1_pd(1.0)),
        _mm256_mul_pd(_mm256_mul_pd(z, z), poly6(z, kCosCof)));

    const __m256i q = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(j));
    const __m256i one = _mm256_set1_epi64x(1);
    const __m256i two = _mm256_set1_epi64x(2);
    const __m256d swap =
        _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(q, one), one));
    const __m256d neg_s = _mm256_castsi256_pd(
        _mm256_slli_epi64(_mm256_srli_epi64(_mm256_and_si256(q, two), 1), 63));
    const __m256d neg_c = _mm256_castsi256_pd(_mm256_slli_epi64(
        _mm256_srli_epi64(_mm256_and_si256(_mm256_add_epi64(q, one), two), 1), 63));

    *s_out = _mm256_xor_pd(_mm256_blendv_pd(sr, cr, swap), neg_s);
    *c_out = _mm256_xor_pd(_mm256_blendv_pd(cr, sr, swap), neg_c);
}

inline double hsum(__m256d v) {
    alignas(32) double t[4];
    _mm256_store_pd(t, v);
    return ((t[0] + t[1]) + t[2]) + t[3];
}

void thermal_factor_avx2(const double* omega, std::size_t n, double tau, double beta,
                         double* out) {
    const __m256d vtau = _mm256_set1_pd(-tau);
    const __m256d vrest = _mm256_set1_pd(-(beta - tau));
    const __m256d vbeta = _mm256_set1_pd(beta);
    const __m256d cut = _mm256_set1_pd(detail::kSeriesCut);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    auto body = [&](__m256d w) {
        const __m256d x = _mm256_mul_pd(vbeta, w);
        __m256d acc = one;
        for (int k = 12; k >= 2; --k)
            acc = _mm256_fnmadd_pd(_mm256_div_pd(x, _mm256_set1_pd(double(k))), acc, one);
        const __m256d series = _mm256_mul_pd(x, acc);
        const __m256d direct = _mm256_sub_pd(one, exp_pd(_mm256_sub_pd(_mm256_setzero_pd(), x)));
        const __m256d den = _mm256_blendv_pd(direct, series, _mm256_cmp_pd(x, cut, _CMP_LT_OQ));
        const __m256d num = _mm256_add_pd(exp_pd(_mm256_mul_pd(vtau, w)),
                                          exp_pd(_mm256_mul_pd(vrest, w)));
        return _mm256_div_pd(num, den);
    };
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, body(_mm256_loadu_pd(omega + i)));
    if (i < n) {
        alignas(32) double tmp[4] = {1.0, 1.0, 1.0, 1.0};
        for (std::size_t k = i; k < n; ++k) tmp[k - i] = omega[k];
        _mm256_store_pd(tmp, body(_mm256_load_pd(tmp)));
        for (std::size_t k = i; k < n; ++k) out[k] = tmp[k - i];
    }
}

PhaseMoments phase_moments_avx2(const double* w, const double* x1, const double* y1,
                                const double* x2, const double* y2, std::size_t n, double c1,
                                double c2) {
    const __m256d vc1 = _mm256_set1_pd(c1);
    const __m256d vc2 = _mm256_set1_pd(c2);
    const bool damped = y1 || y2;
    __m256d a_re = _mm256_setzero_pd(), a_im = _mm256_setzero_pd();
    __m256d b_re = _mm256_setzero_pd(), b_im = _mm256_setzero_pd();
    __m256d b_abs = _mm256_setzero_pd();

    auto step = [&](__m256d vw, __m256d vx1, __m256d vy1, __m256d vx2, __m256d vy2) {
        __m256d x = _mm256_mul_pd(vc1, vx1);
        x = _mm256_fmadd_pd(vc2, vx2, x);
        __m256d s, c;
        sincos_pd(x, &s, &c);
        __m256d hr = c;
        __m256d hi = _mm256_sub_pd(_mm256_setzero_pd(), s);
        if (damped) {
            const __m256d y = _mm256_fmadd_pd(vc2, vy2, _mm256_mul_pd(vc1, vy1));
            const __m256d amp = exp_pd(y);
            hr = _mm256_mul_pd(amp, hr);
            hi = _mm256_mul_pd(amp, hi);
        }
        const __m256d w2 = _mm256_mul_pd(vw, vw);
        a_re = _mm256_fmadd_pd(vw, hr, a_re);
        a_im = _mm256_fmadd_pd(vw, hi, a_im);
        b_re = _mm256_fmadd_pd(w2, hr, b_re);
        b_im = _mm256_fmadd_pd(w2, hi, b_im);
        b_abs = _mm256_fmadd_pd(w2, _mm256_fmadd_pd(hr, hr, _mm256_mul_pd(hi, hi)), b_abs);
    };

    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        step(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x1 + i), y1 ? _mm256_loadu_pd(y1 + i) : zero,
             x2 ? _mm256_loadu_pd(x2 + i) : zero, y2 ? _mm256_loadu_pd(y2 + i) : zero);
    }
    if (i < n) {
        alignas(32) double tw[4] = {}, tx1[4] = {}, ty1[4] = {}, tx2[4] = {}, ty2[4] = {};
        for (std::size_t k = i; k < n; ++k) {
            tw[k - i] = w[k];
            tx1[k - i] = x1[k];
            if (y1) ty1[k - i] = y1[k];
            if (x2) tx2[k - i] = x2[k];
            if (y2) ty2[k - i] = y2[k];
        }
        step(_mm256_load_pd(tw), _mm256_load_pd(tx1), _mm256_load_pd(ty1), _mm256_load_pd(tx2),
             _mm256_load_pd(ty2));
    }
    return PhaseMoments{hsum(a_re), hsum(a_im), hsum(b_re), hsum(b_im), hsum(b_abs)};
}

void rank1_update_avx2(double* m, std::size_t dim, const double* x, double w) {
    for (std::size_t i = 0; i < dim; ++i) {
        const double a = w * x[i];
        const __m256d va = _mm256_set1_pd(a);
        double* row = m + i * dim;
        std::size_t j = i;
        for (; j + 4 <= dim; j += 4) {
            _mm256_storeu_pd(row + j,
                             _mm256_fmadd_pd(va, _mm256_loadu_pd(x + j), _mm256_loadu_pd(row + j)));
        }
        for (; j < dim; ++j) row[j] = std::fma(a, x[j], row[j]);
    }
}

ExpSums shifted_exp_sum_avx2(const double* logw, std::size_t n, double shift, double* w_out) {
    const __m256d vs = _mm256_set1_pd(shift);
    __m256d acc = _mm256_setzero_pd(), acc2 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = exp_pd(_mm256_sub_pd(_mm256_loadu_pd(logw + i), vs));
        _mm256_storeu_pd(w_out + i, v);
        acc = _mm256_add_pd(acc, v);
        acc2 = _mm256_fmadd_pd(v, v, acc2);
    }
    if (i < n) {
        alignas(32) double t[4] = {-HUGE_VAL, -HUGE_VAL, -HUGE_VAL, -HUGE_VAL};
        for (std::size_t k = i; k < n; ++k) t[k - i] = logw[k];
        const __m256d v = exp_pd(_mm256_sub_pd(_mm256_load_pd(t), vs));
        _mm256_store_pd(t, v);
        for (std::size_t k = i; k < n; ++k) w_out[k] = t[k - i];
        acc = _mm256_add_pd(acc, v);
        acc2 = _mm256_fmadd_pd(v, v, acc2);
    }
    return ExpSums{hsum(acc), hsum(acc2)};
}

} // namespace

namespace detail {

const KernelSet& avx2_kernel_set() {
    static const KernelSet set{"avx2", thermal_factor_avx2, phase_moments_avx2, rank1_update_avx2,
                               shifted_exp_sum_avx2};
    return set;
}

} // namespace detail

} // namespace sbl::simd
