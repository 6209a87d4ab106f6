#pragma once

namespace sbl::simd::detail {

// Below this argument 1 - exp(-x) is summed as a series in both backends.
inline constexpr double kSeriesCut = 0.1;

// 1 - exp(-x) for 0 <= x < kSeriesCut, truncation below 1e-17 relative.
inline double one_minus_exp_neg_series(double x) {
    // x (1 - x/2 (1 - x/3 (1 - x/4 (...))))
    double acc = 1.0;
    for (int k = 12; k >= 2; --k) acc = 1.0 - x / k * acc;
    return x * acc;
}

} // namespace sbl::simd::detail
