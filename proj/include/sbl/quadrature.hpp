// quadrature.hpp - globally adaptive Gauss-Kronrod (10/21) integration

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

namespace sbl::quad {

// Evaluate the integrand at n points x[0..n); write out[i * dim + c] for component c.
using BatchFn = std::function<void(const double* x, std::size_t n, double* out)>;

struct Options {
    double abs_tol{1e-10};
    double rel_tol{0.0};
    int max_intervals{4000};
};

struct Interval {
    double a{0.0};
    double b{0.0};
    bool mapped{false}; // [a,b] are angles of the tail map x = origin + tan(theta)
    double origin{0.0};
};

struct Result {
    std::vector<double> value;
    std::vector<double> error; // per-component sum of |K21 - G10| over the final partition
    std::vector<Interval> partition;
    bool converged{false};
    int evaluations{0};

    double max_error() const;
};

// Integrate over consecutive segments [p0,p1], [p1,p2], ...; the last breakpoint may be
// +infinity, in which case the final segment is mapped to a finite angle interval.
Result integrate(const BatchFn& f, std::size_t dim, const std::vector<double>& breakpoints,
                 const Options& opt = {});

// One GK21 pass over a fixed partition (no adaptivity). The error estimate is |K21 - G10|.
Result apply_partition(const BatchFn& f, std::size_t dim, const std::vector<Interval>& partition);

double integrate_real(const std::function<double(double)>& f,
                      const std::vector<double>& breakpoints, const Options& opt = {},
                      double* abs_error = nullptr);

std::complex<double> integrate_complex(const std::function<std::complex<double>(double)>& f,
                                       const std::vector<double>& breakpoints,
                                       const Options& opt = {}, double* abs_error = nullptr);

// Raw rule on [a,b] for a scalar integrand: returns the Kronrod value and stores Gauss.
double gk21(const std::function<double(double)>& f, double a, double b, double* gauss = nullptr);

} // namespace sbl::quad
