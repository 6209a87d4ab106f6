#include "sbl/quadrature.hpp"

#include "sbl/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

namespace sbl::quad {

namespace {

// QUADPACK qk21 abscissae and weights.
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077548027438397, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights for the odd Kronrod nodes kXgk[1], kXgk[3], ..., kXgk[9].
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

constexpr std::size_t kNodes = 21;

struct Panel {
    Interval iv;
    std::vector<double> kron;
    std::vector<double> err;
    double priority{0.0};
};

struct PanelOrder {
    bool operator()(const Panel& x, const Panel& y) const { return x.priority < y.priority; }
};

class Evaluator {
public:
    Evaluator(const BatchFn& f, std::size_t dim) : f_(f), dim_(dim), out_(kNodes * dim) {}

    // Fill panel.kron and panel.err; returns the panel priority (max component error).
    double run(Panel& p) {
        std::array<double, kNodes> x{};
        std::array<double, kNodes> jac{};
        const double c = 0.5 * (p.iv.a + p.iv.b);
        const double h = 0.5 * (p.iv.b - p.iv.a);
        for (std::size_t j = 0; j < 10; ++j) {
            x[2 * j] = c - h * kXgk[j];
            x[2 * j + 1] = c + h * kXgk[j];
        }
        x[20] = c;
        for (std::size_t j = 0; j < kNodes; ++j) {
            if (p.iv.mapped) {
                const double t = std::tan(x[j]);
                const double sec = 1.0 / std::cos(x[j]);
                jac[j] = sec * sec;
                x[j] = p.iv.origin + t;
            } else {
                jac[j] = 1.0;
            }
        }
        f_(x.data(), kNodes, out_.data());
        evaluations += static_cast<int>(kNodes);

        p.kron.assign(dim_, 0.0);
        p.err.assign(dim_, 0.0);
        double worst = 0.0;
        for (std::size_t comp = 0; comp < dim_; ++comp) {
            auto v = [&](std::size_t j) { return out_[j * dim_ + comp] * jac[j]; };
            double k = kWgk[10] * v(20);
            double g = 0.0;
            for (std::size_t j = 0; j < 10; ++j) {
                const double pair = v(2 * j) + v(2 * j + 1);
                k += kWgk[j] * pair;
                if (j % 2 == 1) g += kWg[j / 2] * pair;
            }
            k *= h;
            g *= h;
            p.kron[comp] = k;
            double e = std::abs(k - g);
            if (!std::isfinite(k)) e = std::numeric_limits<double>::infinity();
            p.err[comp] = e;
            worst = std::max(worst, e);
        }
        p.priority = worst;
        return worst;
    }

    int evaluations{0};

private:
    const BatchFn& f_;
    std::size_t dim_;
    std::vector<double> out_;
};

std::vector<Interval> segments(const std::vector<double>& bp) {
    if (bp.size() < 2) throw std::invalid_argument("quadrature: need at least two breakpoints");
    std::vector<Interval> out;
    for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
        const double a = bp[i];
        const double b = bp[i + 1];
        if (std::isinf(a)) throw std::invalid_argument("quadrature: infinite lower limit");
        if (std::isinf(b)) {
            if (i + 2 != bp.size()) throw std::invalid_argument("quadrature: +inf must be last");
            out.push_back({0.0, 0.5 * M_PI, true, a});
        } else if (b > a) {
            out.push_back({a, b, false, 0.0});
        } else if (b < a) {
            throw std::invalid_argument("quadrature: breakpoints must be sorted");
        }
    }
    return out;
}

bool satisfied(const std::vector<double>& value, const std::vector<double>& err,
               const Options& opt) {
    for (std::size_t c = 0; c < value.size(); ++c) {
        const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(value[c]));
        if (!(err[c] <= tol)) return false;
    }
    return true;
}

} // namespace

double Result::max_error() const {
    double m = 0.0;
    for (double e : error) m = std::max(m, e);
    return m;
}

Result integrate(const BatchFn& f, std::size_t dim, const std::vector<double>& breakpoints,
                 const Options& opt) {
    Evaluator ev(f, dim);
    std::priority_queue<Panel, std::vector<Panel>, PanelOrder> heap;
    Result res;
    res.value.assign(dim, 0.0);
    res.error.assign(dim, 0.0);

    for (const Interval& iv : segments(breakpoints)) {
        Panel p;
        p.iv = iv;
        ev.run(p);
        for (std::size_t c = 0; c < dim; ++c) {
            res.value[c] += p.kron[c];
            res.error[c] += p.err[c];
        }
        heap.push(std::move(p));
    }

    int count = static_cast<int>(heap.size());
    while (!satisfied(res.value, res.error, opt) && !heap.empty()) {
        if (count >= opt.max_intervals) break;
        Panel p = heap.top();
        const double mid = 0.5 * (p.iv.a + p.iv.b);
        if (!(mid > p.iv.a && mid < p.iv.b)) break; // interval at machine resolution
        heap.pop();
        Panel left, right;
        left.iv = {p.iv.a, mid, p.iv.mapped, p.iv.origin};
        right.iv = {mid, p.iv.b, p.iv.mapped, p.iv.origin};
        ev.run(left);
        ev.run(right);
        for (std::size_t c = 0; c < dim; ++c) {
            res.value[c] += left.kron[c] + right.kron[c] - p.kron[c];
            res.error[c] += left.err[c] + right.err[c] - p.err[c];
        }
        heap.push(std::move(left));
        heap.push(std::move(right));
        ++count;
    }

    // Re-sum from the panels so that the running-update drift does not leak into results.
    std::fill(res.value.begin(), res.value.end(), 0.0);
    std::fill(res.error.begin(), res.error.end(), 0.0);
    std::vector<Panel> panels;
    panels.reserve(heap.size());
    while (!heap.empty()) {
        panels.push_back(heap.top());
        heap.pop();
    }
    std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) {
        if (x.iv.mapped != y.iv.mapped) return !x.iv.mapped;
        return x.iv.a < y.iv.a;
    });
    for (const Panel& p : panels) {
        for (std::size_t c = 0; c < dim; ++c) {
            res.value[c] += p.kron[c];
            res.error[c] += p.err[c];
        }
        res.partition.push_back(p.iv);
    }
    res.converged = satisfied(res.value, res.error, opt);
    res.evaluations = ev.evaluations;
    return res;
}

Result apply_partition(const BatchFn& f, std::size_t dim, const std::vector<Interval>& partition) {
    Evaluator ev(f, dim);
    Result res;
    res.value.assign(dim, 0.0);
    res.error.assign(dim, 0.0);
    for (const Interval& iv : partition) {
        Panel p;
        p.iv = iv;
        ev.run(p);
        for (std::size_t c = 0; c < dim; ++c) {
            res.value[c] += p.kron[c];
            res.error[c] += p.err[c];
        }
    }
    res.partition = partition;
    res.converged = true;
    res.evaluations = ev.evaluations;
    return res;
}

double integrate_real(const std::function<double(double)>& f,
                      const std::vector<double>& breakpoints, const Options& opt,
                      double* abs_error) {
    BatchFn batch = [&](const double* x, std::size_t n, double* out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(x[i]);
    };
    Result r = integrate(batch, 1, breakpoints, opt);
    if (abs_error) *abs_error = r.error[0];
    if (!r.converged)
        throw ConvergenceError("adaptive quadrature did not converge", r.error[0]);
    return r.value[0];
}

std::complex<double> integrate_complex(const std::function<std::complex<double>(double)>& f,
                                       const std::vector<double>& breakpoints,
                                       const Options& opt, double* abs_error) {
    BatchFn batch = [&](const double* x, std::size_t n, double* out) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::complex<double> v = f(x[i]);
            out[2 * i] = v.real();
            out[2 * i + 1] = v.imag();
        }
    };
    Result r = integrate(batch, 2, breakpoints, opt);
    const double err = std::hypot(r.error[0], r.error[1]);
    if (abs_error) *abs_error = err;
    if (!r.converged) throw ConvergenceError("adaptive quadrature did not converge", err);
    return {r.value[0], r.value[1]};
}

double gk21(const std::function<double(double)>& f, double a, double b, double* gauss) {
    BatchFn batch = [&](const double* x, std::size_t n, double* out) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(x[i]);
    };
    Result r = apply_partition(batch, 1, {{a, b, false, 0.0}});
    if (gauss) {
        // err = |K - G| loses the sign; recompute G directly.
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double g = 0.0;
        for (std::size_t j = 1; j < 10; j += 2)
            g += kWg[j / 2] * (f(c - h * kXgk[j]) + f(c + h * kXgk[j]));
        *gauss = g * h;
    }
    return r.value[0];
}

} // namespace sbl::quad
