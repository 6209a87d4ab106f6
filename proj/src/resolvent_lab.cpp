#include "sbl/resolvent_lab.hpp"

#include "sbl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace sbl {

namespace {

std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_nonzero(double lambda, const char* name) {
    if (lambda == 0.0 || !std::isfinite(lambda))
        throw std::invalid_argument(std::string(name) + " must be finite and nonzero");
}

// Upper bound of int_S^inf r^p exp(-L r - q r^2 / 4) dr for p in {0, 1}.
double tail_bound(double L, double q, double S, int p) {
    const double e = std::exp(-L * S - 0.25 * q * S * S);
    if (p == 0) return e / (L + 0.5 * q * S);
    const double c = L + 0.5 * q * S - 1.0 / S;
    return c > 0.0 ? S * e / c : std::numeric_limits<double>::infinity();
}

double split_point(double L, double q) {
    return q > 0.0 ? std::max(4.0 / L, 8.0 / std::sqrt(q)) : 4.0 / L;
}

// Half-line Laplace integral int_0^inf r^p exp(-L r) phi(sigma r) dr with the tail dropped
// once its bound falls below opt.tail_tol.
ResolventValue laplace_half_line(const EquilibriumState& state, double lambda,
                                 const TestFunction& f, int p, const ResolventOptions& opt) {
    require_nonzero(lambda, "lambda");
    const double L = std::abs(lambda);
    const double sigma = lambda > 0.0 ? 1.0 : -1.0;
    ResolventValue out;
    double q = 0.0;
    std::shared_ptr<const ZValues> z;
    if (!f.is_zero()) {
        state.admit(f);
        q = state.q_bec(f);
        z = state.z(f);
    }
    out.split = split_point(L, q);
    double s_end = 2.0 * out.split;
    while (tail_bound(L, q, s_end, p) > opt.tail_tol) s_end *= 2.0;
    out.s_end = s_end;
    const double tail = tail_bound(L, q, s_end, p);

    const quad::BatchFn fn = [&](const double* r, std::size_t n, double* o) {
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::exp(-L * r[i] - 0.25 * q * r[i] * r[i]) * (p ? r[i] : 1.0);
            Estimate e;
            e.value = 1.0;
            if (z) e = phase_average(state.ensemble(), *z, sigma * r[i]);
            o[3 * i + 0] = w * e.value.real();
            o[3 * i + 1] = w * e.value.imag();
            o[3 * i + 2] = w * e.se;
        }
    };
    quad::Options qo;
    qo.abs_tol = opt.abs_tol;
    qo.max_intervals = opt.max_intervals;
    const quad::Result res = quad::integrate(fn, 3, {0.0, out.split, s_end}, qo);
    if (!res.converged)
        throw ConvergenceError("resolvent Laplace integral did not converge", res.max_error());
    const cplx integral{res.value[0], res.value[1]};
    const cplx pref = p == 0 ? cplx{0.0, -sigma} : cplx{0.0, 1.0};
    out.value = pref * integral;
    out.quad_error = std::hypot(res.error[0], res.error[1]) + tail;
    out.mc_error = res.value[2];
    return out;
}

} // namespace

ResolventValue resolvent_onepoint(const EquilibriumState& state, double lambda,
                                  const TestFunction& f, const ResolventOptions& opt) {
    return laplace_half_line(state, lambda, f, 0, opt);
}

ResolventValue resolvent_onepoint_derivative(const EquilibriumState& state, double lambda,
                                             const TestFunction& f, const ResolventOptions& opt) {
    return laplace_half_line(state, lambda, f, 1, opt);
}

ResolventValue resolvent_twopoint(const EquilibriumState& state, double lambda,
                                  const TestFunction& f, double mu, const TestFunction& g,
                                  const ResolventOptions& opt) {
    require_nonzero(lambda, "lambda");
    require_nonzero(mu, "mu");
    const double L = std::abs(lambda), M = std::abs(mu);
    const double sl = lambda > 0.0 ? 1.0 : -1.0, sm = mu > 0.0 ? 1.0 : -1.0;

    double qff = 0.0, qgg = 0.0, qfg = 0.0, sym = 0.0;
    std::shared_ptr<const ZValues> zf, zg;
    if (!f.is_zero()) {
        state.admit(f);
        qff = state.q_bec(f);
        zf = state.z(f);
    }
    if (!g.is_zero()) {
        state.admit(g);
        qgg = state.q_bec(g);
        zg = state.z(g);
    }
    if (zf && zg) {
        qfg = state.q0(f, g).value.real() + state.q_nonzero(f, g).value.real();
        sym = symplectic(f, g, state.config().quad);
    }
    const ZValues zero_z;
    const ZValues& zfr = zf ? *zf : zero_z;

    // The Gaussian factor is bounded by 1 (positive form), so the tails use the bare envelope.
    auto end_for = [&](double rate, double other) {
        return std::log(1.0 / (opt.tail_tol * rate * other)) / rate;
    };
    const double r_end = std::max(end_for(L, M), 2.0 * split_point(L, qff));
    const double p_end = std::max(end_for(M, L), 2.0 * split_point(M, qgg));
    const double tail = std::exp(-L * r_end) / (L * M) + std::exp(-M * p_end) / (L * M);

    ResolventValue out;
    out.split = split_point(L, qff);
    out.s_end = r_end;
    double inner_err = 0.0;
    quad::Options inner_opt;
    inner_opt.abs_tol = 0.1 * opt.abs_tol * L;
    inner_opt.max_intervals = opt.max_intervals;

    const quad::BatchFn outer = [&](const double* r, std::size_t n, double* o) {
        for (std::size_t i = 0; i < n; ++i) {
            const double s = sl * r[i];
            const quad::BatchFn inner = [&](const double* pp, std::size_t m, double* oi) {
                for (std::size_t j = 0; j < m; ++j) {
                    const double t = sm * pp[j];
                    const double qsum = s * s * qff + t * t * qgg + 2.0 * s * t * qfg;
                    const double w = std::exp(-L * r[i] - M * pp[j] - 0.25 * qsum);
                    Estimate e;
                    e.value = 1.0;
                    if (zf || zg) {
                        e = zg ? phase_average(state.ensemble(), zfr, s, zg.get(), t)
                               : phase_average(state.ensemble(), zfr, s);
                    }
                    const cplx v = w * std::polar(1.0, -0.5 * s * t * sym) * e.value;
                    oi[3 * j + 0] = v.real();
                    oi[3 * j + 1] = v.imag();
                    oi[3 * j + 2] = w * e.se;
                }
            };
            const quad::Result ri =
                quad::integrate(inner, 3, {0.0, split_point(M, qgg), p_end}, inner_opt);
            if (!ri.converged)
                throw ConvergenceError("inner resolvent integral did not converge", ri.max_error());
            inner_err = std::max(inner_err, std::hypot(ri.error[0], ri.error[1]));
            o[3 * i + 0] = ri.value[0];
            o[3 * i + 1] = ri.value[1];
            o[3 * i + 2] = ri.value[2];
        }
    };
    quad::Options qo;
    qo.abs_tol = opt.abs_tol;
    qo.max_intervals = opt.max_intervals;
    const quad::Result res = quad::integrate(outer, 3, {0.0, out.split, r_end}, qo);
    if (!res.converged)
        throw ConvergenceError("outer resolvent integral did not converge", res.max_error());
    out.value = -sl * sm * cplx{res.value[0], res.value[1]};
    out.quad_error = std::hypot(res.error[0], res.error[1]) + inner_err * r_end + tail;
    out.mc_error = res.value[2];
    return out;
}

BoundCheck onepoint_bound(double lambda, const ResolventValue& r) {
    BoundCheck b;
    b.modulus = std::abs(r.value);
    b.bound = 1.0 / std::abs(lambda);
    b.error = r.error();
    b.ok = b.modulus <= b.bound + b.error + 1e-12 * b.bound;
    return b;
}

BoundCheck twopoint_bound(double lambda, double mu, const ResolventValue& r) {
    BoundCheck b;
    b.modulus = std::abs(r.value);
    b.bound = 1.0 / (std::abs(lambda) * std::abs(mu));
    b.error = r.error();
    b.ok = b.modulus <= b.bound + b.error + 1e-12 * b.bound;
    return b;
}

DecayScan bec_decay_scan(const EquilibriumState& state, double lambda, const TestFunction& f,
                         const std::vector<double>& t_grid, double threshold_ratio,
                         double q_floor, const ResolventOptions& opt) {
    if (t_grid.empty()) throw std::invalid_argument("decay scan needs amplitudes");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw std::invalid_argument("amplitudes must increase");
    DecayScan scan;
    scan.lambda = lambda;
    scan.q_bec = f.is_zero() ? 0.0 : state.q_bec(f);
    scan.asserted = scan.q_bec > q_floor;
    for (double t : t_grid) {
        DecayRow row;
        row.t = t;
        row.r = resolvent_onepoint(state, lambda, f.scaled(t), opt);
        row.modulus = std::abs(row.r.value);
        scan.rows.push_back(row);
    }
    scan.strictly_decreasing = true;
    for (std::size_t i = 1; i < scan.rows.size(); ++i)
        if (!(scan.rows[i].modulus < scan.rows[i - 1].modulus)) scan.strictly_decreasing = false;
    scan.below_threshold =
        scan.rows.back().modulus < threshold_ratio * scan.rows.front().modulus;
    return scan;
}

IdealReport ideal_report(const EquilibriumState& state,
                         const std::vector<std::pair<std::string, TestFunction>>& directions,
                         const std::vector<double>& decay_grid, const ResolventOptions& opt) {
    IdealReport rep;
    const StateConfig& cfg = state.config();
    for (const auto& [name, f] : directions) {
        IdealRow row;
        row.name = name;
        row.direction = classify_direction(f, cfg.src, cfg.n0);
        switch (row.direction) {
        case Direction::outside_D0:
            row.reason = "transform not bounded and square integrable";
            rep.rejected.push_back(name);
            break;
        case Direction::infrared_singular:
            in_m_domain(f, cfg.src, &row.reason);
            rep.j_ir.push_back(name);
            break;
        case Direction::physical: {
            const ResolventValue r = resolvent_onepoint(state, 1.0, f, opt);
            row.witness_modulus = std::abs(r.value);
            row.witness_error = r.error();
            row.witness_ok = row.witness_modulus > row.witness_error;
            break;
        }
        case Direction::bec_generator: {
            rep.x_bec.push_back(name);
            const DecayScan scan = bec_decay_scan(state, 1.0, f, decay_grid, 0.1, 1e-3, opt);
            row.decay_ratio = scan.rows.back().modulus / scan.rows.front().modulus;
            row.decay_ok = scan.strictly_decreasing;
            break;
        }
        }
        rep.rows.push_back(row);
    }
    return rep;
}

void write_decay_csv(std::ostream& os, const DecayScan& scan) {
    os << "lambda,t,re,im,abs,err\n";
    for (const DecayRow& r : scan.rows)
        os << g17(scan.lambda) << ',' << g17(r.t) << ',' << g17(r.r.value.real()) << ','
           << g17(r.r.value.imag()) << ',' << g17(r.modulus) << ',' << g17(r.r.error()) << '\n';
}

void write_ideal_csv(std::ostream& os, const IdealReport& rep) {
    os << "direction,classification,reason,witness_abs,witness_err,witness_ok,decay_ratio,decay_ok\n";
    for (const IdealRow& r : rep.rows)
        os << r.name << ',' << to_string(r.direction) << ",\"" << r.reason << "\","
           << g17(r.witness_modulus) << ',' << g17(r.witness_error) << ','
           << (r.witness_ok ? 1 : 0) << ',' << g17(r.decay_ratio) << ',' << (r.decay_ok ? 1 : 0)
           << '\n';
}

} // namespace sbl
