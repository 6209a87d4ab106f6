#include "sbl/momentum_space.hpp"

#include "sbl/errors.hpp"
#include "sbl/hash.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sbl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double shift_distance(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::max(x.size(), y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = i < x.size() ? x[i] : 0.0;
        const double b = i < y.size() ? y[i] : 0.0;
        s += (a - b) * (a - b);
    }
    return std::sqrt(s);
}

double norm(const std::vector<double>& x) { return shift_distance(x, {}); }

double sinc(double z) { return z == 0.0 ? 1.0 : std::sin(z) / z; }

bool has_shift(const TestFunction& f) {
    for (const auto& c : f.components())
        if (norm(c.shift) > 0.0) return true;
    return false;
}

// Component value without the spatial phase.
cplx component_value(const Component& c, double k, double omega) {
    const double amp = c.profile(k) * std::exp(-0.5 * c.euclid_damp * omega);
    return c.coeff * amp * std::polar(1.0, c.time_phase * omega);
}

quad::Options with_rel(quad::Options opt) {
    if (opt.rel_tol == 0.0) opt.rel_tol = 1e-12;
    return opt;
}

FormValue weighted_pair(const TestFunction& f, const TestFunction& g,
                        const std::function<double(double)>& weight, const quad::Options& opt) {
    double err = 0.0;
    const cplx v = quad::integrate_complex(
        [&](double k) { return k == 0.0 ? cplx{} : pair_density(f, g, k) * weight(k); },
        radial_breakpoints(f, &g, nullptr), with_rel(opt), &err);
    return {v, err};
}

} // namespace

double dispersion(double k_mag, double s) { return std::pow(k_mag, s); }

double sphere_area(int d) { return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d); }

const char* to_string(ProfileKind kind) {
    switch (kind) {
    case ProfileKind::gaussian: return "gaussian";
    case ProfileKind::power_bump: return "power_bump";
    case ProfileKind::point_source_flat: return "point_source_flat";
    case ProfileKind::power_tail: return "power_tail";
    }
    return "?";
}

const char* to_string(Direction d) {
    switch (d) {
    case Direction::physical: return "physical";
    case Direction::infrared_singular: return "infrared_singular";
    case Direction::bec_generator: return "bec_generator";
    case Direction::outside_D0: return "outside_D0";
    }
    return "?";
}

RadialProfile RadialProfile::gaussian(double width, double amplitude) {
    RadialProfile p;
    p.kind = ProfileKind::gaussian;
    p.width = width;
    p.amplitude = amplitude;
    p.validate();
    return p;
}

RadialProfile RadialProfile::power_bump(double exponent_at_zero, double cutoff, double amplitude) {
    RadialProfile p;
    p.kind = ProfileKind::power_bump;
    p.exponent = exponent_at_zero;
    p.cutoff = cutoff;
    p.amplitude = amplitude;
    p.validate();
    return p;
}

RadialProfile RadialProfile::point_source_flat(double amplitude) {
    RadialProfile p;
    p.kind = ProfileKind::point_source_flat;
    p.amplitude = amplitude;
    p.validate();
    return p;
}

RadialProfile RadialProfile::power_tail(double exponent_at_infinity, double amplitude) {
    RadialProfile p;
    p.kind = ProfileKind::power_tail;
    p.exponent = exponent_at_infinity;
    p.amplitude = amplitude;
    p.validate();
    return p;
}

double RadialProfile::operator()(double k) const {
    switch (kind) {
    case ProfileKind::gaussian: return amplitude * std::exp(-0.5 * k * k / (width * width));
    case ProfileKind::power_bump: return k < cutoff ? amplitude * std::pow(k, exponent) : 0.0;
    case ProfileKind::point_source_flat: return amplitude;
    case ProfileKind::power_tail: return amplitude * std::pow(1.0 + k * k, 0.5 * exponent);
    }
    return 0.0;
}

double RadialProfile::exponent_at_zero() const {
    return kind == ProfileKind::power_bump ? exponent : 0.0;
}

double RadialProfile::exponent_at_infinity() const {
    switch (kind) {
    case ProfileKind::gaussian:
    case ProfileKind::power_bump: return -kInf;
    case ProfileKind::point_source_flat: return 0.0;
    case ProfileKind::power_tail: return exponent;
    }
    return 0.0;
}

std::optional<double> RadialProfile::breakpoint() const {
    if (kind == ProfileKind::power_bump) return cutoff;
    return std::nullopt;
}

void RadialProfile::validate() const {
    if (!std::isfinite(amplitude)) throw std::invalid_argument("profile amplitude must be finite");
    if (kind == ProfileKind::gaussian && !(width > 0.0))
        throw std::invalid_argument("gaussian width must be > 0");
    if (kind == ProfileKind::power_bump && !(cutoff > 0.0))
        throw std::invalid_argument("power_bump cutoff must be > 0");
    if ((kind == ProfileKind::power_bump || kind == ProfileKind::power_tail) &&
        !std::isfinite(exponent))
        throw std::invalid_argument("profile exponent must be finite");
}

TestFunction::TestFunction(Space space, std::vector<Component> components)
    : space_(space), components_(std::move(components)) {
    finalize();
}

void TestFunction::finalize() {
    if (space_.d < 1) throw std::invalid_argument("dimension must be >= 1");
    if (!(space_.s > 0.0)) throw std::invalid_argument("dispersion exponent must be > 0");
    a0_ = kInf;
    a_inf_ = -kInf;
    for (const auto& c : components_) {
        c.profile.validate();
        if (!(c.euclid_damp >= 0.0)) throw std::invalid_argument("euclid_damp must be >= 0");
        if (!c.shift.empty() && static_cast<int>(c.shift.size()) != space_.d)
            throw std::invalid_argument("spatial shift must have d entries");
        if (norm(c.shift) > 0.0 && space_.d != 3)
            throw std::invalid_argument("spatial shifts are supported only in d = 3");
        if (c.coeff == cplx{} || c.profile.is_zero()) continue;
        a0_ = std::min(a0_, c.profile.exponent_at_zero());
        const double ai = c.euclid_damp > 0.0 ? -kInf : c.profile.exponent_at_infinity();
        a_inf_ = std::max(a_inf_, ai);
    }
}

TestFunction TestFunction::zero(Space space) { return TestFunction(space, {}); }

TestFunction TestFunction::single(Space space, RadialProfile profile, cplx coeff) {
    Component c;
    c.profile = profile;
    c.coeff = coeff;
    return TestFunction(space, {c});
}

bool TestFunction::is_zero() const {
    for (const auto& c : components_)
        if (c.coeff != cplx{} && !c.profile.is_zero()) return false;
    return true;
}

cplx TestFunction::at_origin() const {
    if (a0_ < 0.0) throw DomainError("test function transform is unbounded at k = 0");
    cplx sum{};
    for (const auto& c : components_) sum += c.coeff * c.profile(0.0);
    return sum;
}

cplx TestFunction::value(double k_mag) const {
    const double omega = dispersion(k_mag, space_.s);
    cplx sum{};
    for (const auto& c : components_) sum += component_value(c, k_mag, omega);
    return sum;
}

TestFunction TestFunction::scaled(cplx alpha) const {
    TestFunction r = *this;
    for (auto& c : r.components_) c.coeff *= alpha;
    r.finalize();
    return r;
}

TestFunction TestFunction::time_evolved(double u) const {
    TestFunction r = *this;
    for (auto& c : r.components_) c.time_phase += u;
    return r;
}

TestFunction TestFunction::shifted(const std::vector<double>& x) const {
    TestFunction r = *this;
    for (auto& c : r.components_) {
        if (c.shift.empty()) c.shift.assign(space_.d, 0.0);
        if (x.size() != c.shift.size()) throw std::invalid_argument("shift must have d entries");
        for (std::size_t i = 0; i < x.size(); ++i) c.shift[i] += x[i];
    }
    r.finalize();
    return r;
}

TestFunction TestFunction::damped(double t) const {
    TestFunction r = *this;
    for (auto& c : r.components_) c.euclid_damp += std::abs(t);
    r.finalize();
    return r;
}

TestFunction TestFunction::operator+(const TestFunction& other) const {
    if (other.space_.d != space_.d || other.space_.s != space_.s)
        throw std::invalid_argument("adding test functions over different spaces");
    TestFunction r = *this;
    r.components_.insert(r.components_.end(), other.components_.begin(), other.components_.end());
    r.finalize();
    return r;
}

std::uint64_t TestFunction::content_hash() const {
    Fnv1a h;
    h.add(std::int64_t{space_.d}).add(space_.s);
    for (const auto& c : components_) {
        h.add(std::int64_t(c.profile.kind))
            .add(c.profile.amplitude)
            .add(c.profile.width)
            .add(c.profile.exponent)
            .add(c.profile.cutoff)
            .add(c.coeff.real())
            .add(c.coeff.imag())
            .add(c.time_phase)
            .add(c.euclid_damp);
        h.add(std::uint64_t(c.shift.size()));
        for (double x : c.shift) h.add(x);
    }
    return h.value();
}

std::vector<double> TestFunction::breakpoints() const {
    std::vector<double> out;
    for (const auto& c : components_)
        if (auto b = c.profile.breakpoint()) out.push_back(*b);
    return out;
}

bool TestFunction::compact_support(double* end) const {
    double e = 0.0;
    for (const auto& c : components_) {
        if (c.coeff == cplx{} || c.profile.is_zero()) continue;
        if (c.profile.kind != ProfileKind::power_bump) return false;
        e = std::max(e, c.profile.cutoff);
    }
    if (end) *end = e;
    return true;
}

SourceProfile::SourceProfile(RadialProfile rho, Space space) : rho_(rho), space_(space) {
    rho_.validate();
    if (space_.d < 1 || !(space_.s > 0.0)) throw std::invalid_argument("invalid source space");
    if (rho_.is_zero()) return;
    // m and omega m must pair absolutely with a unit gaussian.
    const double e0 = space_.d - 1 + rho_.exponent_at_zero() - 1.5 * space_.s;
    if (!(e0 > -1.0))
        throw DomainError("source: omega^-3/2 rho is not radially integrable at k = 0 (exponent " +
                          std::to_string(e0) + ")");
}

SourceProfile SourceProfile::none(Space space) {
    return SourceProfile(RadialProfile::gaussian(1.0, 0.0), space);
}

double SourceProfile::m_hat(double k) const {
    return std::pow(dispersion(k, space_.s), -1.5) * rho_(k);
}

double SourceProfile::omega_m_hat(double k) const {
    return std::pow(dispersion(k, space_.s), -0.5) * rho_(k);
}

std::uint64_t SourceProfile::content_hash() const {
    Fnv1a h;
    h.add(std::int64_t{space_.d})
        .add(space_.s)
        .add(std::int64_t(rho_.kind))
        .add(rho_.amplitude)
        .add(rho_.width)
        .add(rho_.exponent)
        .add(rho_.cutoff);
    return h.value();
}

cplx pair_density(const TestFunction& f, const TestFunction& g, double k) {
    const Space& sp = f.space();
    const double omega = dispersion(k, sp.s);
    const double radial = sphere_area(sp.d) * std::pow(k, sp.d - 1);
    if (!has_shift(f) && !has_shift(g)) {
        cplx a{}, b{};
        for (const auto& c : f.components()) a += component_value(c, k, omega);
        for (const auto& c : g.components()) b += component_value(c, k, omega);
        return std::conj(a) * b * radial;
    }
    cplx sum{};
    for (const auto& c : f.components()) {
        const cplx va = std::conj(component_value(c, k, omega));
        for (const auto& e : g.components()) {
            const double r = shift_distance(c.shift, e.shift);
            sum += va * component_value(e, k, omega) * sinc(k * r);
        }
    }
    return sum * radial;
}

cplx source_density(const TestFunction& f, const SourceProfile& src, double k) {
    const Space& sp = f.space();
    const double omega = dispersion(k, sp.s);
    const double radial = sphere_area(sp.d) * std::pow(k, sp.d - 1) * src.rho()(k);
    cplx sum{};
    for (const auto& c : f.components())
        sum += std::conj(component_value(c, k, omega)) * sinc(k * norm(c.shift));
    return sum * radial;
}

bool convergent(double exp_at_zero, double exp_at_infinity) {
    return exp_at_zero > -1.0 && exp_at_infinity < -1.0;
}

void require_convergent(const std::string& what, double exp_at_zero, double exp_at_infinity) {
    std::ostringstream os;
    if (!(exp_at_zero > -1.0)) {
        os << what << ": radial integrand ~ k^" << exp_at_zero << " at k -> 0 diverges";
        throw DomainError(os.str());
    }
    if (!(exp_at_infinity < -1.0)) {
        os << what << ": radial integrand ~ k^" << exp_at_infinity << " at k -> inf diverges";
        throw DomainError(os.str());
    }
}

std::vector<double> radial_breakpoints(const TestFunction& f, const TestFunction* g,
                                       const SourceProfile* src) {
    std::vector<double> pts{0.0};
    auto add = [&](const std::vector<double>& v) { pts.insert(pts.end(), v.begin(), v.end()); };
    add(f.breakpoints());
    if (g) add(g->breakpoints());
    if (src)
        if (auto b = src->rho().breakpoint()) pts.push_back(*b);

    double end = kInf;
    double e1 = 0.0, e2 = 0.0;
    // A zero function imposes no support limit of its own.
    const bool cf = !f.is_zero() && f.compact_support(&e1);
    const bool cg = g && !g->is_zero() && g->compact_support(&e2);
    if (cf) end = e1;
    if (cg) end = std::min(end, e2);
    if (src && src->rho().kind == ProfileKind::power_bump) end = std::min(end, src->rho().cutoff);
    if (std::isinf(end)) {
        // A finite split keeps the bulk of gaussian mass off the tail map.
        double scale = 1.0;
        for (const auto& c : f.components())
            if (c.profile.kind == ProfileKind::gaussian) scale = std::max(scale, c.profile.width);
        if (src && src->rho().kind == ProfileKind::gaussian) scale = std::max(scale, src->rho().width);
        pts.push_back(4.0 * scale);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    while (!pts.empty() && pts.back() >= end) pts.pop_back();
    pts.push_back(end);
    if (pts.size() < 2) pts = {0.0, end};
    return pts;
}

FormValue form_zero(const TestFunction& f, const TestFunction& g, double n0) {
    if (f.a0() < 0.0 || g.a0() < 0.0)
        throw DomainError("zero-mode form undefined: transform unbounded at k = 0");
    if (n0 < 0.0) throw std::invalid_argument("condensate density must be >= 0");
    const int d = f.space().d;
    const double pref = 2.0 * std::pow(2.0 * M_PI, d) * n0;
    if (&f == &g) return {pref * std::norm(f.at_origin()), 0.0};
    return {pref * std::conj(f.at_origin()) * g.at_origin(), 0.0};
}

FormValue form_nonzero(const TestFunction& f, const TestFunction& g, double beta, double mu,
                       const quad::Options& opt) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (mu > 0.0) throw std::invalid_argument("chemical potential must be <= 0");
    if (f.is_zero() || g.is_zero()) return {};
    const Space& sp = f.space();
    const double e0 = sp.d - 1 + f.a0() + g.a0() - (mu == 0.0 ? sp.s : 0.0);
    const double einf = sp.d - 1 + f.a_inf() + g.a_inf();
    require_convergent("thermal form", e0, einf);
    const double s = sp.s;
    return weighted_pair(
        f, g, [&](double k) { return 1.0 / std::tanh(0.5 * beta * (dispersion(k, s) - mu)); },
        opt);
}

FormValue inner_product(const TestFunction& f, const TestFunction& g, const quad::Options& opt) {
    if (f.is_zero() || g.is_zero()) return {};
    const Space& sp = f.space();
    require_convergent("inner product", sp.d - 1 + f.a0() + g.a0(),
                       sp.d - 1 + f.a_inf() + g.a_inf());
    return weighted_pair(f, g, [](double) { return 1.0; }, opt);
}

double symplectic(const TestFunction& f, const TestFunction& g, const quad::Options& opt) {
    if (&f == &g) return 0.0;
    return inner_product(f, g, opt).value.imag();
}

bool in_m_domain(const TestFunction& f, const SourceProfile& src, std::string* reason) {
    if (src.is_zero() || f.is_zero()) return true;
    const Space& sp = f.space();
    const double e0 = sp.d - 1 + f.a0() + src.rho().exponent_at_zero() - 1.5 * sp.s;
    const double einf = sp.d - 1 + f.a_inf() + src.rho().exponent_at_infinity() - 1.5 * sp.s;
    if (convergent(e0, einf)) return true;
    if (reason) {
        std::ostringstream os;
        if (!(e0 > -1.0))
            os << "m-pairing integrand ~ k^" << e0 << " at k -> 0";
        else
            os << "m-pairing integrand ~ k^" << einf << " at k -> inf";
        *reason = os.str();
    }
    return false;
}

MPairing m_pairing(const TestFunction& f, const SourceProfile& src, const quad::Options& opt) {
    MPairing r;
    if (!in_m_domain(f, src, &r.reason)) {
        r.in_domain = false;
        return r;
    }
    if (src.is_zero() || f.is_zero()) return r;
    const double s = f.space().s;
    double err = 0.0;
    r.value.value = quad::integrate_complex(
        [&](double k) {
            return k == 0.0 ? cplx{} : source_density(f, src, k) * std::pow(dispersion(k, s), -1.5);
        },
        radial_breakpoints(f, nullptr, &src), with_rel(opt), &err);
    r.value.abs_error = err;
    return r;
}

double form_bec(const TestFunction& f, double n0, double beta, const quad::Options& opt) {
    return form_zero(f, f, n0).value.real() + form_nonzero(f, f, beta, 0.0, opt).value.real();
}

bool in_form_domain(const TestFunction& f) {
    if (f.is_zero()) return true;
    const int d = f.space().d;
    const bool bounded = f.a0() >= 0.0 && f.a_inf() <= 0.0;
    const bool square = convergent(d - 1 + 2.0 * f.a0(), d - 1 + 2.0 * f.a_inf());
    return bounded && square;
}

bool in_thermal_domain(const TestFunction& f) {
    if (f.is_zero()) return true;
    const Space& sp = f.space();
    return convergent(sp.d - 1 + 2.0 * f.a0() - sp.s, sp.d - 1 + 2.0 * f.a_inf());
}

Direction classify_direction(const TestFunction& f, const SourceProfile& src, double n0) {
    if (!in_form_domain(f) || !in_thermal_domain(f)) return Direction::outside_D0;
    if (!in_m_domain(f, src)) return Direction::infrared_singular;
    if (form_zero(f, f, n0).value.real() > 0.0) return Direction::bec_generator;
    return Direction::physical;
}

} // namespace sbl
