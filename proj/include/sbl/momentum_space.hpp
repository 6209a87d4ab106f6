// momentum_space.hpp - radial test functions, the coupling source, and the static
// sesquilinear forms built from them

#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sbl/quadrature.hpp"

namespace sbl {

using cplx = std::complex<double>;

struct Space {
    int d{3};      // spatial dimension
    double s{1.0}; // dispersion exponent, omega(k) = |k|^s
};

double dispersion(double k_mag, double s);

// Surface area of the unit sphere in R^d.
double sphere_area(int d);

enum class ProfileKind { gaussian, power_bump, point_source_flat, power_tail };

const char* to_string(ProfileKind kind);

struct RadialProfile {
    ProfileKind kind{ProfileKind::gaussian};
    double amplitude{1.0};
    double width{1.0};    // gaussian: A exp(-k^2 / (2 width^2))
    double exponent{0.0}; // power_bump: A k^exponent 1{k < cutoff};  power_tail: A (1+k^2)^(exponent/2)
    double cutoff{1.0};

    static RadialProfile gaussian(double width, double amplitude = 1.0);
    static RadialProfile power_bump(double exponent_at_zero, double cutoff, double amplitude = 1.0);
    static RadialProfile point_source_flat(double amplitude = 1.0);
    static RadialProfile power_tail(double exponent_at_infinity, double amplitude = 1.0);

    double operator()(double k) const;
    double exponent_at_zero() const;
    double exponent_at_infinity() const; // -inf for rapidly decaying profiles
    std::optional<double> breakpoint() const;
    bool is_zero() const { return amplitude == 0.0; }
    void validate() const; // throws std::invalid_argument
};

struct Component {
    RadialProfile profile;
    cplx coeff{1.0, 0.0};
    double time_phase{0.0};       // u in exp(i u omega)
    std::vector<double> shift;    // x in exp(-i k.x); empty means the origin
    double euclid_damp{0.0};      // t >= 0 in exp(-t omega / 2)
};

class TestFunction {
public:
    TestFunction() = default;
    TestFunction(Space space, std::vector<Component> components);

    static TestFunction zero(Space space);
    static TestFunction single(Space space, RadialProfile profile, cplx coeff = 1.0);

    const Space& space() const { return space_; }
    const std::vector<Component>& components() const { return components_; }
    double a0() const { return a0_; }
    double a_inf() const { return a_inf_; }
    bool is_zero() const;

    // Value of the Fourier transform at k = 0 (requires a0 >= 0).
    cplx at_origin() const;
    cplx value(double k_mag) const; // f^ along the direction orthogonal to all shifts

    TestFunction scaled(cplx alpha) const;
    TestFunction time_evolved(double u) const;
    TestFunction shifted(const std::vector<double>& x) const;
    TestFunction damped(double t) const;
    TestFunction operator+(const TestFunction& other) const;

    std::uint64_t content_hash() const;
    std::vector<double> breakpoints() const;
    bool compact_support(double* end = nullptr) const;

private:
    void finalize();

    Space space_{};
    std::vector<Component> components_;
    double a0_{0.0};
    double a_inf_{0.0};
};

class SourceProfile {
public:
    SourceProfile() = default;
    SourceProfile(RadialProfile rho, Space space);

    static SourceProfile none(Space space);

    const RadialProfile& rho() const { return rho_; }
    const Space& space() const { return space_; }
    bool is_zero() const { return rho_.is_zero(); }
    double m_hat(double k) const;       // omega^-3/2 rho
    double omega_m_hat(double k) const; // omega^-1/2 rho
    std::uint64_t content_hash() const;

private:
    RadialProfile rho_{RadialProfile::gaussian(1.0, 0.0)};
    Space space_{};
};

struct FormValue {
    cplx value{0.0, 0.0};
    double abs_error{0.0};
};

struct MPairing {
    bool in_domain{true};
    std::string reason; // why the pairing diverges, empty when in_domain
    FormValue value;
};

enum class Direction { physical, infrared_singular, bec_generator, outside_D0 };

const char* to_string(Direction d);

// Radial densities: the angular integral of the pair of transforms times k^(d-1).
// A weight w(k) turns these into the forms: integral over k of density * w.
cplx pair_density(const TestFunction& f, const TestFunction& g, double k);
cplx source_density(const TestFunction& f, const SourceProfile& src, double k);

// Convergence test of a radial integral with total power-law exponents at both ends.
// Throws DomainError naming the offending exponent.
void require_convergent(const std::string& what, double exp_at_zero, double exp_at_infinity);
bool convergent(double exp_at_zero, double exp_at_infinity);

// Breakpoints {0, cutoffs..., end} shared by f, g and optionally a source.
std::vector<double> radial_breakpoints(const TestFunction& f, const TestFunction* g,
                                       const SourceProfile* src);

FormValue form_zero(const TestFunction& f, const TestFunction& g, double n0);
FormValue form_nonzero(const TestFunction& f, const TestFunction& g, double beta, double mu,
                       const quad::Options& opt = {});
FormValue inner_product(const TestFunction& f, const TestFunction& g,
                        const quad::Options& opt = {});
double symplectic(const TestFunction& f, const TestFunction& g, const quad::Options& opt = {});
MPairing m_pairing(const TestFunction& f, const SourceProfile& src, const quad::Options& opt = {});

// q_bec(f) = q0(f,f) + q_nonzero(f,f) at mu = 0.
double form_bec(const TestFunction& f, double n0, double beta, const quad::Options& opt = {});

bool in_form_domain(const TestFunction& f);                       // L^1 cap L^2 proxy
bool in_thermal_domain(const TestFunction& f);                    // q_nonzero(f,f) finite at mu = 0
bool in_m_domain(const TestFunction& f, const SourceProfile& src, std::string* reason = nullptr);

Direction classify_direction(const TestFunction& f, const SourceProfile& src, double n0);

} // namespace sbl
