// resolvent_lab.hpp - resolvent expectations as Laplace transforms of the characteristic
// functional, their norm bounds, amplitude decay scans and ideal-generator reports

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sbl/equilibrium_state.hpp"

namespace sbl {

struct ResolventOptions {
    double abs_tol{1e-10};
    int max_intervals{2000};
    double tail_tol{1e-12}; // bound on the dropped half-line tail
};

struct ResolventValue {
    cplx value;
    double quad_error{0.0}; // adaptive quadrature estimate plus the truncated tail bound
    double mc_error{0.0};   // integral of the Laplace weight times the Monte Carlo SE
    double split{0.0};      // s*
    double s_end{0.0};
    double error() const { return quad_error + 3.0 * mc_error; }
};

// -i int_0^{sgn(lambda) inf} exp(-lambda s) charfun_scaled(f, s) ds.
ResolventValue resolvent_onepoint(const EquilibriumState& state, double lambda,
                                  const TestFunction& f, const ResolventOptions& opt = {});

// d/dlambda of the one-point function, evaluated as a Laplace integral with weight s.
ResolventValue resolvent_onepoint_derivative(const EquilibriumState& state, double lambda,
                                             const TestFunction& f,
                                             const ResolventOptions& opt = {});

// -int int exp(-lambda s - mu t) exp(-(i/2) s t sigma(f,g)) exp(-q_bec(sf + tg) / 4)
//   E~[exp(-i (s Z_f + t Z_g))] ds dt.
ResolventValue resolvent_twopoint(const EquilibriumState& state, double lambda,
                                  const TestFunction& f, double mu, const TestFunction& g,
                                  const ResolventOptions& opt = {});

struct BoundCheck {
    double modulus{0.0};
    double bound{0.0};
    double error{0.0};
    bool ok{false};
};
BoundCheck onepoint_bound(double lambda, const ResolventValue& r);
BoundCheck twopoint_bound(double lambda, double mu, const ResolventValue& r);

struct DecayRow {
    double t{0.0};
    ResolventValue r;
    double modulus{0.0};
};

struct DecayScan {
    double lambda{0.0};
    double q_bec{0.0};
    std::vector<DecayRow> rows;
    bool strictly_decreasing{false};
    bool below_threshold{false};
    bool asserted{false}; // q_bec above the floor, so the threshold applies
    bool ok() const { return !asserted || (strictly_decreasing && below_threshold); }
};

// |R(lambda, t f)| along increasing amplitudes; the final modulus must fall below
// threshold_ratio times the first one whenever q_bec(f) > q_floor.
DecayScan bec_decay_scan(const EquilibriumState& state, double lambda, const TestFunction& f,
                         const std::vector<double>& t_grid, double threshold_ratio = 0.1,
                         double q_floor = 1e-3, const ResolventOptions& opt = {});

struct IdealRow {
    std::string name;
    Direction direction{Direction::physical};
    std::string reason;
    double witness_modulus{0.0}; // |R(1, f)| for physical directions
    double witness_error{0.0};
    bool witness_ok{false};
    double decay_ratio{0.0}; // last/first modulus of the decay scan for BEC generators
    bool decay_ok{false};
};

struct IdealReport {
    std::vector<IdealRow> rows;
    std::vector<std::string> j_ir;     // infrared-singular generators
    std::vector<std::string> rejected; // outside the form domain
    std::vector<std::string> x_bec;    // condensate directions
    bool x_bec_empty() const { return x_bec.empty(); }
};

IdealReport ideal_report(const EquilibriumState& state,
                         const std::vector<std::pair<std::string, TestFunction>>& directions,
                         const std::vector<double>& decay_grid = {1.0, 2.0, 4.0, 8.0},
                         const ResolventOptions& opt = {});

void write_decay_csv(std::ostream& os, const DecayScan& scan);
void write_ideal_csv(std::ostream& os, const IdealReport& rep);

} // namespace sbl
