// cluster_nogo.hpp - time and space cluster scans, the moderateness verdict, the
// condensate no-go record and the classical-limit scan of the spin variable

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sbl/equilibrium_state.hpp"

namespace sbl {

enum class ClusterVerdict { moderate, cluster_with_zero_mode, neither, inconclusive };
const char* to_string(ClusterVerdict v);

struct ClusterRung {
    double at{0.0}; // u or |x|
    cplx lhs;       // two-point charfun
    double lhs_se{0.0};
    double cross_term{0.0}; // Re q_nonzero(f, Tg)
    double zero_mode_factor{1.0};
    cplx spin_ratio{1.0, 0.0}; // S(f + Tg) / (S(f) S(g))
    double ratio_se{0.0};
    cplx full_ratio{1.0, 0.0}; // lhs / product
};

struct ClusterReport {
    TransportMode mode{TransportMode::time};
    std::vector<double> grid;
    std::vector<ClusterRung> rungs;
    cplx product;
    double product_se{0.0};
    double zero_mode_factor{1.0}; // exp(Re q0(f, g) / 2)
    ClusterVerdict verdict{ClusterVerdict::inconclusive};
    double ess{0.0};
};

ClusterReport cluster_scan(const EquilibriumState& state, const TestFunction& f,
                           const TestFunction& g, TransportMode mode,
                           const std::vector<double>& grid);

// Geometric default grid 1, 2, 4, ..., 128.
std::vector<double> default_cluster_grid();

struct NogoRecord {
    bool contradiction{false}; // moderate verdict together with a condensate direction
    bool consistent{false};    // moderate and q0 vanishes on the tested set
    bool bec_set_empty{true};  // X_bec restricted to {f, g}
    double q0_f{0.0};
    double q0_g{0.0};
    double q0_fg{0.0}; // Re q0(f, g)
    double gap{0.0};   // exp(Re q0(f, g) / 2) - 1
    std::string message;
};

NogoRecord nogo_verdict(const EquilibriumState& state, const TestFunction& f,
                        const TestFunction& g, const ClusterReport& report, double tol = 1e-12);

enum class GpVerdict { classical, not_classical, inconclusive };
const char* to_string(GpVerdict v);

struct GpRow {
    std::size_t index{0};
    double s{0.0};
    cplx phi;
    double se{0.0};
    double mean_z{0.0};
    double gap{0.0}; // |phi(s) - exp(i s a)|
};

struct GpReport {
    double a{0.0}; // -E~[Re Z] on the last member of the sequence
    std::vector<GpRow> rows;
    GpVerdict verdict{GpVerdict::inconclusive};
};

GpReport gp_limit_scan(const EquilibriumState& state, const std::vector<TestFunction>& sequence,
                       const std::vector<double>& s_grid, double tol = 1e-3);

void write_cluster_csv(std::ostream& os, const ClusterReport& report);

} // namespace sbl
