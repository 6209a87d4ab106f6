// config.hpp - INI run configuration: physical, numerics, experiment and output blocks

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sbl/equilibrium_state.hpp"

namespace sbl::harness {

struct PhysicalBlock {
    double beta{1.0};
    double eps{0.0};
    int d{3};
    double s{1.0};
    double mu{0.0};
    double n0{0.0};
    std::string source{"none"};
};

struct NumericsBlock {
    std::size_t samples{200000};
    std::uint64_t seed{1};
    std::size_t chunk_size{4096};
    double abs_tol{1e-10};
    double rel_tol{0.0};
    int grid_intervals{2048};
    int variance_cells{64};
    int batches{20};
    bool frozen{false};
};

struct OutputBlock {
    std::string dir{"sblab_out"};
    bool csv{true};
    bool cache{true};
    std::string cache_dir{".sbl_cache"};
};

class RunConfig {
public:
    PhysicalBlock physical;
    NumericsBlock numerics;
    OutputBlock output;
    std::string text; // raw file contents, hashed into the run summary

    Space space() const { return {physical.d, physical.s}; }
    SourceProfile source() const;
    StateConfig state_config() const;
    EnsembleOptions ensemble_options(int workers) const;

    bool has(const std::string& key) const { return experiment_.count(key) != 0; }
    std::string str(const std::string& key, const std::string& fallback) const;
    double num(const std::string& key, double fallback) const;
    bool flag(const std::string& key, bool fallback) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const;
    std::vector<std::string> names(const std::string& key,
                                   const std::vector<std::string>& fallback) const;

    const TestFunction& function(const std::string& name) const;
    const std::vector<std::string>& function_names() const { return order_; }

    // Checks the RunConfig invariants; throws ConfigError naming the field.
    void validate(bool monte_carlo) const;

private:
    friend RunConfig parse_config(const std::string& text);
    std::map<std::string, std::string> experiment_;
    std::map<std::string, TestFunction> functions_;
    std::vector<std::string> order_;
};

// Throws ConfigError with the offending section.key in the message.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// "gaussian(width=1, amp=1) + power_bump(exponent=0.5, cutoff=2, re=0, im=1)".
TestFunction parse_test_function(const std::string& text, Space space);
RadialProfile parse_profile(const std::string& text);

// SHA-1 of "blob <size>\0<content>", as printed by git hash-object.
std::string git_blob_sha1(const std::string& content);

} // namespace sbl::harness
