#include "sbl/harness/config.hpp"

#include "sbl/errors.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <boost/uuid/detail/sha1.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sbl::harness {

namespace pt = boost::property_tree;

namespace {

std::string trim(std::string s) {
    boost::algorithm::trim(s);
    return s;
}

double to_double(const std::string& field, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) return x;
    } catch (const std::exception&) {
    }
    throw ConfigError(field + ": expected a number, got '" + v + "'");
}

long long to_integer(const std::string& field, const std::string& v) {
    const double x = to_double(field, v);
    if (x != std::floor(x) || std::abs(x) > 9.0e15)
        throw ConfigError(field + ": expected an integer, got '" + v + "'");
    return static_cast<long long>(x);
}

bool to_bool(const std::string& field, std::string v) {
    boost::algorithm::to_lower(v);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(field + ": expected true/false, got '" + v + "'");
}

// Splits at `sep` outside parentheses.
std::vector<std::string> split_top(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == sep && depth == 0) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

struct Call {
    std::string kind;
    std::map<std::string, double> args;
};

Call parse_call(const std::string& text, const std::string& field) {
    Call c;
    const auto open = text.find('(');
    if (open == std::string::npos) {
        c.kind = trim(text);
        return c;
    }
    if (text.back() != ')') throw ConfigError(field + ": missing ')' in '" + text + "'");
    c.kind = trim(text.substr(0, open));
    const std::string inner = text.substr(open + 1, text.size() - open - 2);
    if (trim(inner).empty()) return c;
    for (const std::string& kv : split_top(inner, ',')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError(field + ": expected key=value inside '" + text + "'");
        const std::string key = trim(kv.substr(0, eq));
        c.args[key] = to_double(field + "." + key, trim(kv.substr(eq + 1)));
    }
    return c;
}

double take(Call& c, const std::string& key, double fallback) {
    auto it = c.args.find(key);
    if (it == c.args.end()) return fallback;
    const double v = it->second;
    c.args.erase(it);
    return v;
}

RadialProfile profile_from(Call& c, const std::string& field) {
    const double amp = take(c, "amp", 1.0);
    RadialProfile p;
    try {
        if (c.kind == "gaussian") {
            p = RadialProfile::gaussian(take(c, "width", 1.0), amp);
        } else if (c.kind == "power_bump") {
            const double e = take(c, "exponent", 0.0);
            p = RadialProfile::power_bump(e, take(c, "cutoff", 1.0), amp);
        } else if (c.kind == "point_flat" || c.kind == "point_source_flat") {
            p = RadialProfile::point_source_flat(amp);
        } else if (c.kind == "power_tail") {
            p = RadialProfile::power_tail(take(c, "exponent", -2.0), amp);
        } else {
            throw ConfigError(field + ": unknown profile kind '" + c.kind + "'");
        }
        p.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(field + ": " + e.what());
    }
    return p;
}

void reject_leftovers(const Call& c, const std::string& field) {
    if (!c.args.empty())
        throw ConfigError(field + ": unknown parameter '" + c.args.begin()->first + "'");
}

} // namespace

RadialProfile parse_profile(const std::string& text) {
    Call c = parse_call(trim(text), "profile");
    RadialProfile p = profile_from(c, "profile");
    reject_leftovers(c, "profile");
    return p;
}

TestFunction parse_test_function(const std::string& text, Space space) {
    const std::string s = trim(text);
    if (s == "zero" || s == "0") return TestFunction::zero(space);
    std::vector<Component> comps;
    for (const std::string& part : split_top(s, '+')) {
        Call c = parse_call(part, "function");
        Component comp;
        comp.coeff = {take(c, "re", 1.0), take(c, "im", 0.0)};
        comp.time_phase = take(c, "u", 0.0);
        comp.euclid_damp = take(c, "damp", 0.0);
        const double x1 = take(c, "x1", 0.0), x2 = take(c, "x2", 0.0), x3 = take(c, "x3", 0.0);
        if (x1 != 0.0 || x2 != 0.0 || x3 != 0.0) {
            if (space.d != 3) throw ConfigError("functions: spatial shifts require physical.d = 3");
            comp.shift = {x1, x2, x3};
        }
        comp.profile = profile_from(c, "function");
        reject_leftovers(c, "function");
        comps.push_back(comp);
    }
    try {
        return TestFunction(space, comps);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("functions: ") + e.what());
    }
}

SourceProfile RunConfig::source() const {
    const std::string s = trim(physical.source);
    if (s.empty() || s == "none" || s == "zero") return SourceProfile::none(space());
    try {
        return SourceProfile(parse_profile(s), space());
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("physical.source: ") + e.what());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("physical.source: ") + e.what());
    }
}

StateConfig RunConfig::state_config() const {
    StateConfig c;
    c.beta = physical.beta;
    c.eps = physical.eps;
    c.space = space();
    c.mu = physical.mu;
    c.n0 = physical.n0;
    c.src = source();
    c.quad.abs_tol = numerics.abs_tol;
    c.quad.rel_tol = numerics.rel_tol;
    c.kernel_grid = numerics.grid_intervals;
    c.weyl_phase = flag("weyl_phase", false);
    return c;
}

EnsembleOptions RunConfig::ensemble_options(int workers) const {
    EnsembleOptions o;
    o.samples = numerics.samples;
    o.seed = numerics.seed;
    o.chunk_size = numerics.chunk_size;
    o.workers = workers;
    o.mode = numerics.frozen ? EnsembleMode::frozen : EnsembleMode::sampled;
    return o;
}

std::string RunConfig::str(const std::string& key, const std::string& fallback) const {
    auto it = experiment_.find(key);
    return it == experiment_.end() ? fallback : it->second;
}

double RunConfig::num(const std::string& key, double fallback) const {
    auto it = experiment_.find(key);
    return it == experiment_.end() ? fallback : to_double("experiment." + key, it->second);
}

bool RunConfig::flag(const std::string& key, bool fallback) const {
    auto it = experiment_.find(key);
    return it == experiment_.end() ? fallback : to_bool("experiment." + key, it->second);
}

std::vector<double> RunConfig::list(const std::string& key,
                                    const std::vector<double>& fallback) const {
    auto it = experiment_.find(key);
    if (it == experiment_.end()) return fallback;
    std::vector<double> out;
    for (const std::string& p : split_top(it->second, ','))
        if (!p.empty()) out.push_back(to_double("experiment." + key, p));
    return out;
}

std::vector<std::string> RunConfig::names(const std::string& key,
                                          const std::vector<std::string>& fallback) const {
    auto it = experiment_.find(key);
    if (it == experiment_.end()) return fallback;
    std::vector<std::string> out;
    for (const std::string& p : split_top(it->second, ','))
        if (!p.empty()) out.push_back(p);
    return out;
}

const TestFunction& RunConfig::function(const std::string& name) const {
    auto it = functions_.find(name);
    if (it == functions_.end()) throw ConfigError("functions: no test function named '" + name + "'");
    return it->second;
}

void RunConfig::validate(bool monte_carlo) const {
    auto fail = [](const std::string& field, const std::string& what, double v) {
        std::ostringstream os;
        os << field << " " << what << " (got " << v << ")";
        throw ConfigError(os.str());
    };
    if (!(physical.beta > 0.0) || !std::isfinite(physical.beta)) fail("physical.beta", "must be > 0", physical.beta);
    if (!(physical.eps >= 0.0) || !std::isfinite(physical.eps)) fail("physical.eps", "must be >= 0", physical.eps);
    if (physical.eps * physical.beta > 500.0) fail("physical.eps", "times beta must be <= 500", physical.eps);
    if (physical.d < 1 || physical.d > 10) fail("physical.d", "must be in 1..10", physical.d);
    if (!(physical.s > 0.0)) fail("physical.s", "must be > 0", physical.s);
    if (physical.mu > 0.0) fail("physical.mu", "must be <= 0", physical.mu);
    if (!(physical.n0 >= 0.0)) fail("physical.n0", "must be >= 0", physical.n0);
    if (monte_carlo && numerics.samples < 1000)
        fail("numerics.samples", "must be >= 1000 for Monte Carlo subcommands", double(numerics.samples));
    if (numerics.chunk_size < 1) fail("numerics.chunk_size", "must be >= 1", 0);
    if (!(numerics.abs_tol > 0.0)) fail("numerics.abs_tol", "must be > 0", numerics.abs_tol);
    if (numerics.rel_tol < 0.0) fail("numerics.rel_tol", "must be >= 0", numerics.rel_tol);
    if (numerics.grid_intervals < 16) fail("numerics.grid_intervals", "must be >= 16", numerics.grid_intervals);
    if (numerics.variance_cells < 2 || numerics.variance_cells % 2)
        fail("numerics.variance_cells", "must be even and >= 2", numerics.variance_cells);
    if (numerics.batches < 2) fail("numerics.batches", "must be >= 2", numerics.batches);
    source();
}

RunConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("malformed config: ") + e.message() + " at line " +
                          std::to_string(e.line()));
    }
    RunConfig cfg;
    cfg.text = text;
    static const std::vector<std::string> sections{"physical", "numerics", "experiment",
                                                   "functions", "output"};
    for (const auto& [section, body] : tree) {
        if (std::find(sections.begin(), sections.end(), section) == sections.end())
            throw ConfigError("unknown config section [" + section + "]");
        if (!body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
    }
    auto get = [&](const std::string& section, const std::string& key) -> std::optional<std::string> {
        auto child = tree.get_child_optional(pt::ptree::path_type(section + "." + key, '.'));
        if (!child) return std::nullopt;
        return trim(child->data());
    };
    auto check_keys = [&](const std::string& section, std::vector<std::string> allowed) {
        auto child = tree.get_child_optional(section);
        if (!child) return;
        for (const auto& kv : *child)
            if (std::find(allowed.begin(), allowed.end(), kv.first) == allowed.end())
                throw ConfigError("unknown key " + section + "." + kv.first);
    };
    check_keys("physical", {"beta", "eps", "d", "s", "mu", "n0", "source"});
    check_keys("numerics", {"samples", "seed", "chunk_size", "abs_tol", "rel_tol", "grid_intervals",
                            "variance_cells", "batches", "frozen"});
    check_keys("output", {"dir", "csv", "cache", "cache_dir"});

    PhysicalBlock& p = cfg.physical;
    if (auto v = get("physical", "beta")) p.beta = to_double("physical.beta", *v);
    if (auto v = get("physical", "eps")) p.eps = to_double("physical.eps", *v);
    if (auto v = get("physical", "d")) p.d = static_cast<int>(to_integer("physical.d", *v));
    if (auto v = get("physical", "s")) p.s = to_double("physical.s", *v);
    if (auto v = get("physical", "mu")) p.mu = to_double("physical.mu", *v);
    if (auto v = get("physical", "n0")) p.n0 = to_double("physical.n0", *v);
    if (auto v = get("physical", "source")) p.source = *v;

    NumericsBlock& n = cfg.numerics;
    if (auto v = get("numerics", "samples")) {
        const long long x = to_integer("numerics.samples", *v);
        if (x < 1) throw ConfigError("numerics.samples must be >= 1 (got " + *v + ")");
        n.samples = static_cast<std::size_t>(x);
    }
    if (auto v = get("numerics", "seed")) {
        const long long x = to_integer("numerics.seed", *v);
        if (x < 0) throw ConfigError("numerics.seed must be >= 0 (got " + *v + ")");
        n.seed = static_cast<std::uint64_t>(x);
    }
    if (auto v = get("numerics", "chunk_size")) {
        const long long x = to_integer("numerics.chunk_size", *v);
        if (x < 1) throw ConfigError("numerics.chunk_size must be >= 1 (got " + *v + ")");
        n.chunk_size = static_cast<std::size_t>(x);
    }
    if (auto v = get("numerics", "abs_tol")) n.abs_tol = to_double("numerics.abs_tol", *v);
    if (auto v = get("numerics", "rel_tol")) n.rel_tol = to_double("numerics.rel_tol", *v);
    if (auto v = get("numerics", "grid_intervals"))
        n.grid_intervals = static_cast<int>(to_integer("numerics.grid_intervals", *v));
    if (auto v = get("numerics", "variance_cells"))
        n.variance_cells = static_cast<int>(to_integer("numerics.variance_cells", *v));
    if (auto v = get("numerics", "batches"))
        n.batches = static_cast<int>(to_integer("numerics.batches", *v));
    if (auto v = get("numerics", "frozen")) n.frozen = to_bool("numerics.frozen", *v);

    OutputBlock& o = cfg.output;
    if (auto v = get("output", "dir")) o.dir = *v;
    if (auto v = get("output", "csv")) o.csv = to_bool("output.csv", *v);
    if (auto v = get("output", "cache")) o.cache = to_bool("output.cache", *v);
    if (auto v = get("output", "cache_dir")) o.cache_dir = *v;

    if (auto ex = tree.get_child_optional("experiment"))
        for (const auto& kv : *ex) cfg.experiment_[kv.first] = trim(kv.second.data());

    if (p.d < 1) throw ConfigError("physical.d must be >= 1 (got " + std::to_string(p.d) + ")");
    if (auto fs = tree.get_child_optional("functions")) {
        for (const auto& kv : *fs) {
            try {
                cfg.functions_[kv.first] = parse_test_function(kv.second.data(), cfg.space());
            } catch (const ConfigError& e) {
                throw ConfigError("functions." + kv.first + ": " + e.what());
            }
            cfg.order_.push_back(kv.first);
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string git_blob_sha1(const std::string& content) {
    boost::uuids::detail::sha1 h;
    const std::string header = "blob " + std::to_string(content.size());
    h.process_bytes(header.data(), header.size() + 1); // includes the terminating NUL
    h.process_bytes(content.data(), content.size());
    boost::uuids::detail::sha1::digest_type digest;
    h.get_digest(digest);
    char buf[41];
    for (int i = 0; i < 5; ++i) std::snprintf(buf + 8 * i, 9, "%08x", digest[i]);
    return std::string(buf, 40);
}

} // namespace sbl::harness
