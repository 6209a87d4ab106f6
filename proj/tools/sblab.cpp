// sblab - command-line front end for the spin-boson lab experiments

#include "sbl/harness/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    using namespace sbl::harness;
    CLI::App app{"Thermal spin-boson state experiments: Monte Carlo, kernel identities, resolvents"};
    app.require_subcommand(1, 1);

    RunRequest req;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::string out_dir, cache_dir;

    for (const std::string& name : subcommands()) {
        CLI::App* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", req.config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override numerics.seed");
        sub->add_option("--samples", samples, "override numerics.samples");
        sub->add_option("--out", out_dir, "override output.dir");
        sub->add_option("--cache-dir", cache_dir, "kernel-table cache directory");
        sub->add_option("--workers", req.workers, "worker threads (default: SBL_WORKERS or all cores)");
        sub->add_flag("--quiet", req.quiet, "suppress per-assertion lines");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    for (CLI::App* sub : app.get_subcommands()) {
        req.subcommand = sub->get_name();
        if (sub->count("--seed")) req.seed = seed;
        if (sub->count("--samples")) req.samples = samples;
        if (sub->count("--out")) req.out_dir = out_dir;
        if (sub->count("--cache-dir")) req.cache_dir = cache_dir;
    }
    const RunResult res = run(req);
    std::cout << "exit status " << res.exit_code;
    if (!res.files.empty()) std::cout << ", outputs in " << res.files.back().substr(0, res.files.back().rfind('/'));
    std::cout << '\n';
    return res.exit_code;
}
