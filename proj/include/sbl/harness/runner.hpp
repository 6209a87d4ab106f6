// runner.hpp - subcommand orchestration, summary files and exit-status mapping

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sbl::harness {

enum ExitCode : int {
    exit_ok = 0,
    exit_assertion = 1,
    exit_config = 2,
    exit_convergence = 3,
};

struct RunRequest {
    std::string subcommand;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> samples;
    std::optional<std::string> out_dir;
    std::optional<std::string> cache_dir;
    int workers{0}; // 0: SBL_WORKERS or the hardware concurrency
    bool quiet{false};
};

struct Assertion {
    std::string name;
    bool pass{false};
    std::string detail;
};

struct RunResult {
    int exit_code{exit_ok};
    std::string message;
    std::vector<Assertion> assertions;
    std::vector<std::string> files; // written outputs, CSVs first
};

const std::vector<std::string>& subcommands();

// Never throws; failures are reported through exit_code and message.
RunResult run(const RunRequest& request);

} // namespace sbl::harness
