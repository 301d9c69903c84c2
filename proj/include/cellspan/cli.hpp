#ifndef CELLSPAN_CLI_HPP
#define CELLSPAN_CLI_HPP

#include "cellspan/config.hpp"

#include <string>
#include <vector>

namespace cellspan {

/// Exit codes shared by every subcommand.
enum ExitCode : int { exit_ok = 0, exit_invariant_failure = 1, exit_solver_failure = 2 };

struct RunOptions {
    std::string config_path;
    std::string out_dir;          // overrides [output] dir when nonempty
    bool tau_continuation = false;
    bool verification_mode = false; // forces verification mode on
};

struct SweepOptions {
    std::string config_path;
    std::string out_dir;
    std::string axis = "c";       // c | m | alpha0 | q | N | d
    std::vector<double> values;
    int jobs = 1;
};

struct VerifyOptions {
    std::string case_name = "all"; // all | mms-spatial | mms-temporal | mms-constant |
                                   // equilibrium | uniqueness | invariants
    std::string out_dir = "out";
    std::string config_path;       // optional; used by the invariants case
};

int cmd_run(const RunOptions& options);
int cmd_lifespan(const std::string& config_path, const std::string& out_dir_override);
int cmd_sweep(const SweepOptions& options);
int cmd_verify(const VerifyOptions& options);

/// "%.17g" formatting used by every CSV/report writer.
std::string fmt17(double x);

} // namespace cellspan

#endif
