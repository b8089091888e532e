#pragma once

#include "otss/config.hpp"

#include <string>

namespace otss::cli {

struct RunOptions {
    std::string config_path;
    std::string out_root = "results";
    int jobs = 1;
    int seed_offset = 0;
    double kappa_scale = 0.0; // theory only: > 0 overrides the config value
};

// Each runner returns a process exit code: 0 on success, nonzero when a
// hard invariant (simplex gate, regret transfer, EM monotonicity) fails or
// a theory check does not pass.
int run_panel(const RunOptions& opt);
int run_sweep(const RunOptions& opt);
int run_theory(const RunOptions& opt);
int run_runtime(const RunOptions& opt);

} // namespace otss::cli
