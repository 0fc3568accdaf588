#pragma once

#include <string>
#include <vector>

namespace magkit {

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
};

// Experiment runner behind `magkit run`. Returns the process exit code:
// 0 ok, 1 validation error, 2 numeric failure, 3 invariant failure.
int run_config(const std::string& config_path, const std::string& out_override);

// `magkit check --suite <name>`; prints one line per check.
int run_check(const std::string& suite);

// `magkit plot --run <dir> --what <kind>`.
int run_plot(const std::string& run_dir, const std::string& what);

std::vector<CheckResult> identity_suite(const std::string& suite);

}  // namespace magkit
