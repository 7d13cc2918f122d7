#pragma once

#include <string>
#include <vector>

namespace kms::cli {

struct RunResult {
    int exit_code = 0;
    std::string out;  // the full output document (JSON or TSV)
};

/// Executes one command-line request (argv without the program name) and
/// returns its output instead of printing. Exit codes: 0 success, 1 domain
/// error (infeasible, divergent, violated precondition, bad input data),
/// 2 usage error.
RunResult run(const std::vector<std::string>& args);

}  // namespace kms::cli
