#pragma once

// Named verification suites and the fixed acceptance list.  Every check
// evaluates a quantity along independent routes and reports the largest
// deviation against its tolerance; suites group the checks by subsystem.

#include <cstdint>
#include <string>
#include <vector>

#include "cfq/report.hpp"

namespace cfq::checks {

// Suites accepted by run_suite; "all" runs every check once.
const std::vector<std::string>& suite_names();
bool is_suite(const std::string& name);

// Runs the named suite.  n_seeds scales the randomized law checks and seed
// fixes their generator, so a run is reproducible from its arguments.
report::RunReport run_suite(const std::string& suite, int n_seeds = 50,
                            std::uint64_t seed = 12345);

struct CriterionResult {
    int index = 0;
    std::string name;
    bool pass = false;
    double deviation = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

// The fixed pass/fail gate: each criterion re-evaluates its quantities from
// scratch and must meet both its tolerance and its wall-time budget.
std::vector<CriterionResult> acceptance_criteria();

}  // namespace cfq::checks
