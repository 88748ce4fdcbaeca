#pragma once

// The verification suite: twelve criteria, each a numeric check with a
// tolerance and, for most, a wall-clock budget.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gwlab {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    /// Runtime budget in seconds; 0 means none.
    double limit = 0.0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 7;
    /// Monte Carlo worker threads (0 = all hardware threads).
    int workers = 0;
    /// Criterion ids to run; empty runs all of them.
    std::vector<int> only;
};

constexpr int acceptance_criteria = 12;

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts,
                                            const std::function<void(const CriterionResult&)>& on_result = {});

/// "PASS  3  survival asymptote  (0.02 s, limit 5 s)  detail"
std::string summary_line(const CriterionResult& r);

}  // namespace gwlab
