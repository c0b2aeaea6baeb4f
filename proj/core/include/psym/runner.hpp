#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "psym/dsl.hpp"

namespace psym {

inline constexpr const char* kEngineVersion = "0.1.0";

struct RunOptions {
    std::optional<int> max_order;
    bool strong = false;
    std::optional<double> tol;
    std::optional<std::uint64_t> seed;
};

struct SideRecord {
    std::string kind;
    std::string expr;
    int step = 0;
};

struct StepRecord {
    int r = 0;
    int component = 0;
    std::string raw, restricted, reduced, verdict;
    std::optional<std::string> pivot;
    std::vector<SideRecord> side_conditions;
};

struct VerdictRecord {
    std::string name;
    std::string verdict;
    double value = 0.0;
    std::map<std::string, double> witness;
    std::string residual;
};

struct ExpectationRecord {
    std::string expect;
    bool passed = false;
    std::string detail;
};

struct TaskResult {
    std::string task;
    std::vector<std::string> targets;
    std::string status;            // chain status, aggregate verdict, or "error"
    bool definite = true;          // reached a definite verdict
    std::optional<int> order;
    std::optional<int> inconsistent_step;
    std::string reason;
    std::vector<StepRecord> chain;
    std::vector<SideRecord> side_conditions;
    std::vector<VerdictRecord> verdicts;
    std::vector<std::pair<std::string, std::string>> expressions;  // named printed outputs
    std::vector<std::pair<std::string, double>> metrics;           // numeric diagnostics
    std::vector<std::string> notes;
    std::vector<std::string> assumptions;
    std::vector<ExpectationRecord> expectations;
    std::string error;
};

struct ProblemReport {
    std::string problem;
    std::vector<TaskResult> results;
    std::string error;  // I/O or parse failure
};

/// Executes the tasks of a problem in declaration order.
ProblemReport run_problem(const ProblemSpec& spec, const std::string& name, const RunOptions& opts = {});

/// Reads and parses a file, then runs it. Failures are recorded in the
/// report instead of being thrown.
ProblemReport run_file(const std::string& path, const RunOptions& opts = {});

/// JSON with sorted keys for one report; an array for several.
std::string emit_report(const std::vector<ProblemReport>& reports);
std::string emit_report(const ProblemReport& report);

/// Human-readable rendering of the same content.
std::string emit_text(const std::vector<ProblemReport>& reports);

/// 0 when every task is definite and meets its expectations, 1 on a
/// mismatch, 2 on errors.
int exit_code(const std::vector<ProblemReport>& reports);

}  // namespace psym
