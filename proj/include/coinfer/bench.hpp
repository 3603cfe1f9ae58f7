#pragma once

#include "coinfer/baselines.hpp"
#include "coinfer/scenario.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace coinfer {

struct TrialRecord {
    std::size_t trial = 0;
    Method method = Method::Jdob;
    std::size_t users = 0;
    std::string beta;
    double energy_per_user = 0.0;  // J
    double total_energy = 0.0;     // J
    double reduction_pct = 0.0;    // vs local computing
    double wall_time_s = 0.0;
    std::uint64_t seed = 0;
};

struct RunOptions {
    std::size_t workers = 1;
    OracleCaps caps;
};

/// Runs every method of the scenario on every trial through the grouping
/// DP and validates each schedule. Trials may run on several workers; the
/// output is identical for any worker count. Throws Validation with the
/// violation list if a method produces an invalid schedule.
std::vector<TrialRecord> run_trials(const Scenario& scenario, const RunOptions& options = {});

struct SummaryRow {
    Method method = Method::Jdob;
    std::size_t users = 0;
    std::string beta;
    std::size_t trials = 0;
    double mean_energy_per_user = 0.0;
    double stddev_energy_per_user = 0.0;
    double mean_reduction_pct = 0.0;
};

/// Per (method, M, beta) aggregates, in first-appearance order.
std::vector<SummaryRow> summarize(std::span<const TrialRecord> records);

/// Writes trials.csv, summary.csv, summary.md and timing.csv into
/// `out_dir` (created if missing). trials.csv carries no wall-clock data
/// so that it is reproducible byte for byte.
void emit_reports(std::span<const TrialRecord> records, const std::filesystem::path& out_dir);

std::vector<TrialRecord> read_trials_csv(const std::filesystem::path& path);

/// Nine significant digits, as used by every CSV column.
std::string format_number(double value);

}  // namespace coinfer
