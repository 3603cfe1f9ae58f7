#pragma once

#include "coinfer/costs.hpp"
#include "coinfer/jdob.hpp"
#include "coinfer/model.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace coinfer {

/// A concrete problem: one model, one device population, one edge server.
struct Instance {
    std::shared_ptr<const ModelProfile> model;
    std::vector<DeviceParams> devices;
    EdgeParams edge;
};

/// Solves one group given the time its GPU becomes free. Returns the plans
/// not dominated in (energy, t_free_next), lowest energy first.
using InnerSolver = std::function<std::vector<BatchPlan>(const Group& group, double t_free)>;

struct GpuWindow {
    double start = 0.0;
    double end = 0.0;
};

struct ScheduledGroup {
    std::vector<UserId> members;  ///< ascending
    BatchPlan plan;
    std::optional<GpuWindow> window;  ///< empty when the group runs all-local
};

/// Sequence of batches in ascending earliest-deadline order; the GPU time
/// chains from one group to the next.
struct Schedule {
    std::vector<ScheduledGroup> groups;
    double total_energy = 0.0;
};

/// All-local plan for a group (every user at its minimum deadline-meeting
/// frequency); GPU availability passes through unchanged.
BatchPlan local_plan(const ModelProfile& model, const EdgeParams& edge, const Group& group, double t_free);

/// Interval-partition DP over deadline-sorted users. Each cell keeps every
/// (energy, t_free) pair for a prefix that no other pair beats in both; a
/// transition forms one contiguous group solved by `inner`, or all-local
/// when the group's earliest deadline precedes the chained GPU
/// availability. The answer is the lowest-energy pair of the last cell,
/// ties going to the earlier GPU release.
Schedule group_users_dp(const Instance& instance, const InnerSolver& inner);

/// Independent re-verification of a schedule. Never throws on bad
/// schedules; an empty result means the schedule is valid.
std::vector<Violation> validate_schedule(const Instance& instance, const Schedule& schedule);

nlohmann::json schedule_to_json(const Schedule& schedule);
Schedule schedule_from_json(const nlohmann::json& doc);

}  // namespace coinfer
