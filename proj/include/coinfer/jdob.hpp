#pragma once

#include "coinfer/costs.hpp"
#include "coinfer/model.hpp"
#include "coinfer/pareto.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace coinfer {

/// One batch decision for a group: identical partition point, offloading
/// set (batched on the GPU), local set, and all frequencies.
struct BatchPlan {
    std::size_t n_tilde = 0;
    std::vector<UserId> members;      ///< ascending
    std::vector<UserId> offload_set;  ///< ascending
    std::vector<UserId> local_set;    ///< ascending
    double fe = 0.0;
    std::vector<double> f_star;  ///< aligned with members
    /// l_o, the tightest deadline among offloaders; empty when nobody offloads.
    std::optional<double> batch_deadline;
    std::size_t batch_size = 0;
    double energy = 0.0;
    double t_free_start = 0.0;
    double batch_start = 0.0;
    double t_free_next = 0.0;

    bool offloads() const noexcept { return batch_size > 0; }
};

/// Builds the plan record for an evaluated configuration.
BatchPlan make_plan(const Group& group, std::size_t n_tilde, std::span<const char> offload_mask, double fe,
                    double t_free, const ConfigEval& eval);

/// Plans not dominated in (energy, t_free_next), lowest energy first.
using PlanFrontier = ParetoFront<BatchPlan, &BatchPlan::energy, &BatchPlan::t_free_next>;

inline constexpr double kNeverOffloads = std::numeric_limits<double>::infinity();

/// Users sorted by descending minimum latency cost and the edge frequency
/// each position needs to stay in the greedy batch.
struct ThresholdList {
    std::vector<UserId> order;
    std::vector<double> gamma;       ///< aligned with order
    std::vector<double> thresholds;  ///< aligned with order; kNeverOffloads if unreachable
    std::optional<std::size_t> first_offloadable;
};

ThresholdList edge_freq_thresholds(const ModelProfile& model, const Group& group, std::size_t n_tilde);

enum class SolveMode { Full, NoEdgeDvfs, Binary };

std::string_view to_string(SolveMode mode) noexcept;

/// Descending edge-frequency grid fe_max, fe_max - rho, ... down to the
/// smallest point >= fe_min. NoEdgeDvfs yields {fe_max} only.
std::vector<double> edge_grid(const EdgeParams& edge, SolveMode mode = SolveMode::Full);

struct SweepResult {
    double energy = std::numeric_limits<double>::infinity();
    double t_free_next = 0.0;
    std::optional<BatchPlan> plan;
    std::size_t evaluations = 0;
};

/// Sweeps the grid from the top, shrinking the greedy batch as the
/// frequency falls below each threshold, and keeps the cheapest feasible
/// configuration. At n_tilde = N, or when nobody can ever offload, this is
/// a single all-local evaluation. Every feasible evaluated configuration is
/// also offered to `frontier` when one is given.
SweepResult sweep_edge_frequency(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                                 const ThresholdList& thresholds, std::size_t n_tilde, double t_free,
                                 std::span<const double> grid, PlanFrontier* frontier = nullptr);

/// Minimum-energy batch plan for a group whose GPU becomes free at t_free.
/// Requires min deadline >= t_free (throws InfeasibleGroup otherwise).
BatchPlan jdob_solve(const ModelProfile& model, const EdgeParams& edge, const Group& group, double t_free,
                     SolveMode mode = SolveMode::Full);

/// Variant taking an explicit grid; used for grid-refinement studies.
BatchPlan jdob_solve(const ModelProfile& model, const EdgeParams& edge, const Group& group, double t_free,
                     SolveMode mode, std::span<const double> grid);

/// Every configuration the J-DOB search of one group evaluates, computed
/// once. Energies, device frequencies and arrivals do not depend on GPU
/// availability, so frontier(t_free) only re-applies the GPU-window checks
/// and returns exactly what jdob_frontier would. Keeps a view of the
/// group's device array, which must outlive the set.
class CandidateSet {
public:
    CandidateSet(const ModelProfile& model, const EdgeParams& edge, const Group& group, SolveMode mode);

    std::span<const DeviceParams> devices() const noexcept { return devices_; }
    std::span<const UserId> members() const noexcept { return members_; }
    std::size_t size() const noexcept { return candidates_.size(); }
    std::vector<BatchPlan> frontier(double t_free) const;

private:
    struct Candidate {
        std::size_t n_tilde = 0;
        std::vector<char> mask;
        double fe = 0.0;
        std::size_t batch = 0;
        double batch_deadline = std::numeric_limits<double>::infinity();
        double phi = 0.0;
        double edge_time = 0.0;
        double arrival = 0.0;  // latest offloader arrival, or 0
        ConfigEval eval;       // at t_free = 0
    };

    Group group() const noexcept { return Group{devices_, members_}; }

    const ModelProfile* model_;
    std::span<const DeviceParams> devices_;
    std::vector<UserId> members_;
    std::vector<Candidate> candidates_;
};

/// Same search as jdob_solve, returning every evaluated feasible plan that
/// is not dominated in (energy, t_free_next). The first entry has the
/// minimum energy. Used by the grouping DP, where a later GPU release can
/// cost more than a small energy saving.
std::vector<BatchPlan> jdob_frontier(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                                     double t_free, SolveMode mode = SolveMode::Full);

}  // namespace coinfer
