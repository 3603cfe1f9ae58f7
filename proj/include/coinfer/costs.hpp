#pragma once

#include "coinfer/model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace coinfer {

using UserId = std::size_t;

/// A set of users drawn from a device population. `members` index into
/// `devices` and are kept in ascending order by every producer in this
/// library; equal-key ties are broken by that order.
struct Group {
    std::span<const DeviceParams> devices;
    std::span<const UserId> members;

    std::size_t size() const noexcept { return members.size(); }
    const DeviceParams& device(UserId id) const { return devices[id]; }
};

struct Cost {
    double latency = 0.0;  // s
    double energy = 0.0;   // J
};

/// Local computation of block n at device frequency f.
Cost local_cost(const DeviceParams& device, const ModelProfile& model, std::size_t n, double f);

/// Upload of `bits` of intermediate data. Download is not modelled.
Cost upload_cost(const DeviceParams& device, double bits);

/// Edge processing of block n for a batch of size b at GPU frequency fe.
Cost batch_cost(const ModelProfile& model, std::size_t n, double fe, std::size_t batch);

Aggregates prefix_aggregates(const ModelProfile& model, std::size_t n_tilde, std::size_t batch);

/// Upload time of O_n plus the fastest possible local prefix time.
double gamma_min_latency(const DeviceParams& device, const ModelProfile& model, std::size_t n_tilde);

struct OffloaderRole {
    std::size_t n_tilde = 0;
    double batch_deadline = 0.0;  ///< l_o
    std::size_t batch_size = 0;   ///< B_o
    double fe = 0.0;
};
struct LocalRole {};
using DeviceRole = std::variant<OffloaderRole, LocalRole>;

/// Energy-minimal device frequency meeting the role's latency budget,
/// clamped to [f_min, f_max]. Throws InfeasibleConfiguration when an
/// offloader with a non-empty prefix has no positive time budget.
double optimal_device_freq(const DeviceParams& device, const ModelProfile& model, const DeviceRole& role);

/// Constraint identifiers. The first three are the batching problem's own
/// constraints; the rest are structural checks made by the schedule validator.
enum class Constraint {
    GpuOccupation,        // t_free + phi/fe <= l_o
    CoInferenceDeadline,  // device prefix + upload + batch <= l_o
    LocalDeadline,        // full local inference <= T_d
    DeviceFrequency,
    EdgeFrequency,
    BatchConsistency,
    Partition,
    GroupOrder,
    WindowOverlap,
    EndToEndDeadline,
    EnergyMismatch,
    ChainMismatch,
};

const char* to_string(Constraint c) noexcept;

struct Violation {
    Constraint constraint;
    std::optional<std::size_t> group;
    std::optional<UserId> user;
    double lhs = 0.0;
    double rhs = 0.0;
    std::string detail;
};

std::string describe(const Violation& v);

struct ConfigEval {
    double energy = 0.0;
    double t_free_next = 0.0;
    /// Start of the batch: max(t_free, latest offloader arrival). Equals
    /// t_free when nobody offloads.
    double batch_start = 0.0;
    std::vector<double> f_star;  ///< aligned with Group::members
    std::vector<Violation> violations;

    bool feasible() const noexcept { return violations.empty(); }
};

/// Evaluates one configuration of the batching problem with closed-form
/// device frequencies. `offload_mask[k]` marks members[k] as an offloader.
/// Violations are reported, never thrown.
ConfigEval evaluate_config(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                           std::size_t n_tilde, std::span<const char> offload_mask, double fe,
                           double t_free);

/// Same, with the offloading set given as user ids (a subset of members).
ConfigEval evaluate_config(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                           std::size_t n_tilde, std::span<const UserId> offload_set, double fe,
                           double t_free);

/// lhs <= rhs within the relative feasibility slack.
inline bool within(double lhs, double rhs) noexcept {
    return lhs <= rhs + kFeasibilitySlack * (rhs < 0 ? -rhs : rhs);
}

}  // namespace coinfer
