#pragma once

#include "coinfer/baselines.hpp"
#include "coinfer/model.hpp"
#include "coinfer/schedule.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace coinfer {

/// Deadline tightness: a scalar (lo == hi) or a uniform range drawn
/// independently per user.
struct BetaSpec {
    double lo = 0.0;
    double hi = 0.0;

    bool is_range() const noexcept { return hi != lo; }
    std::string label() const;
};

/// Sub-seed for trial `trial` of a run seeded with `seed`:
/// splitmix64(splitmix64(seed) + trial). Trials never share a stream, so
/// results do not depend on the order in which workers pick them up.
std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept;

/// Full experiment input.
struct Scenario {
    std::shared_ptr<const ModelProfile> model;
    /// Devices with deadlines materialized for trial 0.
    std::vector<DeviceParams> devices;
    /// Marks devices whose deadline was given explicitly (not from beta).
    std::vector<char> explicit_deadline;
    std::optional<BetaSpec> beta;
    EdgeParams edge;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::vector<Method> methods{Method::Jdob, Method::LocalOnly};

    /// Devices and deadlines for one trial.
    Instance instance(std::size_t trial) const;

    /// Label for reports: the beta spec, or "explicit" when every deadline
    /// is given directly.
    std::string beta_label() const;

    /// Copy with `users` devices, cycling through the configured ones.
    Scenario with_users(std::size_t users) const;

    /// Copy where every deadline comes from `beta`.
    Scenario with_beta(const BetaSpec& beta) const;
};

/// Parses a scenario document. Relative model paths resolve against
/// `base_dir`. Errors carry the offending field path.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

Scenario load_scenario(const std::filesystem::path& path);

/// Model document {"A", "O", "g", "q", "d", "c"} for a profile.
nlohmann::json model_to_json(const ModelProfile& model);

}  // namespace coinfer
