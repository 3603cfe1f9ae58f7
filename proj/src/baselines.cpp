#include "coinfer/baselines.hpp"

#include "coinfer/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>
#include <memory>
#include <optional>

namespace coinfer {

std::string_view to_string(Method method) noexcept {
    switch (method) {
    case Method::Jdob: return "jdob";
    case Method::LocalOnly: return "lc";
    case Method::JdobNoEdgeDvfs: return "jdob-no-edge-dvfs";
    case Method::JdobBinary: return "jdob-binary";
    case Method::Oracle: return "oracle";
    }
    return "unknown";
}

std::optional<Method> parse_method(std::string_view name) noexcept {
    for (Method m : {Method::Jdob, Method::LocalOnly, Method::JdobNoEdgeDvfs, Method::JdobBinary, Method::Oracle}) {
        if (to_string(m) == name) return m;
    }
    return std::nullopt;
}

LocalSolution solve_local_only(const ModelProfile& model, std::span<const DeviceParams> devices) {
    LocalSolution out;
    const Aggregates full = model.aggregates(model.blocks(), 0);
    for (std::size_t m = 0; m < devices.size(); ++m) {
        const DeviceParams& dev = devices[m];
        const double work = dev.zeta * full.device_latency_work;
        if (work / dev.f_max > dev.deadline * (1.0 + kFeasibilitySlack)) {
            throw Error(ErrorKind::InfeasibleUser,
                        fmt::format("user {} needs {} s at f_max but its deadline is {} s", m, work / dev.f_max,
                                    dev.deadline));
        }
        const double f = std::clamp(work / dev.deadline, dev.f_min, dev.f_max);
        out.f_star.push_back(f);
        out.energy += dev.kappa * full.device_energy_work * f * f;
    }
    return out;
}

std::size_t oracle_search_size(const ModelProfile& model, const EdgeParams& edge, std::size_t users) {
    constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
    if (users >= 63) return kMax;
    // the empty subset is evaluated once per partition point
    const std::size_t grid = edge_grid(edge).size();
    const std::size_t offloading = (std::size_t{1} << users) - 1;
    if (offloading > (kMax - 1) / grid) return kMax;
    const std::size_t per_point = offloading * grid + 1;
    if (per_point > kMax / (model.blocks() + 1)) return kMax;
    return per_point * (model.blocks() + 1);
}

OracleResult brute_force_oracle(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                                double t_free, const OracleCaps& caps, PlanFrontier* frontier) {
    const std::size_t users = group.size();
    if (users == 0) throw Error(ErrorKind::InvalidParameter, "oracle needs a non-empty group");
    if (users > caps.max_users || model.blocks() > caps.max_blocks) {
        throw Error(ErrorKind::CapExceeded,
                    fmt::format("oracle refused: {} users (cap {}), {} blocks (cap {}); search size would be {}",
                                users, caps.max_users, model.blocks(), caps.max_blocks,
                                oracle_search_size(model, edge, users)));
    }

    const std::vector<double> grid = edge_grid(edge);
    OracleResult best;
    best.energy = std::numeric_limits<double>::infinity();
    std::vector<char> mask(users);
    bool found = false;
    for (std::size_t n_tilde = 0; n_tilde <= model.blocks(); ++n_tilde) {
        for (std::size_t subset = 0; subset < (std::size_t{1} << users); ++subset) {
            for (std::size_t k = 0; k < users; ++k) mask[k] = static_cast<char>((subset >> k) & 1U);
            for (double fe : grid) {
                const ConfigEval eval = evaluate_config(model, edge, group, n_tilde, std::span<const char>(mask), fe, t_free);
                ++best.search_size;
                if (eval.feasible() && frontier && !frontier->dominated(eval.energy, eval.t_free_next))
                    frontier->insert(make_plan(group, n_tilde, mask, fe, t_free, eval));
                if (eval.feasible() && eval.energy < best.energy) {
                    best.energy = eval.energy;
                    best.witness = make_plan(group, n_tilde, mask, fe, t_free, eval);
                    found = true;
                }
                // the edge frequency does not matter without offloaders
                if (subset == 0) break;
            }
        }
    }
    if (!found) throw Error(ErrorKind::InfeasibleGroup, "oracle found no feasible configuration");
    return best;
}

InnerSolver make_inner_solver(Method method, std::shared_ptr<const ModelProfile> model, EdgeParams edge,
                              OracleCaps caps) {
    switch (method) {
    case Method::Jdob:
    case Method::JdobNoEdgeDvfs:
    case Method::JdobBinary: {
        const SolveMode mode = method == Method::Jdob         ? SolveMode::Full
                               : method == Method::JdobBinary ? SolveMode::Binary
                                                              : SolveMode::NoEdgeDvfs;
        // The DP asks for one group at several t_free values in a row, so
        // the candidate set of the latest group is kept.
        auto cache = std::make_shared<std::optional<CandidateSet>>();
        return [model, edge, mode, cache](const Group& group, double t_free) {
            auto& set = *cache;
            if (!set || set->devices().data() != group.devices.data() ||
                !std::ranges::equal(set->members(), group.members))
                set.emplace(*model, edge, group, mode);
            return set->frontier(t_free);
        };
    }
    case Method::LocalOnly:
        return [model, edge](const Group& group, double t_free) {
            return std::vector<BatchPlan>{local_plan(*model, edge, group, t_free)};
        };
    case Method::Oracle:
        return [model, edge, caps](const Group& group, double t_free) {
            PlanFrontier frontier;
            brute_force_oracle(*model, edge, group, t_free, caps, &frontier);
            return std::move(frontier).release();
        };
    }
    throw Error(ErrorKind::InvalidParameter, "unknown method");
}

}  // namespace coinfer
