#include "coinfer/schedule.hpp"

#include "coinfer/error.hpp"
#include "coinfer/pareto.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace coinfer {

namespace {

bool close(double a, double b) {
    return std::abs(a - b) <= kFeasibilitySlack * std::max({std::abs(a), std::abs(b), 1e-12});
}

// One non-dominated way to schedule a prefix of the sorted users.
struct Label {
    double energy = 0.0;
    double t_free = 0.0;
    std::size_t from_cell = 0;
    std::size_t from_label = 0;
    std::optional<BatchPlan> plan;
};

using LabelFront = ParetoFront<Label, &Label::energy, &Label::t_free>;

}  // namespace

BatchPlan local_plan(const ModelProfile& model, const EdgeParams& edge, const Group& group, double t_free) {
    const std::vector<char> mask(group.size(), 0);
    const ConfigEval eval = evaluate_config(model, edge, group, model.blocks(), std::span<const char>(mask),
                                            edge.fe_max, t_free);
    if (!eval.feasible()) {
        throw Error(ErrorKind::InfeasibleUser,
                    fmt::format("local computing misses a deadline: {}", describe(eval.violations.front())));
    }
    return make_plan(group, model.blocks(), mask, edge.fe_max, t_free, eval);
}

Schedule group_users_dp(const Instance& instance, const InnerSolver& inner) {
    const ModelProfile& model = *instance.model;
    const std::size_t users = instance.devices.size();
    if (users == 0) throw Error(ErrorKind::InvalidParameter, "cannot schedule an empty user set");

    std::vector<UserId> sorted(users);
    for (std::size_t i = 0; i < users; ++i) sorted[i] = i;
    // Equal deadlines are ordered by device constants, so relabeling users
    // cannot change which groups are contiguous; the index only separates
    // identical devices.
    std::sort(sorted.begin(), sorted.end(), [&](UserId a, UserId b) {
        const DeviceParams& x = instance.devices[a];
        const DeviceParams& y = instance.devices[b];
        return std::tie(x.deadline, x.zeta, x.kappa, x.f_min, x.f_max, x.rate, x.p_u, a) <
               std::tie(y.deadline, y.zeta, y.kappa, y.f_min, y.f_max, y.rate, y.p_u, b);
    });

    std::vector<LabelFront> cells(users + 1);
    cells[0].insert(Label{0.0, instance.edge.t_free0, 0, 0, std::nullopt});

    std::vector<UserId> members;
    for (std::size_t i = 1; i <= users; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            members.assign(sorted.begin() + static_cast<std::ptrdiff_t>(j),
                           sorted.begin() + static_cast<std::ptrdiff_t>(i));
            std::sort(members.begin(), members.end());
            const Group group{instance.devices, members};
            const double earliest = instance.devices[sorted[j]].deadline;
            for (std::size_t k = 0; k < cells[j].size(); ++k) {
                const Label& prev = cells[j].items()[k];
                std::vector<BatchPlan> plans;
                if (earliest >= prev.t_free) {
                    plans = inner(group, prev.t_free);
                } else {
                    plans.push_back(local_plan(model, instance.edge, group, prev.t_free));
                }
                for (BatchPlan& plan : plans) {
                    const double energy = prev.energy + plan.energy;
                    const double t_free = plan.t_free_next;
                    if (!cells[i].dominated(energy, t_free))
                        cells[i].insert(Label{energy, t_free, j, k, std::move(plan)});
                }
            }
        }
    }

    // lowest energy first; equal energies cannot coexist on a front
    const auto& last = cells[users].items();
    if (last.empty()) throw Error(ErrorKind::InfeasibleGroup, "grouping found no feasible schedule");
    const std::size_t pick = 0;

    Schedule schedule;
    schedule.total_energy = last[pick].energy;
    for (std::size_t i = users, k = pick; i > 0;) {
        const Label& label = cells[i].items()[k];
        ScheduledGroup group;
        group.plan = *label.plan;
        group.members = group.plan.members;
        if (group.plan.offloads()) group.window = GpuWindow{group.plan.batch_start, group.plan.t_free_next};
        schedule.groups.push_back(std::move(group));
        i = label.from_cell;
        k = label.from_label;
    }
    std::reverse(schedule.groups.begin(), schedule.groups.end());
    return schedule;
}

std::vector<Violation> validate_schedule(const Instance& instance, const Schedule& schedule) {
    std::vector<Violation> out;
    const ModelProfile& model = *instance.model;
    const std::size_t users = instance.devices.size();

    auto report = [&](Constraint c, std::optional<std::size_t> group, std::optional<UserId> user, double lhs,
                      double rhs, std::string detail = {}) {
        out.push_back(Violation{c, group, user, lhs, rhs, std::move(detail)});
    };

    std::vector<int> seen(users, 0);
    for (std::size_t gi = 0; gi < schedule.groups.size(); ++gi) {
        for (UserId id : schedule.groups[gi].members) {
            if (id >= users) {
                report(Constraint::Partition, gi, id, static_cast<double>(id), static_cast<double>(users),
                       "unknown user index");
                continue;
            }
            ++seen[id];
        }
    }
    for (UserId id = 0; id < users; ++id) {
        if (seen[id] != 1) {
            report(Constraint::Partition, {}, id, seen[id], 1.0,
                   seen[id] == 0 ? "user missing from schedule" : "user scheduled more than once");
        }
    }

    double t_chain = instance.edge.t_free0;
    double energy_sum = 0.0;
    double previous_earliest = -std::numeric_limits<double>::infinity();
    std::optional<double> last_window_end;

    for (std::size_t gi = 0; gi < schedule.groups.size(); ++gi) {
        const ScheduledGroup& sg = schedule.groups[gi];
        const BatchPlan& plan = sg.plan;
        energy_sum += plan.energy;

        std::vector<UserId> members = sg.members;
        std::sort(members.begin(), members.end());
        members.erase(std::unique(members.begin(), members.end()), members.end());
        if (std::any_of(members.begin(), members.end(), [&](UserId id) { return id >= users; }) || members.empty()) {
            report(Constraint::BatchConsistency, gi, {}, 0, 0, "group has no valid members");
            continue;
        }
        if (plan.members != members) {
            report(Constraint::BatchConsistency, gi, {}, static_cast<double>(plan.members.size()),
                   static_cast<double>(members.size()), "plan members differ from group members");
        }

        double earliest = std::numeric_limits<double>::infinity();
        for (UserId id : members) earliest = std::min(earliest, instance.devices[id].deadline);
        if (earliest < previous_earliest) {
            report(Constraint::GroupOrder, gi, {}, earliest, previous_earliest,
                   "groups must run in ascending earliest-deadline order");
        }
        previous_earliest = earliest;

        std::vector<char> mask(members.size(), 0);
        bool structural_ok = true;
        for (UserId id : plan.offload_set) {
            const auto it = std::lower_bound(members.begin(), members.end(), id);
            if (it == members.end() || *it != id) {
                report(Constraint::BatchConsistency, gi, id, 0, 0, "offloader is not a group member");
                structural_ok = false;
                continue;
            }
            mask[static_cast<std::size_t>(it - members.begin())] = 1;
        }
        std::vector<UserId> expected_local;
        double offload_deadline = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < members.size(); ++k) {
            if (mask[k]) {
                offload_deadline = std::min(offload_deadline, instance.devices[members[k]].deadline);
            } else {
                expected_local.push_back(members[k]);
            }
        }
        std::vector<UserId> local = plan.local_set;
        std::sort(local.begin(), local.end());
        if (local != expected_local) {
            report(Constraint::BatchConsistency, gi, {}, static_cast<double>(local.size()),
                   static_cast<double>(expected_local.size()), "local set is not the complement of the offload set");
        }
        const std::size_t batch = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
        if (plan.batch_size != batch) {
            report(Constraint::BatchConsistency, gi, {}, static_cast<double>(plan.batch_size),
                   static_cast<double>(batch), "batch size differs from the offload set size");
        }
        if (batch > 0 && (!plan.batch_deadline || !close(*plan.batch_deadline, offload_deadline))) {
            report(Constraint::BatchConsistency, gi, {}, plan.batch_deadline.value_or(0.0), offload_deadline,
                   "batch deadline must be the tightest offloader deadline");
        }
        if (plan.n_tilde > model.blocks() || batch > model.max_batch()) {
            report(Constraint::BatchConsistency, gi, {}, static_cast<double>(plan.n_tilde),
                   static_cast<double>(model.blocks()), "partition point or batch size out of range");
            structural_ok = false;
        }
        if (!close(plan.t_free_start, t_chain)) {
            report(Constraint::ChainMismatch, gi, {}, plan.t_free_start, t_chain,
                   "plan starts from a different GPU availability than the chain");
        }
        if (!structural_ok) continue;

        const Group group{instance.devices, members};
        const ConfigEval eval = evaluate_config(model, instance.edge, group, plan.n_tilde,
                                                std::span<const char>(mask), plan.fe, t_chain);
        for (Violation v : eval.violations) {
            v.group = gi;
            out.push_back(std::move(v));
        }
        if (!close(plan.energy, eval.energy)) {
            report(Constraint::EnergyMismatch, gi, {}, plan.energy, eval.energy, "stored energy differs from re-evaluation");
        }
        if (!close(plan.t_free_next, eval.t_free_next)) {
            report(Constraint::ChainMismatch, gi, {}, plan.t_free_next, eval.t_free_next,
                   "stored GPU release time differs from re-evaluation");
        }

        // End-to-end completion with the stored frequencies.
        if (plan.f_star.size() == members.size()) {
            const Aggregates agg = model.aggregates(plan.n_tilde, batch);
            const Aggregates full = model.aggregates(model.blocks(), 0);
            for (std::size_t k = 0; k < members.size(); ++k) {
                const DeviceParams& dev = instance.devices[members[k]];
                const double f = plan.f_star[k];
                if (!(f >= dev.f_min * (1 - kFeasibilitySlack) && f <= dev.f_max * (1 + kFeasibilitySlack))) {
                    report(Constraint::DeviceFrequency, gi, members[k], f, dev.f_max);
                    continue;
                }
                if (mask[k]) {
                    const double arrival = dev.zeta * agg.device_latency_work / f + model.output_bits(plan.n_tilde) / dev.rate;
                    if (!within(arrival, plan.batch_start)) {
                        report(Constraint::BatchConsistency, gi, members[k], arrival, plan.batch_start,
                               "batch starts before the offloaded data arrives");
                    }
                    if (!within(plan.t_free_next, dev.deadline)) {
                        report(Constraint::EndToEndDeadline, gi, members[k], plan.t_free_next, dev.deadline);
                    }
                } else {
                    const double finish = dev.zeta * full.device_latency_work / f;
                    if (!within(finish, dev.deadline)) {
                        report(Constraint::EndToEndDeadline, gi, members[k], finish, dev.deadline);
                    }
                }
            }
        } else {
            report(Constraint::BatchConsistency, gi, {}, static_cast<double>(plan.f_star.size()),
                   static_cast<double>(members.size()), "one device frequency per member is required");
        }

        if (batch > 0) {
            if (!within(t_chain, plan.batch_start)) {
                report(Constraint::WindowOverlap, gi, {}, t_chain, plan.batch_start,
                       "batch starts before the GPU is released");
            }
            if (!sg.window) {
                report(Constraint::BatchConsistency, gi, {}, 0, 0, "offloading group without a GPU window");
            } else {
                if (last_window_end && !within(*last_window_end, sg.window->start)) {
                    report(Constraint::WindowOverlap, gi, {}, *last_window_end, sg.window->start,
                           "GPU window overlaps the previous batch");
                }
                if (!close(sg.window->start, plan.batch_start) || !close(sg.window->end, plan.t_free_next)) {
                    report(Constraint::BatchConsistency, gi, {}, sg.window->end, plan.t_free_next,
                           "GPU window does not match the batch");
                }
                last_window_end = sg.window->end;
            }
        } else if (sg.window) {
            report(Constraint::BatchConsistency, gi, {}, sg.window->start, sg.window->end,
                   "all-local group must not occupy the GPU");
        }
        t_chain = eval.t_free_next;
    }

    if (!close(schedule.total_energy, energy_sum)) {
        report(Constraint::EnergyMismatch, {}, {}, schedule.total_energy, energy_sum, "total differs from the group sum");
    }
    return out;
}

nlohmann::json schedule_to_json(const Schedule& schedule) {
    nlohmann::json groups = nlohmann::json::array();
    for (const ScheduledGroup& g : schedule.groups) {
        const BatchPlan& p = g.plan;
        nlohmann::json plan = {
            {"n_tilde", p.n_tilde},
            {"members", p.members},
            {"offload_set", p.offload_set},
            {"local_set", p.local_set},
            {"f_e", p.fe},
            {"f_star", p.f_star},
            {"batch_deadline", p.batch_deadline ? nlohmann::json(*p.batch_deadline) : nlohmann::json(nullptr)},
            {"batch_size", p.batch_size},
            {"energy", p.energy},
            {"t_free_start", p.t_free_start},
            {"batch_start", p.batch_start},
            {"t_free_next", p.t_free_next},
        };
        nlohmann::json window = nullptr;
        if (g.window) window = {{"start", g.window->start}, {"end", g.window->end}};
        groups.push_back({{"members", g.members}, {"plan", std::move(plan)}, {"window", std::move(window)}});
    }
    return {{"total_energy", schedule.total_energy}, {"groups", std::move(groups)}};
}

Schedule schedule_from_json(const nlohmann::json& doc) {
    try {
        Schedule schedule;
        schedule.total_energy = doc.at("total_energy").get<double>();
        for (const auto& g : doc.at("groups")) {
            ScheduledGroup sg;
            sg.members = g.at("members").get<std::vector<UserId>>();
            const auto& p = g.at("plan");
            BatchPlan& plan = sg.plan;
            plan.n_tilde = p.at("n_tilde").get<std::size_t>();
            plan.members = p.value("members", sg.members);
            plan.offload_set = p.at("offload_set").get<std::vector<UserId>>();
            plan.local_set = p.at("local_set").get<std::vector<UserId>>();
            plan.fe = p.at("f_e").get<double>();
            plan.f_star = p.at("f_star").get<std::vector<double>>();
            if (!p.at("batch_deadline").is_null()) plan.batch_deadline = p.at("batch_deadline").get<double>();
            plan.batch_size = p.at("batch_size").get<std::size_t>();
            plan.energy = p.at("energy").get<double>();
            plan.t_free_start = p.at("t_free_start").get<double>();
            plan.batch_start = p.at("batch_start").get<double>();
            plan.t_free_next = p.at("t_free_next").get<double>();
            if (g.contains("window") && !g.at("window").is_null()) {
                sg.window = GpuWindow{g.at("window").at("start").get<double>(), g.at("window").at("end").get<double>()};
            }
            schedule.groups.push_back(std::move(sg));
        }
        return schedule;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Schema, fmt::format("schedule document: {}", e.what()));
    }
}

}  // namespace coinfer
