#include "coinfer/costs.hpp"

#include "coinfer/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace coinfer {

namespace {

void check_block(const ModelProfile& model, std::size_t n) {
    if (n < 1 || n > model.blocks()) {
        throw Error(ErrorKind::InvalidParameter, fmt::format("sub-task index {} outside 1..{}", n, model.blocks()));
    }
}

bool in_range(double f, double lo, double hi) {
    return f >= lo * (1.0 - kFeasibilitySlack) && f <= hi * (1.0 + kFeasibilitySlack);
}

// Closed-form frequency for a prefix of `work` cycles within `budget`
// seconds. Non-positive budgets fall back to f_max; the caller's
// deadline check then reports the violation.
double clamped_frequency(const DeviceParams& device, double work, double budget) {
    if (work == 0.0) return device.f_min;
    if (!(budget > 0.0)) return device.f_max;
    return std::clamp(work / budget, device.f_min, device.f_max);
}

}  // namespace

const char* to_string(Constraint c) noexcept {
    switch (c) {
    case Constraint::GpuOccupation: return "gpu-occupation";
    case Constraint::CoInferenceDeadline: return "co-inference-deadline";
    case Constraint::LocalDeadline: return "local-deadline";
    case Constraint::DeviceFrequency: return "device-frequency-range";
    case Constraint::EdgeFrequency: return "edge-frequency-range";
    case Constraint::BatchConsistency: return "batch-consistency";
    case Constraint::Partition: return "user-partition";
    case Constraint::GroupOrder: return "group-order";
    case Constraint::WindowOverlap: return "gpu-window-overlap";
    case Constraint::EndToEndDeadline: return "end-to-end-deadline";
    case Constraint::EnergyMismatch: return "energy-mismatch";
    case Constraint::ChainMismatch: return "t-free-chain-mismatch";
    }
    return "unknown";
}

std::string describe(const Violation& v) {
    std::string out = to_string(v.constraint);
    if (v.group) out += fmt::format(" group={}", *v.group);
    if (v.user) out += fmt::format(" user={}", *v.user);
    out += fmt::format(" lhs={:.9g} rhs={:.9g}", v.lhs, v.rhs);
    if (!v.detail.empty()) out += " (" + v.detail + ")";
    return out;
}

Cost local_cost(const DeviceParams& device, const ModelProfile& model, std::size_t n, double f) {
    check_block(model, n);
    if (!in_range(f, device.f_min, device.f_max)) {
        throw Error(ErrorKind::InvalidParameter,
                    fmt::format("device frequency {} Hz outside [{}, {}]", f, device.f_min, device.f_max));
    }
    const double a = model.workload(n);
    return Cost{device.zeta * model.latency_factor(n) * a / f, device.kappa * model.energy_factor(n) * a * f * f};
}

Cost upload_cost(const DeviceParams& device, double bits) {
    if (!(bits >= 0.0)) throw Error(ErrorKind::InvalidParameter, "upload size must be non-negative");
    const double latency = bits / device.rate;
    return Cost{latency, latency * device.p_u};
}

Cost batch_cost(const ModelProfile& model, std::size_t n, double fe, std::size_t batch) {
    check_block(model, n);
    if (batch < 1 || batch > model.max_batch()) {
        throw Error(ErrorKind::InvalidParameter,
                    fmt::format("batch size {} outside 1..{}", batch, model.max_batch()));
    }
    if (!(fe > 0.0)) throw Error(ErrorKind::InvalidParameter, "edge frequency must be positive");
    const double a = model.workload(n);
    return Cost{model.edge_latency_coeff(n, batch) * a / fe, model.edge_energy_coeff(n, batch) * a * fe * fe};
}

Aggregates prefix_aggregates(const ModelProfile& model, std::size_t n_tilde, std::size_t batch) {
    return model.aggregates(n_tilde, batch);
}

double gamma_min_latency(const DeviceParams& device, const ModelProfile& model, std::size_t n_tilde) {
    const Aggregates agg = model.aggregates(n_tilde, 0);
    return model.output_bits(n_tilde) / device.rate + device.zeta * agg.device_latency_work / device.f_max;
}

double optimal_device_freq(const DeviceParams& device, const ModelProfile& model, const DeviceRole& role) {
    if (const auto* local = std::get_if<LocalRole>(&role)) {
        (void)local;
        if (!(device.deadline > 0.0)) throw Error(ErrorKind::InvalidParameter, "deadline must be positive");
        const double work = device.zeta * model.aggregates(model.blocks(), 0).device_latency_work;
        return std::clamp(work / device.deadline, device.f_min, device.f_max);
    }
    const auto& off = std::get<OffloaderRole>(role);
    const Aggregates agg = model.aggregates(off.n_tilde, off.batch_size);
    const double edge_time = off.batch_size == 0 ? 0.0 : agg.edge_latency_work / off.fe;
    const double budget = off.batch_deadline - model.output_bits(off.n_tilde) / device.rate - edge_time;
    if (!(budget > 0.0)) {
        throw Error(ErrorKind::InfeasibleConfiguration,
                    fmt::format("non-positive device time budget {} s at n_tilde={}", budget, off.n_tilde));
    }
    const double work = device.zeta * agg.device_latency_work;
    if (work == 0.0) return device.f_min;
    return std::clamp(work / budget, device.f_min, device.f_max);
}

ConfigEval evaluate_config(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                           std::size_t n_tilde, std::span<const char> offload_mask, double fe,
                           double t_free) {
    if (offload_mask.size() != group.size()) {
        throw Error(ErrorKind::InvalidParameter, "offload mask size does not match the group");
    }
    if (n_tilde > model.blocks()) {
        throw Error(ErrorKind::InvalidParameter, fmt::format("partition point {} outside 0..{}", n_tilde, model.blocks()));
    }
    const std::size_t batch = static_cast<std::size_t>(std::count(offload_mask.begin(), offload_mask.end(), 1));
    if (batch > model.max_batch()) {
        throw Error(ErrorKind::InvalidParameter,
                    fmt::format("batch size {} exceeds profiled maximum {}", batch, model.max_batch()));
    }

    ConfigEval out;
    out.f_star.resize(group.size());
    const Aggregates agg = model.aggregates(n_tilde, batch);
    const Aggregates full = model.aggregates(model.blocks(), 0);
    const double out_bits = model.output_bits(n_tilde);

    double batch_deadline = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < group.size(); ++k)
        if (offload_mask[k]) batch_deadline = std::min(batch_deadline, group.device(group.members[k]).deadline);

    double edge_time = 0.0;
    if (batch > 0) {
        if (!in_range(fe, edge.fe_min, edge.fe_max)) {
            out.violations.push_back({Constraint::EdgeFrequency, {}, {}, fe, edge.fe_max,
                                      fmt::format("edge frequency outside [{}, {}]", edge.fe_min, edge.fe_max)});
        }
        edge_time = agg.edge_latency_work / fe;
        if (!within(t_free + edge_time, batch_deadline)) {
            out.violations.push_back({Constraint::GpuOccupation, {}, {}, t_free + edge_time, batch_deadline, {}});
        }
    }

    double latest_arrival = t_free;
    for (std::size_t k = 0; k < group.size(); ++k) {
        const UserId id = group.members[k];
        const DeviceParams& dev = group.device(id);
        if (offload_mask[k]) {
            const double upload = out_bits / dev.rate;
            const double work = dev.zeta * agg.device_latency_work;
            const double f = clamped_frequency(dev, work, batch_deadline - upload - edge_time);
            const double arrival = work / f + upload;
            if (!within(arrival + edge_time, batch_deadline)) {
                out.violations.push_back({Constraint::CoInferenceDeadline, {}, id, arrival + edge_time, batch_deadline, {}});
            }
            out.f_star[k] = f;
            out.energy += dev.kappa * agg.device_energy_work * f * f + upload * dev.p_u;
            latest_arrival = std::max(latest_arrival, arrival);
        } else {
            const double work = dev.zeta * full.device_latency_work;
            const double f = std::clamp(work / dev.deadline, dev.f_min, dev.f_max);
            if (!within(work / f, dev.deadline)) {
                out.violations.push_back({Constraint::LocalDeadline, {}, id, work / f, dev.deadline, {}});
            }
            out.f_star[k] = f;
            out.energy += dev.kappa * full.device_energy_work * f * f;
        }
    }

    if (batch > 0) {
        out.energy += agg.edge_energy_coeff * fe * fe;
        out.batch_start = latest_arrival;
        out.t_free_next = latest_arrival + edge_time;
    } else {
        out.batch_start = t_free;
        out.t_free_next = t_free;
    }
    return out;
}

ConfigEval evaluate_config(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                           std::size_t n_tilde, std::span<const UserId> offload_set, double fe,
                           double t_free) {
    std::vector<char> mask(group.size(), 0);
    for (UserId id : offload_set) {
        const auto it = std::find(group.members.begin(), group.members.end(), id);
        if (it == group.members.end()) {
            throw Error(ErrorKind::InvalidParameter, fmt::format("user {} is not a member of the group", id));
        }
        mask[static_cast<std::size_t>(it - group.members.begin())] = 1;
    }
    return evaluate_config(model, edge, group, n_tilde, std::span<const char>(mask), fe, t_free);
}

}  // namespace coinfer
