#include "coinfer/jdob.hpp"

#include "coinfer/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace coinfer {

namespace {

// Partition points searched in each mode.
std::vector<std::size_t> points(const ModelProfile& model, SolveMode mode) {
    if (mode == SolveMode::Binary) return {0, model.blocks()};
    std::vector<std::size_t> out(model.blocks() + 1);
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
}

double min_deadline(const Group& group) {
    double out = std::numeric_limits<double>::infinity();
    for (UserId id : group.members) out = std::min(out, group.device(id).deadline);
    return out;
}

std::size_t position_of(const Group& group, UserId id) {
    const auto it = std::lower_bound(group.members.begin(), group.members.end(), id);
    return static_cast<std::size_t>(it - group.members.begin());
}

}  // namespace

std::string_view to_string(SolveMode mode) noexcept {
    switch (mode) {
    case SolveMode::Full: return "full";
    case SolveMode::NoEdgeDvfs: return "no-edge-dvfs";
    case SolveMode::Binary: return "binary";
    }
    return "unknown";
}

BatchPlan make_plan(const Group& group, std::size_t n_tilde, std::span<const char> offload_mask, double fe,
                    double t_free, const ConfigEval& eval) {
    BatchPlan plan;
    plan.n_tilde = n_tilde;
    plan.members.assign(group.members.begin(), group.members.end());
    for (std::size_t k = 0; k < group.size(); ++k) {
        const UserId id = group.members[k];
        if (offload_mask[k]) {
            plan.offload_set.push_back(id);
            const double deadline = group.device(id).deadline;
            plan.batch_deadline = plan.batch_deadline ? std::min(*plan.batch_deadline, deadline) : deadline;
        } else {
            plan.local_set.push_back(id);
        }
    }
    plan.fe = fe;
    plan.f_star = eval.f_star;
    plan.batch_size = plan.offload_set.size();
    plan.energy = eval.energy;
    plan.t_free_start = t_free;
    plan.batch_start = eval.batch_start;
    plan.t_free_next = eval.t_free_next;
    return plan;
}

ThresholdList edge_freq_thresholds(const ModelProfile& model, const Group& group, std::size_t n_tilde) {
    const std::size_t size = group.size();
    if (size == 0) throw Error(ErrorKind::InvalidParameter, "threshold computation needs a non-empty group");
    if (size > model.max_batch()) {
        throw Error(ErrorKind::InvalidParameter,
                    fmt::format("group of {} users exceeds profiled batch size {}", size, model.max_batch()));
    }

    std::vector<double> gamma_by_pos(size);
    for (std::size_t k = 0; k < size; ++k)
        gamma_by_pos[k] = gamma_min_latency(group.device(group.members[k]), model, n_tilde);

    std::vector<std::size_t> pos(size);
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    // members are ascending, so stable order breaks gamma ties by user index
    std::stable_sort(pos.begin(), pos.end(),
                     [&](std::size_t a, std::size_t b) { return gamma_by_pos[a] > gamma_by_pos[b]; });

    ThresholdList out;
    out.order.resize(size);
    out.gamma.resize(size);
    out.thresholds.resize(size);
    for (std::size_t i = 0; i < size; ++i) {
        out.order[i] = group.members[pos[i]];
        out.gamma[i] = gamma_by_pos[pos[i]];
    }

    double suffix_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = size; i-- > 0;) {
        suffix_min = std::min(suffix_min, group.device(out.order[i]).deadline);
        const double phi = model.aggregates(n_tilde, size - i).edge_latency_work;
        const double slack = suffix_min - out.gamma[i];
        out.thresholds[i] = slack > 0.0 ? phi / slack : kNeverOffloads;
    }
    for (std::size_t i = 0; i < size; ++i) {
        if (out.thresholds[i] != kNeverOffloads) {
            out.first_offloadable = i;
            break;
        }
    }
    return out;
}

std::vector<double> edge_grid(const EdgeParams& edge, SolveMode mode) {
    if (mode == SolveMode::NoEdgeDvfs) return {edge.fe_max};
    std::vector<double> grid;
    const double floor = edge.fe_min * (1.0 - 1e-12);
    for (std::size_t j = 0;; ++j) {
        const double fe = edge.fe_max - static_cast<double>(j) * edge.rho;
        if (fe < floor) break;
        grid.push_back(fe);
    }
    return grid;
}

namespace {

// Walks the sweep order: grid from the top, dropping sorted users while fe
// is below their threshold. Calls visit(mask, fe) for every configuration
// that passes the GPU-window pre-check at `t_free`.
template <class Visit>
void walk_sweep(const ModelProfile& model, const Group& group, const ThresholdList& thresholds, std::size_t n_tilde,
                double t_free, std::span<const double> grid, std::vector<char>& mask, Visit&& visit) {
    const std::size_t size = group.size();
    std::fill(mask.begin(), mask.end(), 0);
    if (n_tilde == model.blocks() || !thresholds.first_offloadable) {
        visit(grid.front());
        return;
    }

    // suffix minimum deadline by sorted position gives l_o in O(1)
    std::vector<double> suffix_deadline(size + 1, std::numeric_limits<double>::infinity());
    for (std::size_t i = size; i-- > 0;)
        suffix_deadline[i] = std::min(suffix_deadline[i + 1], group.device(thresholds.order[i]).deadline);

    std::size_t next = *thresholds.first_offloadable;
    for (std::size_t i = next; i < size; ++i) mask[position_of(group, thresholds.order[i])] = 1;

    for (double fe : grid) {
        while (next < size && fe < thresholds.thresholds[next]) {
            mask[position_of(group, thresholds.order[next])] = 0;
            ++next;
        }
        const std::size_t batch = size - next;
        if (batch == 0) {
            visit(fe);
            break;
        }
        const double window = suffix_deadline[next] - t_free;
        const double phi = model.aggregates(n_tilde, batch).edge_latency_work;
        if (window > 0.0 && fe * window >= phi) visit(fe);
    }
}

void require_gpu_window(const Group& group, double t_free) {
    if (min_deadline(group) < t_free) {
        throw Error(ErrorKind::InfeasibleGroup,
                    fmt::format("earliest deadline {} s precedes GPU availability {} s", min_deadline(group), t_free));
    }
}

}  // namespace

SweepResult sweep_edge_frequency(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                                 const ThresholdList& thresholds, std::size_t n_tilde, double t_free,
                                 std::span<const double> grid, PlanFrontier* frontier) {
    if (group.size() == 0) throw Error(ErrorKind::InvalidParameter, "sweep needs a non-empty group");
    if (grid.empty()) throw Error(ErrorKind::InvalidParameter, "edge frequency grid is empty");
    require_gpu_window(group, t_free);

    SweepResult best;
    best.t_free_next = t_free;
    std::vector<char> mask(group.size(), 0);
    walk_sweep(model, group, thresholds, n_tilde, t_free, grid, mask, [&](double fe) {
        ConfigEval eval = evaluate_config(model, edge, group, n_tilde, std::span<const char>(mask), fe, t_free);
        ++best.evaluations;
        if (eval.feasible() && frontier && !frontier->dominated(eval.energy, eval.t_free_next))
            frontier->insert(make_plan(group, n_tilde, mask, fe, t_free, eval));
        if (eval.feasible() && eval.energy < best.energy) {
            best.energy = eval.energy;
            best.t_free_next = eval.t_free_next;
            best.plan = make_plan(group, n_tilde, mask, fe, t_free, eval);
        }
    });
    return best;
}

CandidateSet::CandidateSet(const ModelProfile& model, const EdgeParams& edge, const Group& group, SolveMode mode)
    : model_(&model), devices_(group.devices), members_(group.members.begin(), group.members.end()) {
    if (members_.empty()) throw Error(ErrorKind::InvalidParameter, "cannot solve an empty group");
    const Group g = this->group();
    const std::vector<double> grid = edge_grid(edge, mode);
    std::vector<char> mask(members_.size(), 0);
    for (std::size_t n_tilde : points(model, mode)) {
        const ThresholdList thresholds = edge_freq_thresholds(model, g, n_tilde);
        // The pre-check is weakest at t_free = 0; queries re-apply it.
        walk_sweep(model, g, thresholds, n_tilde, 0.0, grid, mask, [&](double fe) {
            ConfigEval eval = evaluate_config(model, edge, g, n_tilde, std::span<const char>(mask), fe, 0.0);
            if (!eval.feasible()) return;
            Candidate c;
            c.n_tilde = n_tilde;
            c.mask = mask;
            c.fe = fe;
            c.batch = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
            if (c.batch > 0) {
                c.phi = model.aggregates(n_tilde, c.batch).edge_latency_work;
                c.edge_time = c.phi / fe;
                for (std::size_t k = 0; k < mask.size(); ++k)
                    if (mask[k]) c.batch_deadline = std::min(c.batch_deadline, g.device(members_[k]).deadline);
            }
            c.arrival = eval.batch_start;
            c.eval = std::move(eval);
            candidates_.push_back(std::move(c));
        });
    }
}

std::vector<BatchPlan> CandidateSet::frontier(double t_free) const {
    const Group g = group();
    require_gpu_window(g, t_free);

    struct Point {
        double energy;
        double t_free_next;
        double batch_start;
        std::size_t index;
    };
    ParetoFront<Point, &Point::energy, &Point::t_free_next> points;
    for (std::size_t i = 0; i < candidates_.size(); ++i) {
        const Candidate& c = candidates_[i];
        double start = t_free;
        double next = t_free;
        if (c.batch > 0) {
            const double window = c.batch_deadline - t_free;
            if (!(window > 0.0 && c.fe * window >= c.phi)) continue;
            if (!within(t_free + c.edge_time, c.batch_deadline)) continue;
            start = std::max(t_free, c.arrival);
            next = start + c.edge_time;
        }
        points.insert(Point{c.eval.energy, next, start, i});
    }
    if (points.empty()) throw Error(ErrorKind::InfeasibleGroup, "no feasible configuration found for the group");

    std::vector<BatchPlan> out;
    out.reserve(points.size());
    for (const Point& p : points.items()) {
        const Candidate& c = candidates_[p.index];
        ConfigEval eval = c.eval;
        eval.batch_start = p.batch_start;
        eval.t_free_next = p.t_free_next;
        out.push_back(make_plan(g, c.n_tilde, c.mask, c.fe, t_free, eval));
    }
    return out;
}

BatchPlan jdob_solve(const ModelProfile& model, const EdgeParams& edge, const Group& group, double t_free,
                     SolveMode mode) {
    const std::vector<double> grid = edge_grid(edge, mode);
    return jdob_solve(model, edge, group, t_free, mode, grid);
}

BatchPlan jdob_solve(const ModelProfile& model, const EdgeParams& edge, const Group& group, double t_free,
                     SolveMode mode, std::span<const double> grid) {
    if (group.size() == 0) throw Error(ErrorKind::InvalidParameter, "cannot solve an empty group");

    SweepResult best;
    for (std::size_t n_tilde : points(model, mode)) {
        const ThresholdList thresholds = edge_freq_thresholds(model, group, n_tilde);
        SweepResult result = sweep_edge_frequency(model, edge, group, thresholds, n_tilde, t_free, grid);
        if (result.plan && result.energy < best.energy) best = std::move(result);
    }
    if (!best.plan) {
        // unreachable for locally feasible users: n_tilde = N is always all-local
        throw Error(ErrorKind::InfeasibleGroup, "no feasible configuration found for the group");
    }
    return std::move(*best.plan);
}

std::vector<BatchPlan> jdob_frontier(const ModelProfile& model, const EdgeParams& edge, const Group& group,
                                     double t_free, SolveMode mode) {
    if (group.size() == 0) throw Error(ErrorKind::InvalidParameter, "cannot solve an empty group");
    const std::vector<double> grid = edge_grid(edge, mode);
    PlanFrontier frontier;
    for (std::size_t n_tilde : points(model, mode)) {
        const ThresholdList thresholds = edge_freq_thresholds(model, group, n_tilde);
        sweep_edge_frequency(model, edge, group, thresholds, n_tilde, t_free, grid, &frontier);
    }
    if (frontier.empty()) throw Error(ErrorKind::InfeasibleGroup, "no feasible configuration found for the group");
    return std::move(frontier).release();
}

}  // namespace coinfer
