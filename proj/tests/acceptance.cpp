// Acceptance gate: one PASS/FAIL line per criterion. Exit status is
// non-zero if any criterion fails.
//
// Usage: coinfer_acceptance [path-to-coinfer-cli]

#include "coinfer/baselines.hpp"
#include "coinfer/bench.hpp"
#include "coinfer/costs.hpp"
#include "coinfer/error.hpp"
#include "coinfer/jdob.hpp"
#include "coinfer/profile.hpp"
#include "coinfer/scenario.hpp"
#include "coinfer/schedule.hpp"

#include "support/golden.hpp"
#include "support/random_instance.hpp"
#include "support/reference_oracle.hpp"
#include "support/toy.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace {

using namespace coinfer;
using namespace coinfer::testing;
namespace fs = std::filesystem;

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = true;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

bool leq_rel(double lhs, double rhs, double slack) { return lhs <= rhs + slack * std::abs(rhs); }

std::vector<UserId> iota_ids(std::size_t n) {
    std::vector<UserId> ids(n);
    std::iota(ids.begin(), ids.end(), UserId{0});
    return ids;
}

// ---------------------------------------------------------------------------

Outcome toy_suite() {
    const auto start = Clock::now();
    std::vector<std::string> failures;
    std::size_t checked = 0;
    auto expect = [&](const char* what, double got, double want) {
        ++checked;
        if (!(rel_err(got, want) <= 1e-6)) failures.push_back(fmt::format("{}: got {:.10g}, want {:.10g}", what, got, want));
    };

    const auto toy1 = toy_model(1.0);
    const auto toy2 = toy_model(0.01);
    const auto edge = toy_edge();
    const auto dev1 = toy_devices({0.2, 0.25});
    const auto both = iota_ids(2);

    {
        const Group g{dev1, both};
        const std::vector<UserId> off{0, 1};
        const ConfigEval e = evaluate_config(*toy1, edge, g, 1, std::span<const UserId>(off), 2.1e9, 0.0);
        expect("toy-1 config energy", e.energy, 3.986);
        expect("toy-1 config t_free_next", e.t_free_next, 0.18495238095238095);
        if (!e.feasible()) failures.push_back("toy-1 config reported infeasible");

        const ThresholdList th = edge_freq_thresholds(*toy1, g, 1);
        expect("toy-1 threshold 1", th.thresholds.at(0), 1.5234375e9);
        expect("toy-1 threshold 2", th.thresholds.at(1), 7.70941438e8);

        expect("toy-1 LC", solve_local_only(*toy1, dev1).energy, 1.35);
        expect("toy-1 jdob", jdob_solve(*toy1, edge, g, 0.0).energy, 1.309);
    }
    {
        const auto dev2 = toy_devices({0.2, 0.2});
        const Group g{dev2, both};
        const BatchPlan p = jdob_solve(*toy2, edge, g, 0.0);
        expect("toy-2 jdob energy", p.energy, 0.0642368);
        expect("toy-2 jdob f_e", p.fe, 1.92e9);
        expect("toy-2 no-edge-dvfs", jdob_solve(*toy2, edge, g, 0.0, SolveMode::NoEdgeDvfs).energy, 0.07292);
        expect("toy-2 oracle", brute_force_oracle(*toy2, edge, g, 0.0).energy, 0.0642368);
    }
    {
        const Instance split = toy_instance(0.01, {0.2, 0.6});
        const Instance joint = toy_instance(0.01, {0.2, 0.2});
        const auto s1 = group_users_dp(split, make_inner_solver(Method::Jdob, split.model, split.edge));
        const auto s2 = group_users_dp(joint, make_inner_solver(Method::Jdob, joint.model, joint.edge));
        expect("grouping [0.2, 0.6] total", s1.total_energy, 0.03518075);
        expect("grouping [0.2, 0.2] total", s2.total_energy, 0.0642368);

        // The split alternative for equal deadlines: user B cannot batch
        // after user A's window and falls back to local.
        const std::vector<UserId> a{0};
        const std::vector<UserId> b{1};
        const BatchPlan pa = jdob_solve(*joint.model, joint.edge, Group{joint.devices, a}, 0.0);
        const BatchPlan pb = jdob_solve(*joint.model, joint.edge, Group{joint.devices, b}, pa.t_free_next);
        expect("grouping [0.2, 0.2] split total", pa.energy + pb.energy, 0.69748075);
    }
    const double elapsed = seconds_since(start);
    Outcome out;
    out.pass = failures.empty() && elapsed < 1.0;
    out.detail = fmt::format("{} values checked, {} mismatches, {:.3f} s", checked, failures.size(), elapsed);
    for (const auto& f : failures) out.detail += "\n      " + f;
    return out;
}

// ---------------------------------------------------------------------------

struct RandomRun {
    std::size_t instances = 0;
    std::size_t schedules = 0;
    std::size_t invalid = 0;
    std::size_t errors = 0;
    std::size_t dominance_failures = 0;
    std::size_t dominance_checks = 0;
    std::vector<std::string> notes;
};

RandomRun random_feasibility(std::size_t count) {
    RandomRun run;
    const Method methods[] = {Method::Jdob, Method::LocalOnly, Method::JdobNoEdgeDvfs, Method::JdobBinary,
                              Method::Oracle};
    for (std::size_t i = 0; i < count; ++i) {
        Sampler s(0xfeed0000 + i);
        const Instance inst = random_instance(s);
        ++run.instances;
        double energy[5] = {};
        bool have[5] = {};
        for (std::size_t k = 0; k < 5; ++k) {
            const Method method = methods[k];
            if (method == Method::Oracle && (inst.devices.size() > 4 || inst.model->blocks() > 3)) continue;
            try {
                const Schedule sch = group_users_dp(inst, make_inner_solver(method, inst.model, inst.edge));
                ++run.schedules;
                const auto v = validate_schedule(inst, sch);
                if (!v.empty()) {
                    ++run.invalid;
                    if (run.notes.size() < 5)
                        run.notes.push_back(fmt::format("instance {} {}: {}", i, to_string(method), describe(v.front())));
                }
                energy[k] = sch.total_energy;
                have[k] = true;
            } catch (const std::exception& e) {
                ++run.errors;
                if (run.notes.size() < 5) run.notes.push_back(fmt::format("instance {} {}: {}", i, to_string(method), e.what()));
            }
        }
        if (!have[0]) continue;
        for (std::size_t k = 1; k <= 3; ++k) {
            if (!have[k]) continue;
            ++run.dominance_checks;
            if (!leq_rel(energy[0], energy[k], 1e-12)) {
                ++run.dominance_failures;
                if (run.notes.size() < 10) {
                    run.notes.push_back(fmt::format("instance {}: jdob {:.12g} > {} {:.12g}", i, energy[0],
                                                    to_string(methods[k]), energy[k]));
                }
            }
        }
    }
    return run;
}

Outcome feasibility(const RandomRun& run) {
    Outcome out;
    out.pass = run.invalid == 0 && run.errors == 0 && run.instances == 1000;
    out.detail = fmt::format("{} instances, {} schedules, {} invalid, {} errors", run.instances, run.schedules,
                             run.invalid, run.errors);
    if (!out.pass)
        for (const auto& n : run.notes) out.detail += "\n      " + n;
    return out;
}

Outcome dominance(const RandomRun& run) {
    Outcome out;
    out.pass = run.dominance_failures == 0 && run.errors == 0;
    out.detail = fmt::format("{} comparisons, {} violations", run.dominance_checks, run.dominance_failures);
    if (!out.pass)
        for (const auto& n : run.notes) out.detail += "\n      " + n;
    return out;
}

// ---------------------------------------------------------------------------

Outcome threshold_monotonicity() {
    std::size_t lists = 0;
    std::size_t finite = 0;
    std::size_t bad = 0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
        Sampler s(0x7e5e0000 + i);
        const Instance inst = random_instance(s);
        const auto ids = iota_ids(inst.devices.size());
        const Group g{inst.devices, ids};
        try {
            for (std::size_t nt = 0; nt <= inst.model->blocks(); ++nt) {
                const ThresholdList th = edge_freq_thresholds(*inst.model, g, nt);
                ++lists;
                double prev = std::numeric_limits<double>::infinity();
                for (double t : th.thresholds) {
                    if (t == kNeverOffloads) {
                        if (prev != kNeverOffloads) ++bad;  // sentinels must form a prefix
                        continue;
                    }
                    ++finite;
                    if (prev != kNeverOffloads && !leq_rel(t, prev, 1e-12)) ++bad;
                    prev = t;
                }
            }
        } catch (const std::exception&) {
            ++errors;
        }
    }
    return {bad == 0 && errors == 0,
            fmt::format("{} lists, {} finite thresholds, {} order violations, {} exceptions", lists, finite, bad, errors)};
}

// ---------------------------------------------------------------------------

Outcome oracle_gap() {
    const auto start = Clock::now();
    std::vector<double> gaps;
    std::size_t below = 0;
    std::size_t m1 = 0;
    std::size_t m1_mismatch = 0;
    std::size_t oracle_mismatch = 0;
    std::size_t errors = 0;
    RandomSpec spec;
    spec.max_users = 4;
    spec.max_blocks = 3;
    for (std::size_t i = 0; i < 200; ++i) {
        Sampler s(0x0ac1e000 + i);
        const Instance inst = random_instance(s, spec);
        const auto ids = iota_ids(inst.devices.size());
        const Group g{inst.devices, ids};
        const double t_free = inst.edge.t_free0;
        try {
            const double heur = jdob_solve(*inst.model, inst.edge, g, t_free).energy;
            const double opt = brute_force_oracle(*inst.model, inst.edge, g, t_free).energy;
            const double ref = reference_optimum(*inst.model, inst.edge, inst.devices, t_free).energy;
            if (rel_err(opt, ref) > 1e-9) ++oracle_mismatch;
            if (!leq_rel(opt, heur, 1e-12)) ++below;
            if (inst.devices.size() == 1) {
                ++m1;
                if (rel_err(heur, opt) > 1e-9) ++m1_mismatch;
            }
            gaps.push_back(100.0 * (heur - opt) / opt);
        } catch (const std::exception&) {
            ++errors;
        }
    }
    const double elapsed = seconds_since(start);
    std::sort(gaps.begin(), gaps.end());
    auto pct = [&](double q) { return gaps.empty() ? 0.0 : gaps[static_cast<std::size_t>(q * (gaps.size() - 1))]; };
    const auto exact = std::count_if(gaps.begin(), gaps.end(), [](double g) { return g <= 1e-7; });
    const double mean = gaps.empty() ? 0.0 : std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
    Outcome out;
    out.pass = below == 0 && m1_mismatch == 0 && oracle_mismatch == 0 && errors == 0 && elapsed < 60.0;
    out.detail = fmt::format(
        "{} instances ({} with M=1), E_jdob < E_opt: {}, M=1 mismatches: {}, oracle vs reference mismatches: {}, "
        "errors: {}, {:.2f} s\n      gap %: exact {}/{}, mean {:.4g}, median {:.4g}, p90 {:.4g}, max {:.4g}",
        gaps.size(), m1, below, m1_mismatch, oracle_mismatch, errors, elapsed, exact, gaps.size(), mean, pct(0.5),
        pct(0.9), pct(1.0));
    return out;
}

// ---------------------------------------------------------------------------

Outcome closed_form_frequency() {
    std::size_t cases = 0;
    std::size_t bad = 0;
    double worst = 0.0;
    for (std::size_t i = 0; cases < 200; ++i) {
        Sampler s(0xd200000 + i);
        const std::size_t blocks = s.index(1, 8);
        const std::size_t max_batch = s.index(1, 8);
        const auto model = random_model(s, blocks, max_batch);
        DeviceParams dev = random_device(s, *model, 0.0, 10.0);

        const bool offloader = s.coin(0.7);
        const std::size_t nt = offloader ? s.index(1, blocks) : blocks;
        const Aggregates ag = model->aggregates(nt, offloader ? s.index(1, max_batch) : 0);
        const double work = dev.zeta * ag.device_latency_work;
        // Target frequency on both sides of the box so the clamp is exercised.
        const double target = s.uniform(0.5 * dev.f_min, dev.f_max);
        double budget = work / target;
        DeviceRole role = LocalRole{};
        if (offloader) {
            const std::size_t batch = s.index(1, max_batch);
            const double fe = s.uniform(0.2e9, 2.1e9);
            const Aggregates edge = model->aggregates(nt, batch);
            const double fixed = model->output_bits(nt) / dev.rate + edge.edge_latency_work / fe;
            role = OffloaderRole{nt, fixed + budget, batch, fe};
        } else {
            dev.deadline = budget;
        }
        ++cases;

        const double f_closed = optimal_device_freq(dev, *model, role);
        const double u = ag.device_energy_work;
        const double weight = 1e3 * 2.0 * dev.kappa * u * std::pow(dev.f_max, 3) / work;
        auto objective = [&](double f) {
            return dev.kappa * u * f * f + weight * std::max(0.0, work / f - budget);
        };
        const double f_num = golden_section_min(objective, dev.f_min, dev.f_max);
        const double err = rel_err(f_closed, f_num);
        worst = std::max(worst, err);
        if (err > 1e-3) ++bad;
    }
    return {bad == 0, fmt::format("{} cases, {} beyond 0.1%, worst relative difference {:.3g}", cases, bad, worst)};
}

// ---------------------------------------------------------------------------

Outcome trend() {
    const auto start = Clock::now();
    const nlohmann::json doc = {
        {"model", {{"synthetic", {{"blocks", 10}}}, {"calibration", {{"alpha", 1.0}, {"eta", 0.6}, {"sigma", 0.1}}}}},
        {"devices", nlohmann::json::array({{{"W", 10e6}, {"snr_db", 30.0}}})},
        {"edge", {{"fe_min", 0.2e9}, {"fe_max", 2.1e9}, {"rho", 0.03e9}, {"t_free0", 0.0}}},
        {"beta", {29.5, 30.5}},
        {"trials", 50},
        {"seed", 20240601},
        {"methods", {"jdob"}},
    };
    const Scenario base = parse_scenario(doc);
    const std::size_t users[] = {1, 2, 4, 8, 16};

    std::vector<std::vector<double>> energy;  // [M index][trial]
    std::vector<double> mean_energy;
    std::vector<double> mean_reduction;
    std::size_t non_positive = 0;
    for (std::size_t m : users) {
        const auto records = run_trials(base.with_users(m));
        std::vector<double> e(records.size());
        double reduction = 0.0;
        for (const auto& r : records) {
            e[r.trial] = r.energy_per_user;
            reduction += r.reduction_pct;
            if (m >= 2 && !(r.reduction_pct > 0.0)) ++non_positive;
        }
        mean_energy.push_back(std::accumulate(e.begin(), e.end(), 0.0) / e.size());
        mean_reduction.push_back(reduction / records.size());
        energy.push_back(std::move(e));
    }

    std::size_t pairs = 0;
    std::size_t rising = 0;
    for (std::size_t k = 1; k < energy.size(); ++k) {
        for (std::size_t t = 0; t < energy[k].size(); ++t) {
            ++pairs;
            if (!leq_rel(energy[k][t], energy[k - 1][t], 1e-12)) ++rising;
        }
    }
    bool means_monotone = true;
    for (std::size_t k = 1; k < mean_energy.size(); ++k)
        means_monotone = means_monotone && leq_rel(mean_energy[k], mean_energy[k - 1], 1e-12);
    bool reduction_positive = non_positive == 0;
    for (std::size_t k = 1; k < mean_reduction.size(); ++k) reduction_positive = reduction_positive && mean_reduction[k] > 0.0;
    const double elapsed = seconds_since(start);

    Outcome out;
    out.pass = means_monotone && rising * 20 <= pairs && reduction_positive && elapsed < 300.0;
    out.detail = fmt::format("non-monotone pairs {}/{}, means monotone: {}, {:.2f} s\n      M:", rising, pairs,
                             means_monotone ? "yes" : "no", elapsed);
    for (std::size_t k = 0; k < mean_energy.size(); ++k) {
        out.detail += fmt::format(" {}: {:.4f} mJ/user ({:.2f}% vs LC);", users[k], 1e3 * mean_energy[k],
                                  mean_reduction[k]);
    }
    return out;
}

// ---------------------------------------------------------------------------

Outcome complexity() {
    CalibrationParams cal;
    cal.max_batch = 1000;
    const ModelProfile model = synthetic_model(19, cal);
    const EdgeParams edge = reference_edge();
    const std::size_t k = edge_grid(edge).size();

    const std::size_t sizes[] = {125, 250, 500, 1000};
    std::vector<double> times;
    std::vector<double> ratios;
    for (std::size_t m : sizes) {
        Sampler s(0xc0de + m);
        std::vector<DeviceParams> devices;
        for (std::size_t i = 0; i < m; ++i) {
            DeviceParams d = reference_device();
            d.deadline = deadline_from_beta(d, model, s.uniform(0.0, 10.0));
            devices.push_back(d);
        }
        const auto ids = iota_ids(m);
        const Group g{devices, ids};
        double best = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < 3; ++rep) {
            const auto start = Clock::now();
            const BatchPlan plan = jdob_solve(model, edge, g, 0.0);
            best = std::min(best, seconds_since(start));
            if (plan.members.size() != m) return {false, "plan does not cover the group"};
        }
        times.push_back(best);
        ratios.push_back(best / (static_cast<double>(m) * std::log(static_cast<double>(m))));
    }
    bool envelope = true;
    for (double r : ratios) envelope = envelope && r <= 2.0 * ratios.front();
    Outcome out;
    out.pass = envelope && times.back() < 10.0;
    out.detail = fmt::format("N=19, k={}, t(M=1000) = {:.3f} s; t/(M log M) relative to M=125:", k, times.back());
    for (std::size_t i = 0; i < ratios.size(); ++i)
        out.detail += fmt::format(" {}: {:.2f} ({:.4f} s);", sizes[i], ratios[i] / ratios.front(), times[i]);
    return out;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism(const std::string& cli) {
    const fs::path dir = fs::temp_directory_path() / fmt::format("coinfer_acceptance_{}", ::getpid());
    fs::remove_all(dir);
    fs::create_directories(dir);
    const nlohmann::json doc = {
        {"model", {{"synthetic", {{"blocks", 8}}}, {"calibration", {{"alpha", 1.0}, {"eta", 0.6}, {"sigma", 0.1}}}}},
        {"devices", nlohmann::json::array({{{"W", 10e6}, {"snr_db", 30.0}}, {{"W", 5e6}, {"snr_db", 20.0}}})},
        {"beta", {0.5, 10.0}},
        {"trials", 40},
        {"seed", 424242},
        {"methods", {"lc", "jdob", "jdob-no-edge-dvfs", "jdob-binary"}},
    };
    const fs::path scenario = dir / "scenario.json";
    std::ofstream(scenario) << doc.dump(2);

    std::vector<std::string> outputs;
    const std::pair<const char*, int> runs[] = {{"a", 1}, {"b", 1}, {"c", 8}, {"d", 8}};
    for (const auto& [name, workers] : runs) {
        const fs::path out = dir / name;
        if (!cli.empty()) {
            const std::string cmd = fmt::format("\"{}\" bench \"{}\" --out \"{}\" --workers {} --users 1,3,6 > /dev/null",
                                                cli, scenario.string(), out.string(), workers);
            if (std::system(cmd.c_str()) != 0) return {false, "bench command failed: " + cmd};
        } else {
            Scenario s = parse_scenario(doc);
            RunOptions opt;
            opt.workers = static_cast<std::size_t>(workers);
            emit_reports(run_trials(s, opt), out);
        }
        outputs.push_back(slurp(out / "trials.csv"));
    }
    const bool same = std::all_of(outputs.begin(), outputs.end(), [&](const auto& o) { return o == outputs.front(); });
    const auto rows = std::count(outputs.front().begin(), outputs.front().end(), '\n');
    fs::remove_all(dir);
    return {same && rows > 1, fmt::format("{} runs (workers 1, 1, 8, 8) via {}, {} lines each, identical: {}", outputs.size(),
                                          cli.empty() ? "library" : "CLI", rows, same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    int failed = 0;
    auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("unexpected exception: {}", e.what())};
        }
        if (!o.pass) ++failed;
        fmt::print("[{}] criterion {}: {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
        std::fflush(stdout);
    };

    report(1, "closed-form toy suite", toy_suite);
    RandomRun random;
    report(2, "feasibility on random instances", [&] {
        random = random_feasibility(1000);
        return feasibility(random);
    });
    report(3, "threshold monotonicity", threshold_monotonicity);
    report(4, "dominance over restricted variants and LC", [&] { return dominance(random); });
    report(5, "brute-force oracle", oracle_gap);
    report(6, "closed-form device frequency vs numeric", closed_form_frequency);
    report(7, "trend reproduction on synthetic profile", trend);
    report(8, "complexity smoke", complexity);
    report(9, "determinism", [&] { return determinism(cli); });

    fmt::print("{} of 9 criteria passed\n", 9 - failed);
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
