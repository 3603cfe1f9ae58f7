#include "coinfer/baselines.hpp"
#include "coinfer/bench.hpp"
#include "coinfer/error.hpp"
#include "coinfer/profile.hpp"
#include "coinfer/scenario.hpp"
#include "coinfer/schedule.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

namespace {

using namespace coinfer;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitBadInput = 2;

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InfeasibleConfiguration:
    case ErrorKind::InfeasibleGroup:
    case ErrorKind::InfeasibleUser:
    case ErrorKind::Validation:
        return kExitFailed;
    default:
        return kExitBadInput;
    }
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, fmt::format("{}: cannot open for writing", path.string()));
    out << doc.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, fmt::format("{}: cannot open file", path.string()));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Parse, fmt::format("{}: {}", path.string(), e.what()));
    }
}

void print_violations(const std::vector<Violation>& violations) {
    for (const Violation& v : violations) fmt::print(stderr, "violation: {}\n", describe(v));
}

std::vector<UserId> all_users(std::size_t count) {
    std::vector<UserId> ids(count);
    std::iota(ids.begin(), ids.end(), UserId{0});
    return ids;
}

BetaSpec parse_beta(const std::string& text) {
    try {
        const auto colon = text.find(':');
        if (colon == std::string::npos) {
            const double b = std::stod(text);
            return {b, b};
        }
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::logic_error&) {
        throw Error(ErrorKind::Parse, fmt::format("--beta: cannot parse '{}'", text));
    }
}

int cmd_solve(const std::string& scenario_path, const std::string& method_name, const std::string& out_dir) {
    const Scenario scenario = load_scenario(scenario_path);
    const auto method = parse_method(method_name);
    if (!method) throw Error(ErrorKind::Parse, fmt::format("--method: unknown method '{}'", method_name));

    const Instance instance = scenario.instance(0);
    const Schedule schedule = group_users_dp(instance, make_inner_solver(*method, instance.model, instance.edge));
    const auto violations = validate_schedule(instance, schedule);

    const nlohmann::json doc = schedule_to_json(schedule);
    if (out_dir.empty()) {
        std::cout << doc.dump(2) << '\n';
    } else {
        write_json(doc, std::filesystem::path(out_dir) / "schedule.json");
    }
    const double lc = solve_local_only(*instance.model, instance.devices).energy;
    fmt::print(stderr, "method {}: {} users, {} groups, total energy {} J (LC {} J)\n", to_string(*method),
               instance.devices.size(), schedule.groups.size(), format_number(schedule.total_energy),
               format_number(lc));
    if (!violations.empty()) {
        print_violations(violations);
        return kExitFailed;
    }
    return kExitOk;
}

int cmd_bench(const std::string& scenario_path, const std::string& out_dir, std::size_t workers,
              const std::vector<std::size_t>& users, const std::vector<std::string>& betas) {
    const Scenario base = load_scenario(scenario_path);
    std::vector<Scenario> variants;
    std::vector<Scenario> by_beta;
    if (betas.empty()) {
        by_beta.push_back(base);
    } else {
        for (const auto& b : betas) by_beta.push_back(base.with_beta(parse_beta(b)));
    }
    for (const Scenario& s : by_beta) {
        if (users.empty()) {
            variants.push_back(s);
        } else {
            for (std::size_t m : users) variants.push_back(s.with_users(m));
        }
    }

    RunOptions options;
    options.workers = workers;
    std::vector<TrialRecord> records;
    for (const Scenario& s : variants) {
        auto part = run_trials(s, options);
        records.insert(records.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    emit_reports(records, out_dir);
    for (const SummaryRow& row : summarize(records)) {
        fmt::print("{:<18} M={:<5} beta={:<12} E/user={} J reduction={}%\n", to_string(row.method), row.users,
                   row.beta, format_number(row.mean_energy_per_user), format_number(row.mean_reduction_pct));
    }
    return kExitOk;
}

int cmd_oracle(const std::string& scenario_path, const OracleCaps& caps) {
    const Scenario scenario = load_scenario(scenario_path);
    const Instance instance = scenario.instance(0);
    const auto ids = all_users(instance.devices.size());
    const Group group{instance.devices, ids};
    const double t_free = instance.edge.t_free0;

    const OracleResult opt = brute_force_oracle(*instance.model, instance.edge, group, t_free, caps);
    const BatchPlan heur = jdob_solve(*instance.model, instance.edge, group, t_free);
    const double gap = opt.energy > 0.0 ? 100.0 * (heur.energy - opt.energy) / opt.energy : 0.0;

    fmt::print("search size: {}\n", opt.search_size);
    fmt::print("oracle: E={} J n_tilde={} offload={} f_e={} Hz\n", format_number(opt.energy), opt.witness.n_tilde,
               opt.witness.offload_set.size(), format_number(opt.witness.fe));
    fmt::print("jdob:   E={} J n_tilde={} offload={} f_e={} Hz\n", format_number(heur.energy), heur.n_tilde,
               heur.offload_set.size(), format_number(heur.fe));
    fmt::print("gap: {}%\n", format_number(gap));
    return kExitOk;
}

int cmd_gen_profile(double alpha, double eta, double sigma, std::size_t blocks, std::size_t bmax,
                    const std::string& out) {
    CalibrationParams cal;
    cal.alpha = alpha;
    cal.eta = eta;
    cal.sigma = sigma;
    cal.max_batch = bmax;
    const ModelProfile model = synthetic_model(blocks, cal);
    write_json(model_to_json(model), out);
    return kExitOk;
}

int cmd_validate(const std::string& scenario_path, const std::string& schedule_path) {
    const Scenario scenario = load_scenario(scenario_path);
    const Instance instance = scenario.instance(0);
    Schedule schedule;
    try {
        schedule = schedule_from_json(read_json(schedule_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Schema, fmt::format("{}: {}", schedule_path, e.what()));
    }
    const auto violations = validate_schedule(instance, schedule);
    if (!violations.empty()) {
        print_violations(violations);
        fmt::print("invalid: {} violation(s)\n", violations.size());
        return kExitFailed;
    }
    fmt::print("valid: total energy {} J\n", format_number(schedule.total_energy));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-minimizing scheduler for multi-user device-edge co-inference"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string method_name = "jdob";
    std::string out_dir;
    auto* solve = app.add_subcommand("solve", "Schedule one scenario and export the schedule");
    solve->add_option("scenario", scenario_path, "Scenario JSON")->required();
    solve->add_option("--method", method_name, "jdob, lc, jdob-no-edge-dvfs, jdob-binary or oracle");
    solve->add_option("--out", out_dir, "Directory for schedule.json (default: stdout)");

    std::size_t workers = 1;
    std::vector<std::size_t> users;
    std::vector<std::string> betas;
    auto* bench = app.add_subcommand("bench", "Run seeded trials and write CSV reports");
    bench->add_option("scenario", scenario_path, "Scenario JSON")->required();
    bench->add_option("--out", out_dir, "Report directory")->required();
    bench->add_option("--workers", workers, "Parallel trial workers")->check(CLI::PositiveNumber);
    bench->add_option("--users", users, "Override the number of users (repeatable)")->delimiter(',');
    bench->add_option("--beta", betas, "Override deadlines by beta or lo:hi range (repeatable)")->delimiter(',');

    OracleCaps caps;
    auto* oracle = app.add_subcommand("oracle", "Compare J-DOB with exhaustive search on a small scenario");
    oracle->add_option("scenario", scenario_path, "Scenario JSON")->required();
    oracle->add_option("--cap-users", caps.max_users, "Largest number of users searched");
    oracle->add_option("--cap-blocks", caps.max_blocks, "Largest number of blocks searched");

    double alpha = 1.0;
    double eta = 0.6;
    double sigma = 0.1;
    std::size_t blocks = 10;
    std::size_t bmax = 64;
    std::string profile_out;
    auto* gen = app.add_subcommand("gen-profile", "Write a calibrated synthetic model profile");
    gen->add_option("--alpha", alpha, "Local/edge batch-1 latency ratio at max frequency");
    gen->add_option("--eta", eta, "Local/edge batch-1 power ratio at max frequency");
    gen->add_option("--sigma", sigma, "Per-sample batch growth, in (0, 1]");
    gen->add_option("--blocks", blocks, "Number of blocks (1-20)");
    gen->add_option("--bmax", bmax, "Largest tabulated batch size")->check(CLI::PositiveNumber);
    gen->add_option("--out", profile_out, "Output JSON")->required();

    std::string schedule_path;
    auto* validate = app.add_subcommand("validate", "Check a schedule against a scenario");
    validate->add_option("scenario", scenario_path, "Scenario JSON")->required();
    validate->add_option("schedule", schedule_path, "Schedule JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitBadInput;
    }

    try {
        if (*solve) return cmd_solve(scenario_path, method_name, out_dir);
        if (*bench) return cmd_bench(scenario_path, out_dir, workers, users, betas);
        if (*oracle) return cmd_oracle(scenario_path, caps);
        if (*gen) return cmd_gen_profile(alpha, eta, sigma, blocks, bmax, profile_out);
        if (*validate) return cmd_validate(scenario_path, schedule_path);
    } catch (const Error& e) {
        fmt::print(stderr, "error ({}): {}\n", to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitBadInput;
    }
    return kExitBadInput;
}
