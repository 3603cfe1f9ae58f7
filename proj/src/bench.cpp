#include "coinfer/bench.hpp"

#include "coinfer/error.hpp"

#include <fmt/format.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace coinfer {

namespace {

constexpr const char* kTrialsHeader = "trial,method,users,beta,energy_per_user_j,total_energy_j,reduction_pct,seed";

std::vector<TrialRecord> run_one(const Scenario& scenario, std::size_t trial, const RunOptions& options) {
    const Instance instance = scenario.instance(trial);
    const double lc_energy = solve_local_only(*instance.model, instance.devices).energy;
    const std::size_t users = instance.devices.size();

    std::vector<TrialRecord> out;
    for (Method method : scenario.methods) {
        const auto start = std::chrono::steady_clock::now();
        const InnerSolver inner = make_inner_solver(method, instance.model, instance.edge, options.caps);
        const Schedule schedule = group_users_dp(instance, inner);
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const std::vector<Violation> violations = validate_schedule(instance, schedule);
        if (!violations.empty()) {
            std::string msg = fmt::format("method {} produced an invalid schedule in trial {}:", to_string(method), trial);
            for (const Violation& v : violations) msg += "\n  " + describe(v);
            throw Error(ErrorKind::Validation, msg);
        }

        TrialRecord rec;
        rec.trial = trial;
        rec.method = method;
        rec.users = users;
        rec.beta = scenario.beta_label();
        rec.total_energy = schedule.total_energy;
        rec.energy_per_user = schedule.total_energy / static_cast<double>(users);
        rec.reduction_pct = lc_energy > 0.0 ? 100.0 * (lc_energy - schedule.total_energy) / lc_energy : 0.0;
        rec.wall_time_s = elapsed;
        rec.seed = trial_seed(scenario.seed, trial);
        out.push_back(std::move(rec));
    }
    return out;
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, fmt::format("{}: cannot open for writing", path.string()));
    return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

}  // namespace

std::string format_number(double value) { return fmt::format("{:.9g}", value); }

std::vector<TrialRecord> run_trials(const Scenario& scenario, const RunOptions& options) {
    const std::size_t trials = scenario.trials;
    std::vector<std::vector<TrialRecord>> per_trial(trials);
    std::vector<std::exception_ptr> errors(trials);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t t = next++; t < trials; t = next++) {
            try {
                per_trial[t] = run_one(scenario, t, options);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(options.workers, trials));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<TrialRecord> out;
    for (auto& recs : per_trial)
        for (auto& r : recs) out.push_back(std::move(r));
    return out;
}

std::vector<SummaryRow> summarize(std::span<const TrialRecord> records) {
    std::vector<SummaryRow> rows;
    std::vector<std::vector<const TrialRecord*>> members;
    for (const TrialRecord& r : records) {
        std::size_t i = 0;
        for (; i < rows.size(); ++i)
            if (rows[i].method == r.method && rows[i].users == r.users && rows[i].beta == r.beta) break;
        if (i == rows.size()) {
            rows.push_back(SummaryRow{r.method, r.users, r.beta});
            members.emplace_back();
        }
        members[i].push_back(&r);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& group = members[i];
        const double n = static_cast<double>(group.size());
        double energy = 0.0;
        double reduction = 0.0;
        for (const TrialRecord* r : group) {
            energy += r->energy_per_user;
            reduction += r->reduction_pct;
        }
        rows[i].trials = group.size();
        rows[i].mean_energy_per_user = energy / n;
        rows[i].mean_reduction_pct = reduction / n;
        double sq = 0.0;
        for (const TrialRecord* r : group) {
            const double d = r->energy_per_user - rows[i].mean_energy_per_user;
            sq += d * d;
        }
        rows[i].stddev_energy_per_user = group.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
    }
    return rows;
}

void emit_reports(std::span<const TrialRecord> records, const std::filesystem::path& out_dir) {
    if (records.empty()) throw Error(ErrorKind::Precondition, "no trial records to report");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorKind::Io, fmt::format("{}: {}", out_dir.string(), ec.message()));

    {
        std::ofstream out = open_output(out_dir / "trials.csv");
        out << kTrialsHeader << '\n';
        for (const TrialRecord& r : records) {
            out << r.trial << ',' << to_string(r.method) << ',' << r.users << ',' << r.beta << ','
                << format_number(r.energy_per_user) << ',' << format_number(r.total_energy) << ','
                << format_number(r.reduction_pct) << ',' << r.seed << '\n';
        }
    }
    {
        std::ofstream out = open_output(out_dir / "timing.csv");
        out << "trial,method,users,beta,wall_time_s\n";
        for (const TrialRecord& r : records) {
            out << r.trial << ',' << to_string(r.method) << ',' << r.users << ',' << r.beta << ','
                << format_number(r.wall_time_s) << '\n';
        }
    }

    const std::vector<SummaryRow> summary = summarize(records);
    {
        std::ofstream out = open_output(out_dir / "summary.csv");
        out << "method,users,beta,trials,mean_energy_per_user_j,stddev_energy_per_user_j,mean_reduction_pct\n";
        for (const SummaryRow& s : summary) {
            out << to_string(s.method) << ',' << s.users << ',' << s.beta << ',' << s.trials << ','
                << format_number(s.mean_energy_per_user) << ',' << format_number(s.stddev_energy_per_user) << ','
                << format_number(s.mean_reduction_pct) << '\n';
        }
    }
    {
        std::ofstream out = open_output(out_dir / "summary.md");
        out << "| method | M | beta | trials | mean energy/user (mJ) | stddev (mJ) | reduction vs LC (%) |\n";
        out << "|---|---:|---|---:|---:|---:|---:|\n";
        for (const SummaryRow& s : summary) {
            out << fmt::format("| {} | {} | {} | {} | {:.4f} | {:.4f} | {:.2f} |\n", to_string(s.method), s.users,
                               s.beta, s.trials, 1e3 * s.mean_energy_per_user, 1e3 * s.stddev_energy_per_user,
                               s.mean_reduction_pct);
        }
    }
}

std::vector<TrialRecord> read_trials_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, fmt::format("{}: cannot open file", path.string()));
    std::string line;
    if (!std::getline(in, line) || line != kTrialsHeader) {
        throw Error(ErrorKind::Parse, fmt::format("{}: unexpected header", path.string()));
    }
    std::vector<TrialRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 8) throw Error(ErrorKind::Parse, fmt::format("{}:{}: expected 8 columns", path.string(), line_no));
        try {
            TrialRecord r;
            r.trial = std::stoull(cells[0]);
            const auto method = parse_method(cells[1]);
            if (!method) throw Error(ErrorKind::Parse, "unknown method " + cells[1]);
            r.method = *method;
            r.users = std::stoull(cells[2]);
            r.beta = cells[3];
            r.energy_per_user = std::stod(cells[4]);
            r.total_energy = std::stod(cells[5]);
            r.reduction_pct = std::stod(cells[6]);
            r.seed = std::stoull(cells[7]);
            out.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw Error(ErrorKind::Parse, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
        }
    }
    return out;
}

}  // namespace coinfer
