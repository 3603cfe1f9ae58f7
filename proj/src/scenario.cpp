#include "coinfer/scenario.hpp"

#include "coinfer/error.hpp"
#include "coinfer/profile.hpp"

#include <fmt/format.h>

#include <fstream>
#include <random>
#include <sstream>

namespace coinfer {

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
    throw Error(ErrorKind::Schema, fmt::format("{}: {}", path, msg));
}

double number_at(const json& obj, const char* key, const std::string& path, std::optional<double> fallback = {}) {
    const std::string field = path + "." + key;
    if (!obj.contains(key) || obj.at(key).is_null()) {
        if (fallback) return *fallback;
        schema_error(field, "required number is missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) schema_error(field, fmt::format("expected a number, got {}", v.type_name()));
    return v.get<double>();
}

std::vector<double> number_list(const json& obj, const char* key, const std::string& path, bool required) {
    const std::string field = path + "." + key;
    if (!obj.contains(key) || obj.at(key).is_null()) {
        if (required) schema_error(field, "required array is missing");
        return {};
    }
    const json& v = obj.at(key);
    if (!v.is_array()) schema_error(field, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) schema_error(fmt::format("{}[{}]", field, i), "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::vector<std::vector<double>> number_table(const json& obj, const char* key, const std::string& path) {
    const std::string field = path + "." + key;
    const json& v = obj.at(key);
    if (!v.is_array()) schema_error(field, "expected an array of arrays");
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < v.size(); ++n) {
        if (!v[n].is_array()) schema_error(fmt::format("{}[{}]", field, n), "expected an array of numbers");
        std::vector<double> row;
        for (std::size_t b = 0; b < v[n].size(); ++b) {
            if (!v[n][b].is_number()) schema_error(fmt::format("{}[{}][{}]", field, n, b), "expected a number");
            row.push_back(v[n][b].get<double>());
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, fmt::format("{}: cannot open file", path.string()));
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, fmt::format("{}: {}", path.string(), e.what()));
    }
}

DeviceParams parse_device(const json& obj, const std::string& path, bool& has_deadline) {
    if (!obj.is_object()) schema_error(path, "expected an object");
    const DeviceParams defaults = reference_device();
    DeviceParams dev;
    dev.zeta = number_at(obj, "zeta", path, defaults.zeta);
    dev.kappa = number_at(obj, "kappa", path, defaults.kappa);
    dev.f_min = number_at(obj, "f_min", path, defaults.f_min);
    dev.f_max = number_at(obj, "f_max", path, defaults.f_max);
    dev.p_u = number_at(obj, "p_u", path, defaults.p_u);

    auto link_rate = [&](const json& link, const std::string& link_path) {
        const double w = number_at(link, "W", link_path);
        const double snr = number_at(link, "snr_db", link_path);
        try {
            return transmission_rate(w, snr);
        } catch (const Error& e) {
            throw Error(ErrorKind::Invariant, fmt::format("{}.W: {}", link_path, e.what()));
        }
    };
    if (obj.contains("R") && obj.at("R").is_object()) {
        dev.rate = link_rate(obj.at("R"), path + ".R");
    } else if (obj.contains("R") && !obj.at("R").is_null()) {
        dev.rate = number_at(obj, "R", path);
    } else if (obj.contains("W") || obj.contains("snr_db")) {
        dev.rate = link_rate(obj, path);
    } else {
        dev.rate = defaults.rate;
    }

    has_deadline = obj.contains("T_d") && !obj.at("T_d").is_null();
    dev.deadline = has_deadline ? number_at(obj, "T_d", path) : 0.0;
    return dev;
}

std::optional<BetaSpec> parse_beta(const json& doc) {
    if (!doc.contains("beta") || doc.at("beta").is_null()) return std::nullopt;
    const json& v = doc.at("beta");
    BetaSpec spec;
    if (v.is_number()) {
        spec.lo = spec.hi = v.get<double>();
    } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        spec.lo = v[0].get<double>();
        spec.hi = v[1].get<double>();
    } else {
        schema_error("beta", "expected a number, a [lo, hi] pair, or null");
    }
    if (!(spec.lo >= 0.0)) throw Error(ErrorKind::Invariant, "beta: must be >= 0");
    if (!(spec.hi >= spec.lo)) throw Error(ErrorKind::Invariant, "beta: upper bound below lower bound");
    return spec;
}

std::shared_ptr<const ModelProfile> parse_model(const json& doc, const std::filesystem::path& base_dir,
                                                const std::vector<DeviceParams>& devices, const EdgeParams& edge) {
    if (!doc.contains("model")) schema_error("model", "required object is missing");
    json model = doc.at("model");
    if (model.is_string()) model = read_json(base_dir / model.get<std::string>());
    if (!model.is_object()) schema_error("model", "expected an object or a path to a model file");

    BlockProfile blocks;
    if (model.contains("synthetic")) {
        const json& syn = model.at("synthetic");
        const double n = number_at(syn, "blocks", "model.synthetic", 10.0);
        if (n < 1 || n != static_cast<double>(static_cast<std::size_t>(n))) {
            schema_error("model.synthetic.blocks", "expected a positive integer");
        }
        try {
            blocks = reference_block_profile(static_cast<std::size_t>(n));
        } catch (const Error& e) {
            throw Error(ErrorKind::Invariant, fmt::format("model.synthetic.blocks: {}", e.what()));
        }
    } else {
        blocks.workload = number_list(model, "A", "model", true);
        blocks.output_bits = number_list(model, "O", "model", true);
    }
    if (model.contains("g")) blocks.latency_factor = number_list(model, "g", "model", false);
    if (model.contains("q")) blocks.energy_factor = number_list(model, "q", "model", false);

    CoefficientTable latency;
    CoefficientTable energy;
    if (model.contains("calibration")) {
        const json& cal_doc = model.at("calibration");
        CalibrationParams cal;
        cal.alpha = number_at(cal_doc, "alpha", "model.calibration", 1.0);
        cal.eta = number_at(cal_doc, "eta", "model.calibration", 0.6);
        cal.sigma = number_at(cal_doc, "sigma", "model.calibration", 0.1);
        const double default_bmax = static_cast<double>(std::max<std::size_t>(devices.size(), 64));
        const double bmax = number_at(cal_doc, "B_max", "model.calibration", default_bmax);
        if (bmax < 1 || bmax != static_cast<double>(static_cast<std::size_t>(bmax))) {
            schema_error("model.calibration.B_max", "expected a positive integer");
        }
        cal.max_batch = static_cast<std::size_t>(bmax);
        if (blocks.workload.empty()) throw Error(ErrorKind::Invariant, "model.A: at least one sub-task is required");
        try {
            std::tie(latency, energy) = calibrate_edge_profile(devices.front(), blocks, cal, edge.fe_max);
        } catch (const Error& e) {
            throw Error(ErrorKind::Invariant, fmt::format("model.calibration: {}", e.what()));
        }
    } else if (model.contains("d") && model.contains("c")) {
        latency = CoefficientTable::from_rows(number_table(model, "d", "model"));
        energy = CoefficientTable::from_rows(number_table(model, "c", "model"));
    } else {
        schema_error("model", "either d and c tables or a calibration block is required");
    }
    return std::make_shared<const ModelProfile>(std::move(blocks), std::move(latency), std::move(energy));
}

std::vector<DeviceParams> materialize(const Scenario& s, std::size_t trial) {
    std::vector<DeviceParams> devices = s.devices;
    if (!s.beta) return devices;
    std::mt19937_64 rng(trial_seed(s.seed, trial));
    for (std::size_t m = 0; m < devices.size(); ++m) {
        if (s.explicit_deadline[m]) continue;
        double beta = s.beta->lo;
        if (s.beta->is_range()) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            beta = s.beta->lo + (s.beta->hi - s.beta->lo) * u;
        }
        devices[m].deadline = deadline_from_beta(devices[m], *s.model, beta);
    }
    return devices;
}

std::string format_short(double x) { return fmt::format("{:.9g}", x); }

}  // namespace

std::string BetaSpec::label() const {
    if (!is_range()) return format_short(lo);
    return format_short(lo) + ":" + format_short(hi);
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) noexcept {
    auto splitmix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return splitmix(splitmix(seed) + trial);
}

Instance Scenario::instance(std::size_t trial) const {
    return Instance{model, materialize(*this, trial), edge};
}

std::string Scenario::beta_label() const {
    const bool any_beta = std::any_of(explicit_deadline.begin(), explicit_deadline.end(), [](char e) { return !e; });
    if (!beta || !any_beta) return "explicit";
    return beta->label();
}

Scenario Scenario::with_users(std::size_t users) const {
    if (users == 0) throw Error(ErrorKind::InvalidParameter, "user count must be positive");
    if (users > model->max_batch()) {
        throw Error(ErrorKind::Invariant,
                    fmt::format("{} users exceed the profiled batch size B_max={}", users, model->max_batch()));
    }
    Scenario out = *this;
    out.devices.clear();
    out.explicit_deadline.clear();
    for (std::size_t m = 0; m < users; ++m) {
        out.devices.push_back(devices[m % devices.size()]);
        out.explicit_deadline.push_back(explicit_deadline[m % devices.size()]);
    }
    out.devices = materialize(out, 0);
    return out;
}

Scenario Scenario::with_beta(const BetaSpec& spec) const {
    if (!(spec.lo >= 0.0) || !(spec.hi >= spec.lo)) throw Error(ErrorKind::InvalidParameter, "invalid beta range");
    Scenario out = *this;
    out.beta = spec;
    std::fill(out.explicit_deadline.begin(), out.explicit_deadline.end(), 0);
    out.devices = materialize(out, 0);
    return out;
}

Scenario parse_scenario(const json& doc, const std::filesystem::path& base_dir) {
    if (!doc.is_object()) schema_error("$", "scenario must be a JSON object");
    try {
        Scenario s;

        if (doc.contains("edge") && !doc.at("edge").is_null()) {
            const json& e = doc.at("edge");
            const EdgeParams defaults = reference_edge();
            s.edge.fe_min = number_at(e, "fe_min", "edge", defaults.fe_min);
            s.edge.fe_max = number_at(e, "fe_max", "edge", defaults.fe_max);
            s.edge.rho = number_at(e, "rho", "edge", defaults.rho);
            s.edge.t_free0 = number_at(e, "t_free0", "edge", defaults.t_free0);
        } else {
            s.edge = reference_edge();
        }
        validate_edge(s.edge, "edge");

        if (!doc.contains("devices") || !doc.at("devices").is_array() || doc.at("devices").empty()) {
            schema_error("devices", "expected a non-empty array");
        }
        const json& devs = doc.at("devices");
        for (std::size_t m = 0; m < devs.size(); ++m) {
            bool has_deadline = false;
            s.devices.push_back(parse_device(devs[m], fmt::format("devices[{}]", m), has_deadline));
            s.explicit_deadline.push_back(has_deadline ? 1 : 0);
        }

        s.beta = parse_beta(doc);
        for (std::size_t m = 0; m < s.devices.size(); ++m) {
            if (!s.explicit_deadline[m] && !s.beta) {
                schema_error(fmt::format("devices[{}].T_d", m), "deadline missing and no beta given");
            }
        }

        s.model = parse_model(doc, base_dir, s.devices, s.edge);
        if (s.model->max_batch() < s.devices.size()) {
            throw Error(ErrorKind::Invariant, fmt::format("model.d: B_max={} is below the number of users M={}",
                                                          s.model->max_batch(), s.devices.size()));
        }

        if (doc.contains("trials")) {
            const json& t = doc.at("trials");
            if (!t.is_number_integer() || t.get<long long>() < 1) schema_error("trials", "expected a positive integer");
            s.trials = t.get<std::size_t>();
        }
        if (doc.contains("seed")) {
            const json& t = doc.at("seed");
            if (!t.is_number_integer()) schema_error("seed", "expected an integer");
            s.seed = t.is_number_unsigned() ? t.get<std::uint64_t>() : static_cast<std::uint64_t>(t.get<long long>());
        }
        if (doc.contains("methods")) {
            const json& ms = doc.at("methods");
            if (!ms.is_array() || ms.empty()) schema_error("methods", "expected a non-empty array of method names");
            s.methods.clear();
            for (std::size_t i = 0; i < ms.size(); ++i) {
                const auto name = ms[i].is_string() ? ms[i].get<std::string>() : std::string{};
                const auto method = parse_method(name);
                if (!method) {
                    schema_error(fmt::format("methods[{}]", i),
                                 "expected one of jdob, lc, jdob-no-edge-dvfs, jdob-binary, oracle");
                }
                s.methods.push_back(*method);
            }
        }

        s.devices = materialize(s, 0);
        for (std::size_t m = 0; m < s.devices.size(); ++m)
            validate_device(s.devices[m], *s.model, fmt::format("devices[{}]", m));
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Schema, e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    return parse_scenario(read_json(path), path.parent_path());
}

nlohmann::json model_to_json(const ModelProfile& model) {
    const BlockProfile& p = model.block_profile();
    return json{
        {"A", p.workload},
        {"O", p.output_bits},
        {"g", p.latency_factor},
        {"q", p.energy_factor},
        {"d", model.edge_latency_table().rows()},
        {"c", model.edge_energy_table().rows()},
    };
}

}  // namespace coinfer
