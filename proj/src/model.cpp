#include "coinfer/model.hpp"

#include "coinfer/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numeric>

namespace coinfer {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::InfeasibleConfiguration: return "infeasible-configuration";
    case ErrorKind::InfeasibleGroup: return "infeasible-group";
    case ErrorKind::InfeasibleUser: return "infeasible-user";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Schema: return "schema-violation";
    case ErrorKind::Invariant: return "invariant-violation";
    case ErrorKind::CapExceeded: return "cap-exceeded";
    case ErrorKind::Validation: return "validation-failure";
    case ErrorKind::Precondition: return "precondition-violation";
    case ErrorKind::Io: return "io-error";
    }
    return "unknown";
}

namespace {

[[noreturn]] void invariant(const std::string& msg) { throw Error(ErrorKind::Invariant, msg); }

bool leq(double lhs, double rhs) { return lhs <= rhs + 1e-12 * std::max(std::abs(lhs), std::abs(rhs)); }

void check_table(const CoefficientTable& table, std::size_t blocks, const char* name) {
    if (table.blocks() != blocks) {
        invariant(fmt::format("model.{}: expected {} rows, got {}", name, blocks, table.blocks()));
    }
    if (table.max_batch() < 1) {
        invariant(fmt::format("model.{}: table must cover at least batch size 1", name));
    }
    for (std::size_t n = 1; n <= blocks; ++n) {
        for (std::size_t b = 1; b <= table.max_batch(); ++b) {
            const double value = table.at(n, b);
            if (!(value > 0.0) || !std::isfinite(value)) {
                invariant(fmt::format("model.{}[{}][{}]: coefficient must be positive, got {}", name,
                                      n - 1, b - 1, value));
            }
            if (b == 1) continue;
            const double prev = table.at(n, b - 1);
            if (!leq(prev, value)) {
                invariant(fmt::format("model.{}[{}][{}]: batch cost decreases with batch size", name,
                                      n - 1, b - 1));
            }
            if (!leq(value / static_cast<double>(b), prev / static_cast<double>(b - 1))) {
                invariant(fmt::format("model.{}[{}][{}]: per-sample cost increases with batch size",
                                      name, n - 1, b - 1));
            }
        }
    }
}

}  // namespace

CoefficientTable::CoefficientTable(std::size_t blocks, std::size_t max_batch, double fill)
    : blocks_(blocks), max_batch_(max_batch), values_(blocks * max_batch, fill) {}

CoefficientTable CoefficientTable::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t width = rows.empty() ? 0 : rows.front().size();
    CoefficientTable table(rows.size(), width);
    for (std::size_t n = 0; n < rows.size(); ++n) {
        if (rows[n].size() != width) {
            throw Error(ErrorKind::Schema,
                        fmt::format("coefficient row {} has {} entries, expected {}", n, rows[n].size(), width));
        }
        for (std::size_t b = 0; b < width; ++b) table.at(n + 1, b + 1) = rows[n][b];
    }
    return table;
}

std::vector<std::vector<double>> CoefficientTable::rows() const {
    std::vector<std::vector<double>> out(blocks_, std::vector<double>(max_batch_));
    for (std::size_t n = 1; n <= blocks_; ++n)
        for (std::size_t b = 1; b <= max_batch_; ++b) out[n - 1][b - 1] = at(n, b);
    return out;
}

std::size_t CoefficientTable::index(std::size_t n, std::size_t b) const {
    if (n < 1 || n > blocks_ || b < 1 || b > max_batch_) {
        throw Error(ErrorKind::InvalidParameter,
                    fmt::format("coefficient index (n={}, b={}) outside table {}x{}", n, b, blocks_, max_batch_));
    }
    return (n - 1) * max_batch_ + (b - 1);
}

ModelProfile::ModelProfile(BlockProfile blocks, CoefficientTable edge_latency, CoefficientTable edge_energy)
    : profile_(std::move(blocks)), edge_latency_(std::move(edge_latency)), edge_energy_(std::move(edge_energy)) {
    const std::size_t n_blocks = profile_.blocks();
    if (n_blocks < 1) invariant("model.A: at least one sub-task is required");
    if (profile_.output_bits.size() != n_blocks + 1) {
        invariant(fmt::format("model.O: expected {} entries (O_0..O_N), got {}", n_blocks + 1,
                              profile_.output_bits.size()));
    }
    if (profile_.latency_factor.empty()) profile_.latency_factor.assign(n_blocks, 1.0);
    if (profile_.energy_factor.empty()) profile_.energy_factor.assign(n_blocks, 1.0);
    if (profile_.latency_factor.size() != n_blocks) invariant("model.g: length must equal len(A)");
    if (profile_.energy_factor.size() != n_blocks) invariant("model.q: length must equal len(A)");
    for (std::size_t i = 0; i < n_blocks; ++i) {
        if (!(profile_.workload[i] > 0.0) || !std::isfinite(profile_.workload[i]))
            invariant(fmt::format("model.A[{}]: workload must be positive", i));
        if (!(profile_.latency_factor[i] > 0.0)) invariant(fmt::format("model.g[{}]: must be positive", i));
        if (!(profile_.energy_factor[i] > 0.0)) invariant(fmt::format("model.q[{}]: must be positive", i));
    }
    for (std::size_t i = 0; i <= n_blocks; ++i) {
        if (!(profile_.output_bits[i] >= 0.0) || !std::isfinite(profile_.output_bits[i]))
            invariant(fmt::format("model.O[{}]: output size must be non-negative", i));
    }
    check_table(edge_latency_, n_blocks, "d");
    check_table(edge_energy_, n_blocks, "c");
    if (edge_energy_.max_batch() != edge_latency_.max_batch()) invariant("model.c: must have the same shape as model.d");

    prefix_u_.assign(n_blocks + 1, 0.0);
    prefix_v_.assign(n_blocks + 1, 0.0);
    for (std::size_t n = 1; n <= n_blocks; ++n) {
        prefix_u_[n] = prefix_u_[n - 1] + energy_factor(n) * workload(n);
        prefix_v_[n] = prefix_v_[n - 1] + latency_factor(n) * workload(n);
    }
    const std::size_t width = max_batch() + 1;
    suffix_psi_.assign((n_blocks + 1) * width, 0.0);
    suffix_phi_.assign((n_blocks + 1) * width, 0.0);
    for (std::size_t b = 1; b < width; ++b) {
        for (std::size_t n = n_blocks; n-- > 0;) {
            // suffix over blocks n+1..N
            suffix_psi_[n * width + b] = suffix_psi_[(n + 1) * width + b] + edge_energy_.at(n + 1, b) * workload(n + 1);
            suffix_phi_[n * width + b] = suffix_phi_[(n + 1) * width + b] + edge_latency_.at(n + 1, b) * workload(n + 1);
        }
    }
}

double ModelProfile::workload(std::size_t n) const {
    if (n == 0) return 0.0;
    return profile_.workload.at(n - 1);
}

double ModelProfile::output_bits(std::size_t n) const { return profile_.output_bits.at(n); }

double ModelProfile::latency_factor(std::size_t n) const { return profile_.latency_factor.at(n - 1); }

double ModelProfile::energy_factor(std::size_t n) const { return profile_.energy_factor.at(n - 1); }

double ModelProfile::edge_latency_coeff(std::size_t n, std::size_t b) const { return edge_latency_.at(n, b); }

double ModelProfile::edge_energy_coeff(std::size_t n, std::size_t b) const { return edge_energy_.at(n, b); }

Aggregates ModelProfile::aggregates(std::size_t n_tilde, std::size_t batch) const {
    if (n_tilde > blocks() || batch > max_batch()) {
        throw Error(ErrorKind::InvalidParameter,
                    fmt::format("aggregates: n_tilde={} (N={}), batch={} (B_max={})", n_tilde, blocks(), batch,
                                max_batch()));
    }
    const std::size_t cell = n_tilde * (max_batch() + 1) + batch;
    return Aggregates{prefix_u_[n_tilde], prefix_v_[n_tilde], suffix_psi_[cell], suffix_phi_[cell]};
}

double transmission_rate(double bandwidth_hz, double snr_db) {
    if (!(bandwidth_hz > 0.0)) {
        throw Error(ErrorKind::InvalidParameter, fmt::format("bandwidth must be positive, got {}", bandwidth_hz));
    }
    return bandwidth_hz * std::log2(1.0 + std::pow(10.0, snr_db / 10.0));
}

double min_local_latency(const DeviceParams& device, const ModelProfile& model) {
    const double v_full = model.aggregates(model.blocks(), 0).device_latency_work;
    return device.zeta * v_full / device.f_max;
}

double deadline_from_beta(const DeviceParams& device, const ModelProfile& model, double beta) {
    if (!(beta >= 0.0)) throw Error(ErrorKind::InvalidParameter, fmt::format("beta must be >= 0, got {}", beta));
    return (1.0 + beta) * min_local_latency(device, model);
}

double beta_from_deadline(const DeviceParams& device, const ModelProfile& model, double deadline) {
    return deadline / min_local_latency(device, model) - 1.0;
}

std::pair<CoefficientTable, CoefficientTable> calibrate_edge_profile(
    const DeviceParams& device, const BlockProfile& blocks, const CalibrationParams& cal, double fe_max) {
    if (!(cal.sigma > 0.0 && cal.sigma <= 1.0)) {
        throw Error(ErrorKind::InvalidParameter, fmt::format("calibration.sigma must lie in (0, 1], got {}", cal.sigma));
    }
    if (!(cal.alpha > 0.0)) throw Error(ErrorKind::InvalidParameter, "calibration.alpha must be positive");
    if (!(cal.eta > 0.0)) throw Error(ErrorKind::InvalidParameter, "calibration.eta must be positive");
    if (cal.max_batch < 1) throw Error(ErrorKind::InvalidParameter, "calibration.B_max must be >= 1");
    if (!(fe_max > 0.0)) throw Error(ErrorKind::InvalidParameter, "fe_max must be positive");

    const std::size_t n_blocks = blocks.blocks();
    auto factor = [](const std::vector<double>& v, std::size_t i) { return v.empty() ? 1.0 : v.at(i); };

    CoefficientTable latency(n_blocks, cal.max_batch);
    CoefficientTable energy(n_blocks, cal.max_batch);
    const double freq_ratio3 = std::pow(device.f_max / fe_max, 3.0);
    for (std::size_t n = 1; n <= n_blocks; ++n) {
        const double g = factor(blocks.latency_factor, n - 1);
        const double q = factor(blocks.energy_factor, n - 1);
        // Edge batch-1 time per block = local time at f_max / alpha.
        const double d1 = device.zeta * g * fe_max / (cal.alpha * device.f_max);
        // Edge batch-1 power (c/d) fe_max^3 = local power kappa q f_max^3 / (zeta g) / eta.
        const double c1 = d1 * device.kappa * q * freq_ratio3 / (cal.eta * device.zeta * g);
        for (std::size_t b = 1; b <= cal.max_batch; ++b) {
            const double growth = 1.0 + cal.sigma * static_cast<double>(b - 1);
            latency.at(n, b) = d1 * growth;
            energy.at(n, b) = c1 * growth;
        }
    }
    return {std::move(latency), std::move(energy)};
}

void validate_device(const DeviceParams& device, const ModelProfile& model, const std::string& path) {
    auto fail = [&](const std::string& field, const std::string& msg) {
        throw Error(ErrorKind::Invariant, fmt::format("{}.{}: {}", path, field, msg));
    };
    if (!(device.zeta > 0.0)) fail("zeta", "must be positive");
    if (!(device.kappa > 0.0)) fail("kappa", "must be positive");
    if (!(device.f_min > 0.0)) fail("f_min", "must be positive");
    if (!(device.f_max >= device.f_min)) fail("f_max", "must be >= f_min");
    if (!(device.rate > 0.0)) fail("R", "uplink rate must be positive");
    if (!(device.p_u >= 0.0)) fail("p_u", "must be non-negative");
    if (!(device.deadline > 0.0)) fail("T_d", "deadline must be positive");
    const double fastest = min_local_latency(device, model);
    if (fastest > device.deadline * (1.0 + kFeasibilitySlack)) {
        fail("T_d", fmt::format("deadline {} s is below the minimum local latency {} s", device.deadline, fastest));
    }
}

void validate_edge(const EdgeParams& edge, const std::string& path) {
    auto fail = [&](const std::string& field, const std::string& msg) {
        throw Error(ErrorKind::Invariant, fmt::format("{}.{}: {}", path, field, msg));
    };
    if (!(edge.fe_min > 0.0)) fail("fe_min", "must be positive");
    if (!(edge.fe_max >= edge.fe_min)) fail("fe_max", "must be >= fe_min");
    if (!(edge.rho > 0.0)) fail("rho", "must be positive");
    if (!(edge.t_free0 >= 0.0)) fail("t_free0", "must be non-negative");
}

}  // namespace coinfer
