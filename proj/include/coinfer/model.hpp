#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace coinfer {

/// Relative tolerance used by every hard-constraint and invariant check.
inline constexpr double kFeasibilitySlack = 1e-9;

/// Dense per-block, per-batch-size coefficient table, indexed (n, b) with
/// n in 1..blocks and b in 1..max_batch.
class CoefficientTable {
public:
    CoefficientTable() = default;
    CoefficientTable(std::size_t blocks, std::size_t max_batch, double fill = 0.0);

    /// Builds a table from rows (one row per block, one column per batch size).
    static CoefficientTable from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t blocks() const noexcept { return blocks_; }
    std::size_t max_batch() const noexcept { return max_batch_; }

    double at(std::size_t n, std::size_t b) const { return values_[index(n, b)]; }
    double& at(std::size_t n, std::size_t b) { return values_[index(n, b)]; }

    std::vector<std::vector<double>> rows() const;

private:
    std::size_t index(std::size_t n, std::size_t b) const;

    std::size_t blocks_ = 0;
    std::size_t max_batch_ = 0;
    std::vector<double> values_;
};

/// Per-block description of the DNN without the edge batch tables.
///
/// `workload` holds A_1..A_N (FLOP); the virtual input layer A_0 = 0 is
/// implicit. `output_bits` holds O_0..O_N, where O_0 is the raw input size.
/// `latency_factor` (g_n) and `energy_factor` (q_n) are per block, 1..N.
struct BlockProfile {
    std::vector<double> workload;
    std::vector<double> output_bits;
    std::vector<double> latency_factor;
    std::vector<double> energy_factor;

    std::size_t blocks() const noexcept { return workload.size(); }
};

/// Prefix/suffix sums at a partition point for a given batch size.
struct Aggregates {
    double device_energy_work = 0.0;   ///< u: sum of q_n A_n over n <= n_tilde
    double device_latency_work = 0.0;  ///< v: sum of g_n A_n over n <= n_tilde
    double edge_energy_coeff = 0.0;    ///< psi: sum of c_n(B) A_n over n > n_tilde
    double edge_latency_work = 0.0;    ///< phi: sum of d_n(B) A_n over n > n_tilde
};

/// Immutable DNN model profile: block workloads, output sizes, device factors
/// and the edge batch-cost tables d_n(b), c_n(b).
///
/// Construction validates every invariant (positive workloads, monotone batch
/// tables) and precomputes the aggregate tables so that `aggregates()` is O(1).
class ModelProfile {
public:
    ModelProfile(BlockProfile blocks, CoefficientTable edge_latency, CoefficientTable edge_energy);

    std::size_t blocks() const noexcept { return profile_.blocks(); }
    std::size_t max_batch() const noexcept { return edge_latency_.max_batch(); }

    /// A_n for n in 0..N (A_0 = 0).
    double workload(std::size_t n) const;
    /// O_n for n in 0..N.
    double output_bits(std::size_t n) const;
    double latency_factor(std::size_t n) const;
    double energy_factor(std::size_t n) const;
    double edge_latency_coeff(std::size_t n, std::size_t b) const;
    double edge_energy_coeff(std::size_t n, std::size_t b) const;

    /// Aggregates at partition point n_tilde in 0..N with batch size b in
    /// 0..max_batch (b = 0 yields zero edge terms).
    Aggregates aggregates(std::size_t n_tilde, std::size_t batch) const;

    const BlockProfile& block_profile() const noexcept { return profile_; }
    const CoefficientTable& edge_latency_table() const noexcept { return edge_latency_; }
    const CoefficientTable& edge_energy_table() const noexcept { return edge_energy_; }

private:
    BlockProfile profile_;
    CoefficientTable edge_latency_;
    CoefficientTable edge_energy_;
    std::vector<double> prefix_u_;
    std::vector<double> prefix_v_;
    // (N+1) x (max_batch+1), row-major by partition point.
    std::vector<double> suffix_psi_;
    std::vector<double> suffix_phi_;
};

/// One user's CPU, radio and deadline constants.
struct DeviceParams {
    double zeta = 1.0;      ///< CPU cycles per FLOP
    double kappa = 1e-27;   ///< effective switched capacitance, J/(FLOP Hz^2)
    double f_min = 1.5e9;   ///< Hz
    double f_max = 2.6e9;   ///< Hz
    double rate = 1e8;      ///< uplink rate, bit/s
    double p_u = 1.0;       ///< transmit power, W
    double deadline = 1.0;  ///< s
};

/// GPU frequency range, sweep step and initial availability.
struct EdgeParams {
    double fe_min = 0.2e9;
    double fe_max = 2.1e9;
    double rho = 0.03e9;
    double t_free0 = 0.0;
};

/// Ratios used to derive edge batch tables from a device and block profile.
struct CalibrationParams {
    double alpha = 1.0;  ///< local / edge batch-1 latency at max frequencies
    double eta = 0.6;    ///< local / edge batch-1 power at max frequencies
    double sigma = 0.1;  ///< marginal batch cost slope, in (0, 1]
    std::size_t max_batch = 1;
};

/// Shannon rate W log2(1 + SNR) with SNR given in dB.
double transmission_rate(double bandwidth_hz, double snr_db);

/// Fastest possible full local inference time, zeta * sum(g_n A_n) / f_max.
double min_local_latency(const DeviceParams& device, const ModelProfile& model);

/// Deadline (1 + beta) times the minimum local latency.
double deadline_from_beta(const DeviceParams& device, const ModelProfile& model, double beta);

/// Inverse of deadline_from_beta.
double beta_from_deadline(const DeviceParams& device, const ModelProfile& model, double deadline);

/// Generates d_n(b), c_n(b) so that batch-1 edge latency and power relate to
/// the device at max frequencies by `alpha` and `eta`; b > 1 grows affinely
/// with slope `sigma`. Returns {latency table, energy table}.
std::pair<CoefficientTable, CoefficientTable> calibrate_edge_profile(
    const DeviceParams& device, const BlockProfile& blocks, const CalibrationParams& cal,
    double fe_max);

/// Checks DeviceParams invariants including local feasibility against
/// `model`; `path` prefixes error messages.
void validate_device(const DeviceParams& device, const ModelProfile& model, const std::string& path);

void validate_edge(const EdgeParams& edge, const std::string& path);

}  // namespace coinfer
