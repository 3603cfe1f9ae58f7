#include "coinfer/profile.hpp"

#include "coinfer/error.hpp"

#include <fmt/format.h>

#include <array>
#include <numeric>

namespace coinfer {

namespace {

// FLOPs counted as 2 x MACs at 224x224 input, width multiplier 1.0.
constexpr std::array<ReferenceUnit, 20> kUnits{{
    {"conv0", 21676032, 401408},
    {"b1.0", 20070400, 200704},
    {"b2.0", 58404864, 75264},
    {"b2.1", 51480576, 75264},
    {"b3.0", 30933504, 25088},
    {"b3.1", 21977088, 25088},
    {"b3.2", 21977088, 25088},
    {"b4.0", 15128064, 12544},
    {"b4.1", 20622336, 12544},
    {"b4.2", 20622336, 12544},
    {"b4.3", 20622336, 12544},
    {"b5.0", 25439232, 18816},
    {"b5.1", 45384192, 18816},
    {"b5.2", 45384192, 18816},
    {"b6.0", 31215744, 7840},
    {"b6.1", 30952320, 7840},
    {"b6.2", 30952320, 7840},
    {"b7.0", 46005120, 15680},
    {"conv_last", 40140800, 62720},
    {"classifier", 2685440, 1000},
}};

constexpr double kReferenceLatency = 3.2e-3;  // s at f_max
constexpr double kReferencePower = 4.0;       // W at f_max

double total_flops() {
    return std::accumulate(kUnits.begin(), kUnits.end(), 0.0,
                           [](double acc, const ReferenceUnit& u) { return acc + u.flops; });
}

}  // namespace

std::span<const ReferenceUnit> reference_units() noexcept { return kUnits; }

DeviceParams reference_device() {
    DeviceParams dev;
    dev.f_min = 1.5e9;
    dev.f_max = 2.6e9;
    dev.zeta = kReferenceLatency * dev.f_max / total_flops();
    // power at f_max is kappa f_max^3 / zeta
    dev.kappa = kReferencePower * dev.zeta / (dev.f_max * dev.f_max * dev.f_max);
    dev.rate = transmission_rate(10e6, 30.0);
    dev.p_u = 1.0;
    dev.deadline = kReferenceLatency;
    return dev;
}

EdgeParams reference_edge() { return EdgeParams{0.2e9, 2.1e9, 0.03e9, 0.0}; }

BlockProfile reference_block_profile(std::size_t blocks) {
    if (blocks < 1 || blocks > kUnits.size()) {
        throw Error(ErrorKind::InvalidParameter,
                    fmt::format("reference profile supports 1..{} blocks, got {}", kUnits.size(), blocks));
    }
    BlockProfile out;
    out.output_bits.push_back(kReferenceInputBits);
    std::size_t begin = 0;
    for (std::size_t n = 0; n < blocks; ++n) {
        const std::size_t end = (n + 1) * kUnits.size() / blocks;
        double flops = 0.0;
        for (std::size_t u = begin; u < end; ++u) flops += kUnits[u].flops;
        out.workload.push_back(flops);
        out.output_bits.push_back(kUnits[end - 1].output_elements * kActivationBits);
        begin = end;
    }
    out.latency_factor.assign(blocks, 1.0);
    out.energy_factor.assign(blocks, 1.0);
    return out;
}

ModelProfile synthetic_model(std::size_t blocks, const CalibrationParams& cal) {
    BlockProfile profile = reference_block_profile(blocks);
    auto [latency, energy] = calibrate_edge_profile(reference_device(), profile, cal, reference_edge().fe_max);
    return ModelProfile(std::move(profile), std::move(latency), std::move(energy));
}

}  // namespace coinfer
