#pragma once

#include "coinfer/model.hpp"

#include <cstddef>
#include <span>
#include <string_view>

namespace coinfer {

/// One unit of the built-in reference network (a MobileNetV2-shaped
/// sequence of 20 units: stem conv, 17 inverted-residual blocks, final
/// 1x1 conv, classifier).
struct ReferenceUnit {
    std::string_view name;
    double flops;
    double output_elements;
};

std::span<const ReferenceUnit> reference_units() noexcept;

/// Compressed 224x224 RGB input (about 20 KB), in bits.
inline constexpr double kReferenceInputBits = 163840.0;
/// Intermediate activations are shipped as int8.
inline constexpr double kActivationBits = 8.0;

/// Default device: 1.5-2.6 GHz CPU, 1 W transmitter, 10 MHz at 30 dB.
/// zeta and kappa are chosen so that the reference network takes 3.2 ms at
/// f_max and the CPU draws 4 W at f_max. The deadline is left at the
/// minimum local latency (beta = 0).
DeviceParams reference_device();

/// Default edge: 0.2-2.1 GHz, 0.03 GHz sweep step, GPU free at t = 0.
EdgeParams reference_edge();

/// Block profile obtained by merging the reference units into `blocks`
/// contiguous chunks of near-equal unit count (1 <= blocks <= 20).
/// g_n = q_n = 1.
BlockProfile reference_block_profile(std::size_t blocks);

/// Reference block profile with edge tables calibrated against
/// reference_device() and reference_edge().
ModelProfile synthetic_model(std::size_t blocks, const CalibrationParams& cal);

}  // namespace coinfer
