// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "radloc/nn/model.hpp"

namespace radloc::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Serializes a model as an "RLNN" checkpoint: header, then per layer its
/// type, freeze flag, integer attributes and every parameter and state
/// tensor as little-endian float64. Identical models give identical bytes.
std::vector<std::uint8_t> save_checkpoint(const CnnModel& model);
CnnModel load_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint_file(const CnnModel& model, const std::string& path);
CnnModel load_checkpoint_file(const std::string& path);

}  // namespace radloc::nn
