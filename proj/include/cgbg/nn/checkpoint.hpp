// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cgbg/nn/network.hpp"
#include "cgbg/nn/optim.hpp"

namespace cgbg::nn {

// Checkpoint files are JSON with format tag "CGBG-CKPT1": model-kind tag,
// model-specific spec descriptors, base64 little-endian parameter array, and
// an optional optimizer state.
struct Checkpoint {
  std::string kind;
  nlohmann::json specs;
  Eigen::VectorXd params;
  std::optional<OptimizerState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const nlohmann::json& specs, const Eigen::VectorXd& params,
                     const OptimizerState* optimizer = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_doubles(const Eigen::VectorXd& values);
Eigen::VectorXd decode_doubles(const std::string& text);

}  // namespace cgbg::nn
