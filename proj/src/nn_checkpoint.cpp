// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/nn/checkpoint.hpp"

#include "cgbg/io.hpp"

namespace cgbg::nn {

std::string encode_doubles(const Eigen::VectorXd& values) {
  return io::base64_encode(std::as_bytes(
      std::span(values.data(), static_cast<std::size_t>(values.size()))));
}

Eigen::VectorXd decode_doubles(const std::string& text) {
  const std::vector<std::byte> bytes = io::base64_decode(text);
  const std::vector<double> d = io::bytes_to_doubles(bytes);
  return Eigen::Map<const Eigen::VectorXd>(d.data(), static_cast<Eigen::Index>(d.size()));
}

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const nlohmann::json& specs, const Eigen::VectorXd& params,
                     const OptimizerState* optimizer) {
  nlohmann::json j;
  j["format"] = "CGBG-CKPT1";
  j["kind"] = kind;
  j["specs"] = specs;
  j["params"] = encode_doubles(params);
  if (optimizer != nullptr) {
    j["optimizer"] = {{"kind", optimizer->config.kind == OptKind::Adam ? "adam" : "adamw"},
                      {"beta1", optimizer->config.beta1},
                      {"beta2", optimizer->config.beta2},
                      {"eps", optimizer->config.eps},
                      {"weight_decay", optimizer->config.weight_decay},
                      {"step", optimizer->step},
                      {"m", encode_doubles(optimizer->m)},
                      {"v", encode_doubles(optimizer->v)}};
  }
  io::write_text_file(path, j.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad checkpoint JSON: " + std::string(e.what()));
  }
  if (j.value("format", "") != "CGBG-CKPT1") {
    throw FormatError("not a CGBG-CKPT1 checkpoint: " + path.string());
  }
  Checkpoint ckpt;
  ckpt.kind = j.at("kind").get<std::string>();
  ckpt.specs = j.at("specs");
  ckpt.params = decode_doubles(j.at("params").get<std::string>());
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    OptimizerState state;
    state.config.kind = o.at("kind").get<std::string>() == "adamw" ? OptKind::AdamW
                                                                   : OptKind::Adam;
    state.config.beta1 = o.at("beta1").get<double>();
    state.config.beta2 = o.at("beta2").get<double>();
    state.config.eps = o.at("eps").get<double>();
    state.config.weight_decay = o.at("weight_decay").get<double>();
    state.step = o.at("step").get<std::int64_t>();
    state.m = decode_doubles(o.at("m").get<std::string>());
    state.v = decode_doubles(o.at("v").get<std::string>());
    ckpt.optimizer = std::move(state);
  }
  return ckpt;
}

}  // namespace cgbg::nn
