// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json.hpp>

#include "cgbg/nn/network.hpp"

namespace cgbg::nn {

inline std::string act_name(Act a) {
  switch (a) {
    case Act::Softplus: return "softplus";
    case Act::Tanh: return "tanh";
    case Act::Gelu: return "gelu";
    case Act::Sigmoid: return "sigmoid";
    case Act::Exp: return "exp";
  }
  throw Error("unknown activation");
}

inline Act act_from_name(const std::string& name) {
  if (name == "softplus") return Act::Softplus;
  if (name == "tanh") return Act::Tanh;
  if (name == "gelu") return Act::Gelu;
  if (name == "sigmoid") return Act::Sigmoid;
  if (name == "exp") return Act::Exp;
  throw Error("unknown activation name: " + name);
}

inline void to_json(nlohmann::json& j, const MLPSpec& s) {
  j = {{"input", s.input},
       {"hidden", s.hidden},
       {"output", s.output},
       {"activation", act_name(s.activation)},
       {"final_linear", s.final_linear}};
}

inline void from_json(const nlohmann::json& j, MLPSpec& s) {
  j.at("input").get_to(s.input);
  j.at("hidden").get_to(s.hidden);
  j.at("output").get_to(s.output);
  s.activation = act_from_name(j.at("activation").get<std::string>());
  j.at("final_linear").get_to(s.final_linear);
}

inline void to_json(nlohmann::json& j, const RBFLayerSpec& s) {
  j = {{"n_centers", s.n_centers},
       {"width", s.width},
       {"init_lo", s.init_lo},
       {"init_hi", s.init_hi}};
}

inline void from_json(const nlohmann::json& j, RBFLayerSpec& s) {
  j.at("n_centers").get_to(s.n_centers);
  j.at("width").get_to(s.width);
  j.at("init_lo").get_to(s.init_lo);
  j.at("init_hi").get_to(s.init_hi);
}

inline void to_json(nlohmann::json& j, const TimeEmbeddingSpec& s) {
  j = {{"dim", s.dim}, {"omega_min", s.omega_min}, {"omega_max", s.omega_max}};
}

inline void from_json(const nlohmann::json& j, TimeEmbeddingSpec& s) {
  j.at("dim").get_to(s.dim);
  j.at("omega_min").get_to(s.omega_min);
  j.at("omega_max").get_to(s.omega_max);
}

}  // namespace cgbg::nn
