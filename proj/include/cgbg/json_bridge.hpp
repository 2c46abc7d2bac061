// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// nlohmann ADL bridges for the plain config/metadata structs.

#include <nlohmann/json.hpp>

#include "cgbg/langevin.hpp"
#include "cgbg/potential.hpp"

namespace cgbg {

inline void to_json(nlohmann::json& j, const GaussianTerm& t) {
  j = {{"amplitude", t.amplitude}, {"x0", t.x0}, {"y0", t.y0},
       {"a", t.a},                 {"b", t.b},   {"c", t.c}};
}

inline void from_json(const nlohmann::json& j, GaussianTerm& t) {
  j.at("amplitude").get_to(t.amplitude);
  j.at("x0").get_to(t.x0);
  j.at("y0").get_to(t.y0);
  j.at("a").get_to(t.a);
  j.at("b").get_to(t.b);
  j.at("c").get_to(t.c);
}

inline void to_json(nlohmann::json& j, const MBParams& p) {
  j = {{"terms", p.terms}};
}

inline void from_json(const nlohmann::json& j, MBParams& p) {
  j.at("terms").get_to(p.terms);
}

inline void to_json(nlohmann::json& j, const UmbrellaBias& b) {
  j = {{"amplitude", b.amplitude}, {"center", b.center}, {"width", b.width}};
}

inline void from_json(const nlohmann::json& j, UmbrellaBias& b) {
  j.at("amplitude").get_to(b.amplitude);
  j.at("center").get_to(b.center);
  j.at("width").get_to(b.width);
}

inline void to_json(nlohmann::json& j, const LangevinParams& p) {
  j = {{"dt", p.dt}, {"mass", p.mass}, {"gamma", p.gamma}, {"kT", p.kT}};
}

inline void from_json(const nlohmann::json& j, LangevinParams& p) {
  j.at("dt").get_to(p.dt);
  j.at("mass").get_to(p.mass);
  j.at("gamma").get_to(p.gamma);
  j.at("kT").get_to(p.kT);
}

inline void to_json(nlohmann::json& j, const TrajectoryConfig& c) {
  j = {{"n_steps", c.n_steps},
       {"save_every", c.save_every},
       {"n_trajectories", c.n_trajectories},
       {"init_box", c.init_box},
       {"init_velocity_sigma", c.init_velocity_sigma},
       {"seed", c.seed},
       {"burn_in_fraction", c.burn_in_fraction},
       {"guard_box", c.guard_box},
       {"euler_maruyama", c.euler_maruyama}};
}

inline void from_json(const nlohmann::json& j, TrajectoryConfig& c) {
  j.at("n_steps").get_to(c.n_steps);
  j.at("save_every").get_to(c.save_every);
  j.at("n_trajectories").get_to(c.n_trajectories);
  j.at("init_box").get_to(c.init_box);
  j.at("init_velocity_sigma").get_to(c.init_velocity_sigma);
  j.at("seed").get_to(c.seed);
  j.at("burn_in_fraction").get_to(c.burn_in_fraction);
  j.at("guard_box").get_to(c.guard_box);
  j.at("euler_maruyama").get_to(c.euler_maruyama);
}

}  // namespace cgbg
