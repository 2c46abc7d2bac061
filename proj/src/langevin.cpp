// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/langevin.hpp"

#include <sstream>

#include "cgbg/io.hpp"
#include "cgbg/json_bridge.hpp"

namespace cgbg {

namespace {
constexpr const char* kDatasetMagic = "CGBG-DS1";
}

std::string potential_hash(const MBParams& params) {
  const std::string text = nlohmann::json(params).dump();
  return io::to_hex(io::crc32(std::as_bytes(std::span(text.data(), text.size()))));
}

AtomisticDataset simulate(const LangevinParams& params, const TrajectoryConfig& config,
                          const std::optional<UmbrellaBias>& bias, const MBParams& mb,
                          int threads) {
  std::string description = "none";
  AtomisticDataset ds;
  if (bias.has_value()) {
    const UmbrellaBias b = *bias;
    std::ostringstream desc;
    desc << "umbrella(amplitude=" << b.amplitude << ",center=" << b.center
         << ",width=" << b.width << ")";
    description = desc.str();
    ds = simulate_with_extra_force(
        params, config,
        [b](const Eigen::Vector2d& r) {
          return Eigen::Vector2d(bias_force(b, r.x()), 0.0);
        },
        description, mb, threads);
  } else {
    ds = simulate_with_extra_force(
        params, config,
        [](const Eigen::Vector2d&) { return Eigen::Vector2d::Zero().eval(); },
        description, mb, threads);
  }
  ds.bias = bias;
  return ds;
}

std::vector<Eigen::Vector2d> relabel_forces(const std::vector<Point2>& positions,
                                            const MBParams& mb) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(positions.size());
  for (const auto& p : positions) out.push_back(mb_force(p, mb));
  return out;
}

void save_dataset(const AtomisticDataset& ds, const std::filesystem::path& path) {
  io::json header;
  header["params"] = ds.params;
  header["config"] = ds.config;
  header["bias"] = ds.bias.has_value() ? io::json(*ds.bias) : io::json(nullptr);
  header["bias_description"] = ds.bias_description;
  header["potential"] = ds.potential;
  header["potential_hash"] = ds.potential_hash;
  header["record_count"] = ds.records.size();
  std::vector<double> flat;
  flat.reserve(ds.records.size() * 4);
  for (const auto& r : ds.records) {
    flat.push_back(r.x);
    flat.push_back(r.y);
    flat.push_back(r.fx);
    flat.push_back(r.fy);
  }
  io::write_container(path, kDatasetMagic, header, io::doubles_to_bytes(flat), false);
}

AtomisticDataset load_dataset(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, kDatasetMagic, false);
  AtomisticDataset ds;
  ds.params = c.header.at("params").get<LangevinParams>();
  ds.config = c.header.at("config").get<TrajectoryConfig>();
  if (!c.header.at("bias").is_null()) ds.bias = c.header.at("bias").get<UmbrellaBias>();
  ds.bias_description = c.header.at("bias_description").get<std::string>();
  ds.potential = c.header.at("potential").get<MBParams>();
  ds.potential_hash = c.header.at("potential_hash").get<std::string>();
  const auto count = c.header.at("record_count").get<std::size_t>();
  const std::vector<double> flat = io::bytes_to_doubles(c.payload);
  if (flat.size() != count * 4) {
    throw FormatError("dataset record payload does not match header count: " +
                      path.string());
  }
  ds.records.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.records[i] = {flat[4 * i], flat[4 * i + 1], flat[4 * i + 2], flat[4 * i + 3]};
  }
  return ds;
}

void export_dataset_csv(const AtomisticDataset& ds, const std::filesystem::path& path) {
  std::ostringstream out;
  out.precision(17);
  out << "x,y,fx,fy\n";
  for (const auto& r : ds.records) {
    out << r.x << "," << r.y << "," << r.fx << "," << r.fy << "\n";
  }
  io::write_text_file(path, out.str());
}

}  // namespace cgbg
