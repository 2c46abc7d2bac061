// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#include "cgbg/cgdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cgbg/io.hpp"
#include "cgbg/rng.hpp"

namespace cgbg {

namespace {
constexpr const char* kCGMagic = "CGBG-CG1";
}

Eigen::VectorXd CGDataset::coordinates() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = samples[i].R;
  }
  return out;
}

Eigen::VectorXd CGDataset::forces() const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = samples[i].F_proj;
  }
  return out;
}

CGDataset apply_mapping(const AtomisticDataset& ds, const CGMapping& mapping) {
  CGDataset out;
  out.samples.reserve(ds.records.size());
  for (const auto& r : ds.records) {
    if (mapping.kind == CGMapKind::SliceX) {
      out.samples.push_back({r.x, r.fx});
    } else {
      out.samples.push_back({r.y, r.fy});
    }
  }
  out.provenance_hash = ds.potential_hash;
  out.bias_description = ds.bias_description;
  return out;
}

Standardizer fit_standardizer(const CGDataset& ds) {
  if (ds.samples.size() < 2) throw Error("need >= 2 samples to fit a standardizer");
  const Eigen::VectorXd R = ds.coordinates();
  const double mean = R.mean();
  const double var = (R.array() - mean).square().mean();
  const double std = std::sqrt(var);
  if (std < 1e-12) throw DegenerateVariance("coordinate variance below 1e-24");
  return Standardizer{mean, std};
}

CGDataset standardize(const CGDataset& ds, const Standardizer& s) {
  if (ds.standardizer.has_value()) throw Error("dataset is already standardized");
  CGDataset out = ds;
  for (auto& sample : out.samples) {
    sample.R = s.to_standardized(sample.R);
    sample.F_proj *= s.std;
  }
  out.standardizer = s;
  return out;
}

CGDataset destandardize(const CGDataset& ds) {
  if (!ds.standardizer.has_value()) throw Error("dataset is not standardized");
  const Standardizer s = *ds.standardizer;
  CGDataset out = ds;
  for (auto& sample : out.samples) {
    sample.R = s.from_standardized(sample.R);
    sample.F_proj /= s.std;
  }
  out.standardizer.reset();
  return out;
}

std::pair<CGDataset, CGDataset> split(const CGDataset& ds, double ratio,
                                      std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw Error("split ratio must be in (0, 1)");
  const std::size_t n = ds.samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::substream(seed, 0x53504c4954ULL);  // split stream tag
  for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(order[i - 1], order[j]);
  }
  const auto n_train =
      static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  CGDataset train, val;
  train.standardizer = ds.standardizer;
  val.standardizer = ds.standardizer;
  train.provenance_hash = val.provenance_hash = ds.provenance_hash;
  train.bias_description = val.bias_description = ds.bias_description;
  train.samples.reserve(n_train);
  val.samples.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_train ? train : val).samples.push_back(ds.samples[order[i]]);
  }
  return {std::move(train), std::move(val)};
}

void save_cg_dataset(const CGDataset& ds, const std::filesystem::path& path) {
  io::json header;
  header["provenance_hash"] = ds.provenance_hash;
  header["bias_description"] = ds.bias_description;
  if (ds.standardizer.has_value()) {
    header["standardizer"] = {{"mean", ds.standardizer->mean},
                              {"std", ds.standardizer->std}};
  } else {
    header["standardizer"] = nullptr;
  }
  header["count"] = ds.samples.size();
  std::vector<double> flat;
  flat.reserve(ds.samples.size() * 2);
  for (const auto& s : ds.samples) {
    flat.push_back(s.R);
    flat.push_back(s.F_proj);
  }
  io::write_container(path, kCGMagic, header, io::doubles_to_bytes(flat), true);
}

CGDataset load_cg_dataset(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, kCGMagic, true);
  CGDataset ds;
  ds.provenance_hash = c.header.at("provenance_hash").get<std::string>();
  ds.bias_description = c.header.at("bias_description").get<std::string>();
  if (!c.header.at("standardizer").is_null()) {
    ds.standardizer = Standardizer{c.header["standardizer"].at("mean").get<double>(),
                                   c.header["standardizer"].at("std").get<double>()};
  }
  const auto count = c.header.at("count").get<std::size_t>();
  const std::vector<double> flat = io::bytes_to_doubles(c.payload);
  if (flat.size() != count * 2) {
    throw FormatError("CG record payload does not match header count: " + path.string());
  }
  ds.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.samples[i] = {flat[2 * i], flat[2 * i + 1]};
  }
  return ds;
}

}  // namespace cgbg
