// Copyright (c) 2026 cgbg contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cgbg/errors.hpp"
#include "cgbg/langevin.hpp"

namespace cgbg {

// Coordinate-slice CG maps. SliceX is the MB mapping Xi(x, y) = x with the
// projected force equal to the force x-component.
enum class CGMapKind { SliceX, SliceY };

struct CGMapping {
  CGMapKind kind = CGMapKind::SliceX;
};

struct CGSample {
  double R;       // CG coordinate
  double F_proj;  // projected instantaneous force
};

// Affine transform R' = (R - mean) / std. Forces transform with the chain
// rule: a force with respect to R' equals std times the force with respect
// to R.
struct Standardizer {
  double mean = 0.0;
  double std = 1.0;

  double to_standardized(double R) const { return (R - mean) / std; }
  double from_standardized(double Rp) const { return mean + std * Rp; }
};

struct CGDataset {
  std::vector<CGSample> samples;
  std::optional<Standardizer> standardizer;  // present iff samples are standardized
  std::string provenance_hash;               // source dataset potential hash
  std::string bias_description = "none";

  Eigen::VectorXd coordinates() const;
  Eigen::VectorXd forces() const;
};

CGDataset apply_mapping(const AtomisticDataset& ds, const CGMapping& mapping = {});

// Throws DegenerateVariance below std 1e-12; requires >= 2 samples.
Standardizer fit_standardizer(const CGDataset& ds);
CGDataset standardize(const CGDataset& ds, const Standardizer& s);
CGDataset destandardize(const CGDataset& ds);
inline double destandardize(double Rp, const Standardizer& s) {
  return s.from_standardized(Rp);
}

// Deterministic shuffled partition; disjoint and exhaustive.
std::pair<CGDataset, CGDataset> split(const CGDataset& ds, double ratio,
                                      std::uint64_t seed);

void save_cg_dataset(const CGDataset& ds, const std::filesystem::path& path);
CGDataset load_cg_dataset(const std::filesystem::path& path);

}  // namespace cgbg
