// Copyright 2026 The proval Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Configuration filtering and k-nearest-neighbor ranking.
//
// Properties are compared on their numeric features only, min-max normalized
// with the corpus stats. A missing coordinate is NaN. The distance over the
// m jointly observed coordinates of n is
//
//     D(x, y) = ( (n / m) * sum_i |x_i - y_i|^p )^(1/p),      p = 2 by default,
//
// which is the plain Minkowski distance when nothing is missing.

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "proval/errors.hpp"
#include "proval/ingest.hpp"

namespace proval {

inline constexpr double kDefaultMinkowskiExponent = 2.0;

// Normalized numeric features in schema order; NaN marks Missing.
using FeatureVector = Eigen::VectorXd;
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
Scalar min_max_normalize(Scalar value, Scalar min, Scalar max) {
  if (!(max > min)) return Scalar(0);
  Scalar v = (value - min) / (max - min);
  return v < Scalar(0) ? Scalar(0) : (v > Scalar(1) ? Scalar(1) : v);
}

/// Distance over jointly observed coordinates; nullopt when there are none.
/// Throws InvalidArgument on length mismatch or a non-positive exponent.
template <typename DerivedX, typename DerivedY>
std::optional<typename DerivedX::Scalar> minkowski_distance(const Eigen::MatrixBase<DerivedX>& x,
                                                            const Eigen::MatrixBase<DerivedY>& y,
                                                            double p = kDefaultMinkowskiExponent) {
  using Scalar = typename DerivedX::Scalar;
  if (x.size() != y.size()) throw InvalidArgument("minkowski_distance: vectors differ in length");
  if (!(p > 0.0)) throw InvalidArgument("minkowski_distance: exponent must be positive");
  const Eigen::Index n = x.size();
  Eigen::Index m = 0;
  Scalar acc(0);
  const bool squared = p == 2.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar a = x.coeff(i), b = y.coeff(i);
    if (std::isnan(a) || std::isnan(b)) continue;
    ++m;
    const Scalar d = std::abs(a - b);
    acc += squared ? d * d : static_cast<Scalar>(std::pow(d, p));
  }
  if (m == 0) return std::nullopt;
  if (m != n) acc *= static_cast<Scalar>(n) / static_cast<Scalar>(m);
  return squared ? std::sqrt(acc) : static_cast<Scalar>(std::pow(acc, 1.0 / p));
}

FeatureVector normalize(const FeatureSchema& schema, const NormalizationStats& stats, const Property& p);

// True iff every constrained feature is present and inside its range/set.
bool satisfies(const PropertyConfiguration& config, const Property& p);

// Indices of dataset records passing the configuration filter.
std::vector<std::size_t> filter_candidates(const PropertyConfiguration& config, const Dataset& dataset);

struct NeighborResult {
  Property neighbor;
  double distance = 0.0;
  int rank = 0;  // 1-based
};

enum class NeighborStatus { Ok, Shortfall, NoCandidates };

struct NeighborSearchResult {
  std::vector<NeighborResult> neighbors;
  std::size_t candidates = 0;  // records surviving the filter and comparable to the target
  NeighborStatus status = NeighborStatus::Ok;

  std::size_t found() const { return neighbors.size(); }
  std::string message() const;
};

/// Normalized corpus matrix for repeated searches against one dataset. The
/// dataset must outlive the index.
class NeighborIndex {
 public:
  explicit NeighborIndex(const Dataset& dataset);

  const Dataset& dataset() const { return *dataset_; }
  const FeatureMatrix& points() const { return points_; }
  FeatureVector encode(const Property& p) const { return normalize(dataset_->schema, dataset_->stats, p); }

 private:
  const Dataset* dataset_;
  FeatureMatrix points_;
};

/// The k nearest filtered candidates, ascending by distance, ties by id.
/// The target's own id is never returned. Throws InvalidArgument for k < 1 or
/// an invalid configuration.
NeighborSearchResult find_neighbors(const NeighborIndex& index, const Property& target,
                                    const PropertyConfiguration& config, int k,
                                    double p = kDefaultMinkowskiExponent);

// Convenience overload building a temporary index.
NeighborSearchResult find_neighbors(const Property& target, const PropertyConfiguration& config, int k,
                                    const Dataset& dataset, double p = kDefaultMinkowskiExponent);

}  // namespace proval
