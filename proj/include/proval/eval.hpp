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

// MAPE, the feature-masking protocol and the four-arm imputation ablation.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <array>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "proval/errors.hpp"
#include "proval/gbdt.hpp"
#include "proval/ingest.hpp"

namespace proval {

/// 100 / N * sum_i |a_i - p_i| / a_i. Throws InvalidArgument on empty or
/// unequal inputs and on any a_i <= 0.
template <typename DerivedA, typename DerivedP>
double mape(const Eigen::DenseBase<DerivedA>& actual, const Eigen::DenseBase<DerivedP>& predicted) {
  if (actual.size() == 0 || actual.size() != predicted.size()) {
    throw InvalidArgument("mape: inputs must be non-empty and of equal length");
  }
  if ((actual.derived().array() <= 0).any()) throw InvalidArgument("mape: actual values must be positive");
  const auto a = actual.derived().array().template cast<double>();
  const auto p = predicted.derived().array().template cast<double>();
  return 100.0 * ((a - p).abs() / a).sum() / static_cast<double>(actual.size());
}

inline double mape(std::span<const double> actual, std::span<const double> predicted) {
  using Map = Eigen::Map<const Eigen::ArrayXd>;
  return mape(Map(actual.data(), static_cast<Eigen::Index>(actual.size())),
              Map(predicted.data(), static_cast<Eigen::Index>(predicted.size())));
}

// Location and house age: what a user is assumed to always know.
std::set<std::string> default_keep_always();

/// Each schema feature outside keep_always is independently set Missing with
/// probability mask_rate. Deterministic for a fixed seed. Throws
/// InvalidArgument for mask_rate outside [0, 1] or keep_always naming an
/// undeclared feature.
Property mask_features(const Property& property, const FeatureSchema& schema, double mask_rate,
                       const std::set<std::string>& keep_always, std::uint64_t seed);

enum class AblationArm { None, Average, Neighbor, Ideal };
inline constexpr std::array<AblationArm, 4> kAblationArms = {AblationArm::None, AblationArm::Average,
                                                             AblationArm::Neighbor, AblationArm::Ideal};
std::string_view to_string(AblationArm arm);

struct AblationCell {
  PropertyType property_type = PropertyType::Apartment;
  AblationArm arm = AblationArm::Ideal;
  double mape_mean = 0.0;
  double mape_std = 0.0;             // sample standard deviation over seeds
  std::vector<double> per_seed;
  std::size_t n_test = 0;            // test instances per seed
  std::size_t fallback_count = 0;    // neighbor arm: instances that needed corpus fallback, summed over seeds
};

struct AblationOptions {
  std::set<std::string> keep_always = default_keep_always();
  double test_fraction = 0.2;
};

struct AblationResult {
  std::vector<AblationCell> cells;
  double mask_rate = 0.0;
  int k = kDefaultNeighborCount;
  std::vector<std::uint64_t> seeds;
  std::uint64_t split_seed = 0;  // first seed

  const AblationCell* find(PropertyType type, AblationArm arm) const;
  void merge(const AblationResult& other);
};

/// One property type: seeded 80/20 split (by the first seed), one model on
/// the train split, then for every seed the same masked test instances go
/// through all four arms. The neighbor corpus is the train split only.
AblationResult run_ablation(const Dataset& dataset, const TrainParams& params, const PropertyConfiguration& config,
                            int k, double mask_rate, const std::vector<std::uint64_t>& seeds,
                            const AblationOptions& options = {});

// property_type,strategy,mape_mean,mape_std,n_test,fallback_count
void write_ablation_csv(std::ostream& out, const AblationResult& result);
// Types as rows, arms as columns.
std::string format_ablation_table(const AblationResult& result);

}  // namespace proval
