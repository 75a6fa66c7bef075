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

// Gradient-boosted regression trees for unit price.
//
// Squared-error boosting on the (optionally log-transformed) target. Trees are
// grown leaf-wise: the leaf whose best histogram split has the largest gain
// is split next, up to max_leaves. Every split carries a default direction
// for Missing values, chosen as the side with the larger gain (left when no
// training row at the node is missing the feature). Categorical features are
// split on label subsets found by ordering labels by mean gradient.
//
//     prediction = inverse_transform(base_score + learning_rate * sum_t tree_t(x))

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "proval/ingest.hpp"
#include "proval/json_codec.hpp"

namespace proval {

enum class TargetTransform { Identity, Log };

std::string_view to_string(TargetTransform t);

struct TrainParams {
  int num_trees = 200;
  int max_leaves = 31;
  int min_samples_leaf = 20;
  double learning_rate = 0.05;
  int feature_histogram_bins = 64;
  std::uint64_t seed = 0;
  TargetTransform target_transform = TargetTransform::Log;

  // Throws InvalidArgument.
  void validate() const;
  friend bool operator==(const TrainParams&, const TrainParams&) = default;
};

// Labels beyond the most frequent kMaxCategories share one "other" slot.
inline constexpr std::size_t kMaxCategories = 32;

struct ModelFeature {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::vector<std::string> categories;  // categorical only; slot categories.size() is "other"

  // Row encoding of one value: scalar, category slot, or NaN for Missing.
  double encode(const FeatureValue& v) const;
  friend bool operator==(const ModelFeature&, const ModelFeature&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 for a leaf
  bool categorical = false;
  double threshold = 0.0;            // numeric: x <= threshold goes left
  std::uint64_t left_categories = 0;  // categorical: slot c goes left iff bit c is set
  bool default_left = true;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output, before learning-rate scaling
  int sample_count = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  template <typename Derived>
  int leaf_of(const Eigen::DenseBase<Derived>& row) const {
    int i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
      const TreeNode& n = nodes[static_cast<std::size_t>(i)];
      const double x = row.coeff(n.feature);
      bool go_left;
      if (std::isnan(x)) {
        go_left = n.default_left;
      } else if (n.categorical) {
        const auto slot = static_cast<unsigned>(x);
        go_left = slot < 64 && ((n.left_categories >> slot) & 1ULL);
      } else {
        go_left = x <= n.threshold;
      }
      i = go_left ? n.left : n.right;
    }
    return i;
  }

  template <typename Derived>
  double output(const Eigen::DenseBase<Derived>& row) const {
    return nodes[static_cast<std::size_t>(leaf_of(row))].value;
  }

  std::size_t num_leaves() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct GbdtModel {
  PropertyType property_type = PropertyType::Apartment;
  std::string schema_hash;
  std::vector<ModelFeature> features;
  TrainParams params;
  double base_score = 0.0;
  double learning_rate = 0.05;
  TargetTransform target_transform = TargetTransform::Log;
  std::vector<Tree> trees;

  Eigen::RowVectorXd encode(const Property& p) const;
  Eigen::MatrixXd encode(const std::vector<Property>& rows) const;

  // Additive score in the training space using the first `tree_limit` trees.
  template <typename Derived>
  double raw_score(const Eigen::DenseBase<Derived>& row,
                   std::size_t tree_limit = std::numeric_limits<std::size_t>::max()) const {
    const std::size_t n = std::min(tree_limit, trees.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) sum += trees[t].output(row);
    return base_score + learning_rate * sum;
  }

  double inverse_transform(double raw) const {
    return target_transform == TargetTransform::Log ? std::exp(raw) : raw;
  }
  double transform(double price) const {
    return target_transform == TargetTransform::Log ? std::log(price) : price;
  }

  template <typename Derived>
  double predict_row(const Eigen::DenseBase<Derived>& row) const {
    return inverse_transform(raw_score(row));
  }

  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& rows) const;

  friend bool operator==(const GbdtModel&, const GbdtModel&) = default;
};

/// Requires at least 2 * min_samples_leaf records, all with unit_price.
/// A constant target yields a model with no trees. Throws InvalidArgument.
GbdtModel train(const Dataset& dataset, const TrainParams& params);

/// Unit price in thousand NTD per square meter. Missing features follow the
/// default branches. Throws SchemaMismatch when `schema` is not the schema
/// the model was trained on.
double predict(const GbdtModel& model, const FeatureSchema& schema, const Property& property);

Json encode(const GbdtModel& model);
GbdtModel decode_model(const Json& j);

void save_model(const std::filesystem::path& path, const GbdtModel& model);
/// Throws SchemaMismatch when the stored schema hash differs from `schema`.
GbdtModel load_model(const std::filesystem::path& path, const FeatureSchema& schema);

}  // namespace proval
