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

// Filling a target's Missing features.
//
//   neighbor: numeric -> mean of the neighbors' values; categorical -> most
//             frequent label (ties: most recent transaction among the tied
//             labels' carriers, then label order); temporal -> the
//             observation with the latest date. Features no neighbor carries
//             fall back to the average rule.
//   average:  numeric -> corpus mean; categorical -> corpus mode; temporal ->
//             corpus-wide latest observation.
//   none:     identity.

#pragma once

#include <string>
#include <vector>

#include "proval/ingest.hpp"

namespace proval {

enum class ImputationStrategy { None, Average, Neighbor };

std::string_view to_string(ImputationStrategy s);

struct ImputedFeature {
  std::string feature;
  FeatureValue value;
  ImputationStrategy strategy = ImputationStrategy::Neighbor;
  std::vector<std::string> source_ids;  // contributing neighbors; empty for corpus stats
  std::size_t support = 0;              // number of observations the value was computed from

  bool from_corpus() const { return strategy == ImputationStrategy::Average; }
};

struct ImputationReport {
  std::vector<ImputedFeature> entries;   // schema order
  std::vector<std::string> unresolved;   // still Missing: no observation anywhere
  std::vector<std::string> fallbacks;    // neighbor strategy fell back to corpus stats
  bool empty_neighborhood = false;       // impute_neighbor got no neighbors at all

  const ImputedFeature* find(std::string_view feature) const;
};

struct Imputed {
  Property property;
  ImputationReport report;
};

Imputed impute_neighbor(const Property& target, const std::vector<Property>& neighbors, const FeatureSchema& schema,
                        const NormalizationStats& stats);
Imputed impute_average(const Property& target, const NormalizationStats& stats, const FeatureSchema& schema);
Imputed impute_none(const Property& target);

}  // namespace proval
