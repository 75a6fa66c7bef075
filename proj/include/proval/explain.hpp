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

// Feature-wise comparison of a target against its neighbors, the LLM prompt
// built from them, and the offline template renderer.

#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "proval/ingest.hpp"
#include "proval/llm_client.hpp"
#include "proval/neighbor_search.hpp"

namespace proval {

enum class Direction { Higher, Lower, Equal, Differs, Incomparable };

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view word);

// Neighbor relative to target: delta = neighbor - target for numeric and
// temporal features; salience = |delta| / corpus range, clamped to [0, 1].
// Categorical: Equal (salience 0) or Differs (salience 1).
struct PairwiseComparison {
  std::string feature;
  FeatureValue target_value;
  FeatureValue neighbor_value;
  std::optional<double> delta;
  Direction direction = Direction::Incomparable;
  double salience = 0.0;
};

// One entry per schema feature, in schema order.
std::vector<PairwiseComparison> compare_pairwise(const Property& target, const Property& neighbor,
                                                 const FeatureSchema& schema, const NormalizationStats& stats);
inline std::vector<PairwiseComparison> compare_pairwise(const Property& target, const NeighborResult& neighbor,
                                                        const FeatureSchema& schema, const NormalizationStats& stats) {
  return compare_pairwise(target, neighbor.neighbor, schema, stats);
}

/// A directional belief about how price moves with a feature. sign = -1 means
/// price tends to fall as the feature grows.
struct DomainPrior {
  std::string feature;
  std::string label;  // short name used in annotations, e.g. "age"
  int sign = -1;
};

std::vector<DomainPrior> default_priors();

// "consistent with negative age-price prior" when the neighbor's price moves
// against the target prediction in the prior's direction, "inconsistent ..."
// when it moves the other way; nothing when either side is equal or unknown.
std::vector<std::string> consistency_annotations(const Property& target, double prediction, const Property& neighbor,
                                                 const std::vector<DomainPrior>& priors);

struct NeighborComparison {
  std::string neighbor_id;
  int rank = 0;
  double distance = 0.0;
  std::optional<double> neighbor_price;
  std::vector<PairwiseComparison> comparisons;
  std::vector<std::string> annotations;
};

std::size_t estimate_tokens(std::string_view text);

inline constexpr std::size_t kDefaultPromptTokenCap = 3000;

struct Prompt {
  std::string text;
  std::size_t neighbors_included = 0;
  std::size_t neighbors_dropped = 0;
};

/// Deterministic prompt embedding the canonical JSON of the target and of each
/// neighbor (rank order) plus the prediction. When the estimate exceeds
/// `token_cap`, the farthest neighbors are dropped (never the nearest one) and
/// the omission is stated in the prompt.
Prompt build_prompt(const Property& target, const std::vector<NeighborResult>& neighbors, double prediction,
                    const std::vector<NeighborComparison>& comparisons,
                    std::size_t token_cap = kDefaultPromptTokenCap);

/// Prediction sentence followed by one sentence per neighbor naming its three
/// most salient differing features with their direction words.
std::string render_template_explanation(double prediction, const std::vector<NeighborComparison>& neighbors);

enum class Renderer { Llm, Template };
std::string_view to_string(Renderer r);

struct ExplainOptions {
  std::chrono::milliseconds llm_timeout{std::chrono::seconds{20}};
  std::size_t prompt_token_cap = kDefaultPromptTokenCap;
  std::vector<DomainPrior> priors = default_priors();
  std::string audit_log;  // empty disables
};

struct ExplanationBundle {
  double prediction = 0.0;
  std::vector<NeighborComparison> neighbors;
  std::string text;
  Renderer renderer = Renderer::Template;
  std::string prompt;
  std::vector<std::string> notes;
};

/// Never throws on LLM trouble: a missing client, a timeout, an exception or
/// an empty response all yield the template rendering, with a note.
ExplanationBundle generate_explanation(const Property& target, const std::vector<NeighborResult>& neighbors,
                                       double prediction, const FeatureSchema& schema,
                                       const NormalizationStats& stats, std::shared_ptr<LlmClient> llm,
                                       const ExplainOptions& options = {});

}  // namespace proval
