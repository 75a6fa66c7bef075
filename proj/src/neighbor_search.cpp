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

#include "proval/neighbor_search.hpp"

#include <algorithm>
#include <limits>

namespace proval {

FeatureVector normalize(const FeatureSchema& schema, const NormalizationStats& stats, const Property& p) {
  const auto& numeric = schema.numeric_indices();
  FeatureVector v(static_cast<Eigen::Index>(numeric.size()));
  for (std::size_t j = 0; j < numeric.size(); ++j) {
    const auto& name = schema[numeric[j]].name;
    const FeatureStats* s = stats.find(name);
    auto value = scalar_of(p.feature(name));
    if (!value || !s || s->unobserved()) {
      v[static_cast<Eigen::Index>(j)] = std::numeric_limits<double>::quiet_NaN();
    } else {
      v[static_cast<Eigen::Index>(j)] = min_max_normalize(*value, s->min, s->max);
    }
  }
  return v;
}

bool satisfies(const PropertyConfiguration& config, const Property& p) {
  for (const auto& [name, constraint] : config.constraints) {
    const FeatureValue& v = p.feature(name);
    if (is_missing(v)) return false;
    if (const auto* range = std::get_if<NumericRange>(&constraint)) {
      auto x = scalar_of(v);
      if (!x || !range->contains(*x)) return false;
    } else {
      const auto* label = std::get_if<std::string>(&v);
      if (!label || !std::get<CategorySet>(constraint).allowed.contains(*label)) return false;
    }
  }
  return true;
}

std::vector<std::size_t> filter_candidates(const PropertyConfiguration& config, const Dataset& dataset) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    if (satisfies(config, dataset.records[i])) out.push_back(i);
  }
  return out;
}

std::string NeighborSearchResult::message() const {
  switch (status) {
    case NeighborStatus::Ok: return "ok";
    case NeighborStatus::Shortfall:
      return "only " + std::to_string(neighbors.size()) + " neighbors matched configuration";
    case NeighborStatus::NoCandidates: return "no neighbors matched configuration";
  }
  return {};
}

NeighborIndex::NeighborIndex(const Dataset& dataset) : dataset_(&dataset) {
  const auto n = static_cast<Eigen::Index>(dataset.records.size());
  const auto d = static_cast<Eigen::Index>(dataset.schema.numeric_indices().size());
  points_.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) points_.row(i) = encode(dataset.records[static_cast<std::size_t>(i)]).transpose();
}

NeighborSearchResult find_neighbors(const NeighborIndex& index, const Property& target,
                                    const PropertyConfiguration& config, int k, double p) {
  if (k < 1) throw InvalidArgument("find_neighbors: k must be at least 1");
  const Dataset& data = index.dataset();
  if (auto v = validate_configuration(data.schema, config); !v.ok()) {
    throw InvalidArgument("find_neighbors: invalid configuration: " + v.summary());
  }
  const FeatureVector x = index.encode(target);

  struct Scored {
    double distance;
    std::size_t row;
  };
  std::vector<Scored> scored;
  for (std::size_t i : filter_candidates(config, data)) {
    const Property& candidate = data.records[i];
    if (!target.id.empty() && candidate.id == target.id) continue;
    auto d = minkowski_distance(x, index.points().row(static_cast<Eigen::Index>(i)).transpose(), p);
    if (d) scored.push_back({*d, i});
  }

  auto closer = [&](const Scored& a, const Scored& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return data.records[a.row].id < data.records[b.row].id;
  };
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), closer);

  NeighborSearchResult result;
  result.candidates = scored.size();
  for (std::size_t r = 0; r < take; ++r) {
    result.neighbors.push_back({data.records[scored[r].row], scored[r].distance, static_cast<int>(r + 1)});
  }
  if (take == 0) {
    result.status = NeighborStatus::NoCandidates;
  } else if (take < static_cast<std::size_t>(k)) {
    result.status = NeighborStatus::Shortfall;
  }
  return result;
}

NeighborSearchResult find_neighbors(const Property& target, const PropertyConfiguration& config, int k,
                                    const Dataset& dataset, double p) {
  return find_neighbors(NeighborIndex(dataset), target, config, k, p);
}

}  // namespace proval
