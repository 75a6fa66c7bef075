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

#include "proval/imputation.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace proval {

std::string_view to_string(ImputationStrategy s) {
  switch (s) {
    case ImputationStrategy::None: return "none";
    case ImputationStrategy::Average: return "average";
    case ImputationStrategy::Neighbor: return "neighbor";
  }
  return "unknown";
}

const ImputedFeature* ImputationReport::find(std::string_view feature) const {
  for (const auto& e : entries) {
    if (e.feature == feature) return &e;
  }
  return nullptr;
}

namespace {

// Corpus-level value for one feature; nullopt when unobserved.
std::optional<ImputedFeature> average_value(const FeatureDecl& decl, const NormalizationStats& stats) {
  const FeatureStats* s = stats.find(decl.name);
  if (!s || s->unobserved()) return std::nullopt;
  ImputedFeature f;
  f.feature = decl.name;
  f.strategy = ImputationStrategy::Average;
  f.support = s->count;
  switch (decl.kind) {
    case FeatureKind::Numeric:
      f.value = s->mean;
      break;
    case FeatureKind::Categorical: {
      auto mode = s->mode();
      if (!mode) return std::nullopt;
      f.value = *mode;
      break;
    }
    case FeatureKind::Temporal:
      if (!s->latest) return std::nullopt;
      f.value = *s->latest;
      break;
  }
  return f;
}

std::optional<ImputedFeature> neighbor_value(const FeatureDecl& decl, const std::vector<Property>& neighbors) {
  ImputedFeature f;
  f.feature = decl.name;
  f.strategy = ImputationStrategy::Neighbor;
  switch (decl.kind) {
    case FeatureKind::Numeric: {
      std::vector<double> values;
      for (const auto& n : neighbors) {
        if (const auto* d = std::get_if<double>(&n.feature(decl.name))) {
          values.push_back(*d);
          f.source_ids.push_back(n.id);
        }
      }
      if (values.empty()) return std::nullopt;
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
      f.value = std::clamp(mean, *lo, *hi);
      f.support = values.size();
      break;
    }
    case FeatureKind::Categorical: {
      struct Tally {
        std::size_t count = 0;
        std::optional<Date> latest;
      };
      std::map<std::string, Tally> tally;
      for (const auto& n : neighbors) {
        if (const auto* label = std::get_if<std::string>(&n.feature(decl.name))) {
          auto& t = tally[*label];
          ++t.count;
          if (n.transaction_date && (!t.latest || *n.transaction_date > *t.latest)) t.latest = n.transaction_date;
          f.source_ids.push_back(n.id);
        }
      }
      if (tally.empty()) return std::nullopt;
      // Map order gives the lexicographic tie-break; replace only on a strict win.
      auto best = tally.begin();
      for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
        const Tally& a = it->second;
        const Tally& b = best->second;
        if (a.count > b.count || (a.count == b.count && a.latest > b.latest)) best = it;
      }
      f.value = best->first;
      f.support = f.source_ids.size();
      break;
    }
    case FeatureKind::Temporal: {
      // Latest date wins; observations tied on that date are averaged.
      std::optional<Date> latest;
      std::size_t count = 0;
      for (const auto& n : neighbors) {
        if (const auto* t = std::get_if<TemporalValue>(&n.feature(decl.name))) {
          ++count;
          if (!latest || t->date > *latest) latest = t->date;
        }
      }
      if (!latest) return std::nullopt;
      std::vector<double> tied;
      for (const auto& n : neighbors) {
        if (const auto* t = std::get_if<TemporalValue>(&n.feature(decl.name)); t && t->date == *latest) {
          tied.push_back(t->value);
          f.source_ids.push_back(n.id);
        }
      }
      const auto [lo, hi] = std::minmax_element(tied.begin(), tied.end());
      const double mean = std::accumulate(tied.begin(), tied.end(), 0.0) / static_cast<double>(tied.size());
      f.value = TemporalValue{*latest, std::clamp(mean, *lo, *hi)};
      f.support = count;
      break;
    }
  }
  return f;
}

}  // namespace

Imputed impute_average(const Property& target, const NormalizationStats& stats, const FeatureSchema& schema) {
  Imputed out{target, {}};
  for (const auto& decl : schema.features()) {
    if (!is_missing(target.feature(decl.name))) continue;
    if (auto f = average_value(decl, stats)) {
      out.property.set(decl.name, f->value);
      out.report.entries.push_back(std::move(*f));
    } else {
      out.report.unresolved.push_back(decl.name);
    }
  }
  return out;
}

Imputed impute_neighbor(const Property& target, const std::vector<Property>& neighbors, const FeatureSchema& schema,
                        const NormalizationStats& stats) {
  Imputed out{target, {}};
  out.report.empty_neighborhood = neighbors.empty();
  for (const auto& decl : schema.features()) {
    if (!is_missing(target.feature(decl.name))) continue;
    std::optional<ImputedFeature> f = neighbor_value(decl, neighbors);
    if (!f) {
      f = average_value(decl, stats);
      if (f) out.report.fallbacks.push_back(decl.name);
    }
    if (f) {
      out.property.set(decl.name, f->value);
      out.report.entries.push_back(std::move(*f));
    } else {
      out.report.unresolved.push_back(decl.name);
    }
  }
  return out;
}

Imputed impute_none(const Property& target) { return Imputed{target, {}}; }

}  // namespace proval
