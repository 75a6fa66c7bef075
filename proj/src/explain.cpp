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

#include "proval/explain.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <mutex>
#include <thread>

#include "proval/json_codec.hpp"

namespace proval {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

const char* direction_phrase(Direction d) {
  switch (d) {
    case Direction::Higher: return "is higher";
    case Direction::Lower: return "is lower";
    case Direction::Equal: return "is equal";
    case Direction::Differs: return "differs";
    case Direction::Incomparable: return "is incomparable";
  }
  return "";
}

void append_audit(const std::string& path, const std::string& prompt, const std::string& response,
                  Renderer renderer) {
  if (path.empty()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::ofstream out(path, std::ios::app);
  if (!out) {
    spdlog::warn("explain: cannot open audit log {}", path);
    return;
  }
  out << Json{{"renderer", std::string(to_string(renderer))}, {"prompt", prompt}, {"response", response}}.dump()
      << '\n';
}

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Higher: return "higher";
    case Direction::Lower: return "lower";
    case Direction::Equal: return "equal";
    case Direction::Differs: return "differs";
    case Direction::Incomparable: return "incomparable";
  }
  return "unknown";
}

std::optional<Direction> parse_direction(std::string_view word) {
  for (Direction d : {Direction::Higher, Direction::Lower, Direction::Equal, Direction::Differs,
                      Direction::Incomparable}) {
    if (word == to_string(d)) return d;
  }
  return std::nullopt;
}

std::string_view to_string(Renderer r) { return r == Renderer::Llm ? "llm" : "template"; }

std::vector<PairwiseComparison> compare_pairwise(const Property& target, const Property& neighbor,
                                                 const FeatureSchema& schema, const NormalizationStats& stats) {
  std::vector<PairwiseComparison> out;
  out.reserve(schema.size());
  for (const auto& decl : schema.features()) {
    PairwiseComparison c;
    c.feature = decl.name;
    c.target_value = target.feature(decl.name);
    c.neighbor_value = neighbor.feature(decl.name);
    if (is_missing(c.target_value) || is_missing(c.neighbor_value)) {
      out.push_back(std::move(c));
      continue;
    }
    if (decl.kind == FeatureKind::Categorical) {
      const bool same = c.target_value == c.neighbor_value;
      c.direction = same ? Direction::Equal : Direction::Differs;
      c.salience = same ? 0.0 : 1.0;
    } else {
      auto t = scalar_of(c.target_value), n = scalar_of(c.neighbor_value);
      if (t && n) {
        const double delta = *n - *t;
        c.delta = delta;
        c.direction = delta > 0 ? Direction::Higher : (delta < 0 ? Direction::Lower : Direction::Equal);
        const FeatureStats* s = stats.find(decl.name);
        const double range = s ? s->range() : 0.0;
        if (delta == 0) {
          c.salience = 0.0;
        } else if (range > 0) {
          c.salience = std::clamp(std::abs(delta) / range, 0.0, 1.0);
        } else {
          c.salience = 1.0;
        }
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<DomainPrior> default_priors() { return {{std::string(features::kHouseAge), "age", -1}}; }

std::vector<std::string> consistency_annotations(const Property& target, double prediction, const Property& neighbor,
                                                 const std::vector<DomainPrior>& priors) {
  std::vector<std::string> out;
  if (!neighbor.unit_price) return out;
  const double price_delta = *neighbor.unit_price - prediction;
  for (const auto& prior : priors) {
    auto t = scalar_of(target.feature(prior.feature));
    auto n = scalar_of(neighbor.feature(prior.feature));
    if (!t || !n || *t == *n || price_delta == 0.0) continue;
    const double agreement = (*n - *t) * price_delta * prior.sign;
    const std::string sign_word = prior.sign < 0 ? "negative" : "positive";
    out.push_back((agreement > 0 ? "consistent with " : "inconsistent with ") + sign_word + " " + prior.label +
                  "-price prior");
  }
  return out;
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

Prompt build_prompt(const Property& target, const std::vector<NeighborResult>& neighbors, double prediction,
                    const std::vector<NeighborComparison>& comparisons, std::size_t token_cap) {
  auto render = [&](std::size_t keep) {
    std::string s;
    s += "You are helping a property appraiser understand an automated valuation.\n";
    s += "Unit prices are in thousand NTD per square meter.\n\n";
    s += "Predicted unit price of the target property: " + fixed(prediction, 2) + "\n\n";
    s += "Target property (JSON):\n" + canonical_dump(encode(target)) + "\n\n";
    s += "Neighboring properties, nearest first (JSON):\n";
    for (std::size_t i = 0; i < keep; ++i) {
      const NeighborResult& n = neighbors[i];
      s += "Neighbor " + std::to_string(n.rank) + " (distance " + fixed(n.distance, 4) + "):\n";
      s += canonical_dump(encode(n.neighbor)) + "\n";
      for (const auto& c : comparisons) {
        if (c.rank != n.rank) continue;
        Json diffs = Json::array();
        for (const auto& p : c.comparisons) {
          if (p.direction == Direction::Equal || p.direction == Direction::Incomparable) continue;
          diffs.push_back({{"feature", p.feature},
                           {"direction", std::string(to_string(p.direction))},
                           {"salience", p.salience}});
        }
        s += "Differences from the target: " + canonical_dump(diffs) + "\n";
      }
    }
    if (keep < neighbors.size()) {
      s += "(Note: " + std::to_string(neighbors.size() - keep) +
           " more distant neighbor(s) were omitted to fit the prompt budget.)\n";
    }
    s += "\nExplain the prediction feature by feature. For each neighbor, say which features are higher, lower "
         "or different than the target's and whether its price supports the predicted unit price. Finish with one "
         "sentence on how much the neighbors support the prediction.\n";
    return s;
  };

  std::size_t keep = neighbors.size();
  std::string text = render(keep);
  while (keep > 1 && estimate_tokens(text) > token_cap) text = render(--keep);
  return Prompt{std::move(text), keep, neighbors.size() - keep};
}

std::string render_template_explanation(double prediction, const std::vector<NeighborComparison>& neighbors) {
  std::string out = "The predicted unit price is " + fixed(prediction, 2) + " thousand NTD per square meter.";
  for (const auto& n : neighbors) {
    out += "\nNeighbor " + std::to_string(n.rank) + " (" + n.neighbor_id + ", distance " + fixed(n.distance, 4);
    if (n.neighbor_price) out += ", sold at " + fixed(*n.neighbor_price, 2);
    out += "): ";

    std::vector<const PairwiseComparison*> differing;
    for (const auto& c : n.comparisons) {
      if (c.direction != Direction::Equal && c.direction != Direction::Incomparable) differing.push_back(&c);
    }
    std::stable_sort(differing.begin(), differing.end(),
                     [](const auto* a, const auto* b) { return a->salience > b->salience; });
    if (differing.size() > 3) differing.resize(3);

    if (differing.empty()) {
      out += "effectively identical to the target on every comparable feature";
    } else {
      for (std::size_t i = 0; i < differing.size(); ++i) {
        const auto& c = *differing[i];
        if (i > 0) out += ", ";
        out += c.feature + " " + direction_phrase(c.direction) + " (" + describe(c.neighbor_value) + " vs " +
               describe(c.target_value) + ")";
      }
    }
    for (const auto& a : n.annotations) out += "; " + a;
    out += ".";
  }
  return out;
}

ExplanationBundle generate_explanation(const Property& target, const std::vector<NeighborResult>& neighbors,
                                       double prediction, const FeatureSchema& schema,
                                       const NormalizationStats& stats, std::shared_ptr<LlmClient> llm,
                                       const ExplainOptions& options) {
  ExplanationBundle bundle;
  bundle.prediction = prediction;
  for (const auto& n : neighbors) {
    NeighborComparison c;
    c.neighbor_id = n.neighbor.id;
    c.rank = n.rank;
    c.distance = n.distance;
    c.neighbor_price = n.neighbor.unit_price;
    c.comparisons = compare_pairwise(target, n.neighbor, schema, stats);
    c.annotations = consistency_annotations(target, prediction, n.neighbor, options.priors);
    bundle.neighbors.push_back(std::move(c));
  }
  const std::string fallback = render_template_explanation(prediction, bundle.neighbors);
  bundle.text = fallback;
  bundle.renderer = Renderer::Template;

  if (!llm) return bundle;
  if (neighbors.empty()) {
    bundle.notes.push_back("llm skipped: no neighbors to compare");
    return bundle;
  }

  Prompt prompt = build_prompt(target, neighbors, prediction, bundle.neighbors, options.prompt_token_cap);
  bundle.prompt = prompt.text;

  // The client may ignore its timeout, so the call runs on a detached thread
  // that owns the client and the promise; we only wait up to the deadline.
  auto promise = std::make_shared<std::promise<std::string>>();
  auto future = promise->get_future();
  std::thread([llm, promise, text = prompt.text, timeout = options.llm_timeout] {
    try {
      promise->set_value(llm->complete(text, timeout));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  }).detach();

  std::string response;
  if (future.wait_for(options.llm_timeout) != std::future_status::ready) {
    spdlog::warn("explain: LLM '{}' timed out after {} ms, using template", llm->name(), options.llm_timeout.count());
    bundle.notes.push_back("llm timed out; template explanation used");
  } else {
    try {
      response = future.get();
      if (response.empty()) bundle.notes.push_back("llm returned an empty response; template explanation used");
    } catch (const std::exception& e) {
      spdlog::warn("explain: LLM '{}' failed: {}", llm->name(), e.what());
      bundle.notes.push_back(std::string("llm unavailable (") + e.what() + "); template explanation used");
    }
  }
  if (!response.empty()) {
    bundle.text = response;
    bundle.renderer = Renderer::Llm;
  }
  append_audit(options.audit_log, prompt.text, response, bundle.renderer);
  return bundle;
}

}  // namespace proval
