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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Everything runs offline.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "proval/eval.hpp"
#include "proval/explain.hpp"
#include "proval/imputation.hpp"
#include "proval/synth.hpp"
#include "support/oracles.hpp"
#include "support/random_config.hpp"
#include "support/temp_dir.hpp"

namespace proval {
namespace {

using Clock = std::chrono::steady_clock;
using namespace std::chrono_literals;

struct Verdict {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Verdict ablation_ordering() {
  const auto started = Clock::now();
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  PropertyConfiguration config;
  config.k = 6;
  TrainParams params;
  params.seed = seeds.front();
  AblationResult all;
  for (auto& [type, d] : synth_corpus(seeds.front(), 5000, 0.8)) {
    all.merge(run_ablation(d, params, config, 6, 0.5, seeds));
  }
  const double elapsed = seconds_since(started);
  Verdict v;
  std::string detail;
  for (PropertyType t : kPropertyTypes) {
    const double none = all.find(t, AblationArm::None)->mape_mean;
    const double avg = all.find(t, AblationArm::Average)->mape_mean;
    const double nbr = all.find(t, AblationArm::Neighbor)->mape_mean;
    const double ideal = all.find(t, AblationArm::Ideal)->mape_mean;
    const bool ok = ideal <= nbr && nbr < avg && avg < none;
    v.pass &= ok;
    detail += fmt("%s ideal=%.2f neighbor=%.2f average=%.2f none=%.2f%s; ", std::string(to_string(t)).c_str(), ideal,
                  nbr, avg, none, ok ? "" : " (order violated)");
  }
  v.pass &= elapsed <= 300.0;
  v.detail = detail + fmt("runtime %.1f s (limit 300 s)", elapsed);
  return v;
}

Verdict knn_oracle() {
  const Dataset d = synth_generate(2024, 1000, 0.8);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int c = 0; c < 200; ++c) {
    Property target = u(rng) < 0.5 ? d.records[static_cast<std::size_t>(u(rng) * 1000) % 1000]
                                   : testing::random_property(rng, "q" + std::to_string(c), 0.3);
    if (u(rng) < 0.3) target.set(features::kBuildingArea, Missing{});
    const PropertyConfiguration config = testing::random_configuration(rng);
    const int k = 1 + static_cast<int>(u(rng) * 20);
    const auto got = find_neighbors(target, config, k, d);
    const auto want = testing::oracle_knn(d, target, config, k);
    bool same = got.neighbors.size() == want.size();
    for (std::size_t i = 0; same && i < want.size(); ++i) same = got.neighbors[i].neighbor.id == want[i].first;
    mismatches += !same;
  }
  return {mismatches == 0, fmt("200 cases, %d mismatches", mismatches)};
}

Verdict distance_metric() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int failures = 0;
  auto dist = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return *minkowski_distance(a, b); };
  for (int i = 0; i < 10000; ++i) {
    const int n = 1 + static_cast<int>(u(rng) * 8);
    Eigen::VectorXd x(n), y(n), z(n);
    for (int j = 0; j < n; ++j) {
      x[j] = u(rng);
      y[j] = u(rng);
      z[j] = u(rng);
    }
    const double xy = dist(x, y), yx = dist(y, x), xz = dist(x, z), zy = dist(z, y);
    const bool ok = xy >= -1e-9 && std::abs(xy - yx) <= 1e-9 && std::abs(dist(x, x)) <= 1e-9 &&
                    xy <= xz + zy + 1e-9;
    failures += !ok;
  }
  Eigen::VectorXd a(2), b(2);
  a << 0.0, 0.0;
  b << 0.3, 0.4;
  const double spot = dist(a, b);
  const bool spot_ok = std::abs(spot - 0.5) <= 1e-12;
  return {failures == 0 && spot_ok,
          fmt("10000 pairs, %d failures; 3-4-5 case = %.15f (|err| %.1e)", failures, spot, std::abs(spot - 0.5))};
}

// ---------------------------------------------------------------------------

std::vector<Property> random_neighbors(std::mt19937_64& rng, double missing_rate) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  static const char* kLabels[] = {"commercial", "industrial", "residential_a"};
  std::vector<Property> out(static_cast<std::size_t>(u(rng) * 9));
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = testing::random_property(rng, "N" + std::to_string(i), missing_rate);
    if (!is_missing(out[i].feature(features::kLandUse))) {
      out[i].set(features::kLandUse, std::string(kLabels[static_cast<int>(u(rng) * 3) % 3]));
    }
    if (u(rng) < 0.2) out[i].transaction_date.reset();
  }
  return out;
}

// Count, then most recent carrier date (undated oldest), then lexicographic.
std::optional<std::string> oracle_label(const std::vector<Property>& neighbors) {
  std::map<std::string, std::pair<int, std::optional<Date>>> t;
  for (const auto& n : neighbors) {
    if (const auto* l = std::get_if<std::string>(&n.feature(features::kLandUse))) {
      auto& e = t[*l];
      ++e.first;
      if (n.transaction_date && (!e.second || *n.transaction_date > *e.second)) e.second = n.transaction_date;
    }
  }
  std::optional<std::string> best;
  std::pair<int, std::optional<Date>> top{-1, std::nullopt};
  for (const auto& [label, e] : t) {
    if (e.first > top.first || (e.first == top.first && e.second && (!top.second || *e.second > *top.second))) {
      best = label;
      top = e;
    }
  }
  return best;
}

Verdict imputation_suite() {
  const FeatureSchema schema = default_schema();
  std::mt19937_64 rng(123);
  std::vector<Property> corpus;
  for (int i = 0; i < 300; ++i) corpus.push_back(testing::random_property(rng, "C" + std::to_string(i), 0.1));
  const NormalizationStats stats = compute_stats(schema, corpus);
  std::map<std::string, int> failures{
      {"boundedness", 0}, {"membership", 0}, {"idempotence", 0}, {"tie-break", 0}, {"fallback", 0}};

  for (int c = 0; c < 1000; ++c) {  // boundedness
    const auto nb = random_neighbors(rng, 0.4);
    const auto r = impute_neighbor(testing::random_property(rng, "t", 0.6), nb, schema, stats);
    for (const auto& e : r.report.entries) {
      if (e.strategy != ImputationStrategy::Neighbor || schema.find(e.feature)->kind == FeatureKind::Categorical) {
        continue;
      }
      double lo = INFINITY, hi = -INFINITY;
      for (const auto& n : nb) {
        if (std::find(e.source_ids.begin(), e.source_ids.end(), n.id) == e.source_ids.end()) continue;
        if (auto x = scalar_of(n.feature(e.feature))) lo = std::min(lo, *x), hi = std::max(hi, *x);
      }
      const double x = *scalar_of(e.value);
      if (!(lo <= x && x <= hi)) ++failures["boundedness"];
    }
  }
  for (int c = 0; c < 1000; ++c) {  // membership
    const auto nb = random_neighbors(rng, 0.5);
    Property t = testing::random_property(rng, "t", 0.3);
    t.set(features::kLandUse, Missing{});
    const auto r = impute_neighbor(t, nb, schema, stats);
    const ImputedFeature* e = r.report.find(features::kLandUse);
    bool ok = e != nullptr;
    if (ok) {
      const auto& label = std::get<std::string>(e->value);
      if (e->strategy == ImputationStrategy::Neighbor) {
        ok = std::any_of(nb.begin(), nb.end(), [&](const Property& n) { return n.feature(features::kLandUse) == FeatureValue{label}; });
      } else {
        ok = stats.find(features::kLandUse)->frequencies.contains(label);
      }
    }
    failures["membership"] += !ok;
  }
  for (int c = 0; c < 1000; ++c) {  // idempotence
    const auto nb = random_neighbors(rng, 0.3);
    const Property full = testing::random_property(rng, "t", 0.0);
    const Property masked = testing::random_property(rng, "m", 0.5);
    const auto once = impute_neighbor(masked, nb, schema, stats);
    const auto avg_once = impute_average(masked, stats, schema);
    const bool ok = impute_neighbor(full, nb, schema, stats).property == full &&
                    impute_average(full, stats, schema).property == full && impute_none(full).property == full &&
                    impute_neighbor(once.property, nb, schema, stats).property == once.property &&
                    impute_average(avg_once.property, stats, schema).property == avg_once.property;
    failures["idempotence"] += !ok;
  }
  for (int c = 0; c < 1000; ++c) {  // tie-break determinism
    auto nb = random_neighbors(rng, 0.3);
    Property t;
    t.set(features::kLandUse, Missing{});
    const auto a = impute_neighbor(t, nb, schema, stats);
    std::shuffle(nb.begin(), nb.end(), rng);
    const auto b = impute_neighbor(t, nb, schema, stats);
    bool ok = a.property.feature(features::kLandUse) == b.property.feature(features::kLandUse);
    if (auto want = oracle_label(nb)) ok &= a.property.feature(features::kLandUse) == FeatureValue{*want};
    failures["tie-break"] += !ok;
  }
  for (int c = 0; c < 1000; ++c) {  // per-feature fallback
    const auto nb = random_neighbors(rng, 0.6);
    const Property t = testing::random_property(rng, "t", 0.7);
    const auto r = impute_neighbor(t, nb, schema, stats);
    const auto avg = impute_average(t, stats, schema);
    bool ok = true;
    for (const auto& decl : schema.features()) {
      if (!is_missing(t.feature(decl.name))) continue;
      const bool carried =
          std::any_of(nb.begin(), nb.end(), [&](const Property& n) { return !is_missing(n.feature(decl.name)); });
      const bool fell_back =
          std::find(r.report.fallbacks.begin(), r.report.fallbacks.end(), decl.name) != r.report.fallbacks.end();
      ok &= fell_back == !carried;
      if (!carried) ok &= r.property.feature(decl.name) == avg.property.feature(decl.name);
    }
    failures["fallback"] += !ok;
  }
  Verdict v;
  for (const auto& [name, n] : failures) {
    v.pass &= n == 0;
    v.detail += fmt("%s %d/1000 failures; ", name.c_str(), n);
  }
  v.detail.resize(v.detail.size() - 2);
  return v;
}

// ---------------------------------------------------------------------------

Verdict gbdt() {
  Verdict v;
  // Loss at 10-tree checkpoints.
  const Dataset d = synth_generate(11, 2000, 0.8);
  TrainParams params;
  params.seed = 11;
  const GbdtModel model = train(d, params);
  const Eigen::MatrixXd rows = model.encode(d.records);
  double previous = INFINITY;
  int increases = 0;
  for (std::size_t limit = 10; limit <= model.trees.size(); limit += 10) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const double r = model.raw_score(rows.row(i), limit) - model.transform(*d.records[i].unit_price);
      loss += r * r;
    }
    loss /= static_cast<double>(rows.rows());
    increases += loss > previous;
    previous = loss;
  }
  v.pass &= increases == 0;
  v.detail += fmt("loss increases at checkpoints: %d; ", increases);

  // Noiseless fit of 3a - 2b.
  const FeatureSchema ab({{"a", FeatureKind::Numeric, "", true}, {"b", FeatureKind::Numeric, "", true}});
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Property> rows_ab;
  for (int i = 0; i < 2000; ++i) {
    Property p;
    p.id = std::to_string(i);
    const double a = 1.0 + u(rng), b = u(rng);
    p.set("a", a);
    p.set("b", b);
    p.unit_price = 3 * a - 2 * b;
    rows_ab.push_back(std::move(p));
  }
  const Dataset linear = make_dataset(ab, PropertyType::Apartment, std::move(rows_ab));
  const GbdtModel fit = train(linear, TrainParams{});
  std::vector<double> actual, predicted;
  for (const auto& p : linear.records) {
    actual.push_back(*p.unit_price);
    predicted.push_back(predict(fit, ab, p));
  }
  const double fit_mape = mape(actual, predicted);
  v.pass &= fit_mape <= 5.0;
  v.detail += fmt("3a-2b training MAPE %.3f%% (limit 5%%); ", fit_mape);

  // Serialization round-trip.
  testing::TempDir dir;
  save_model(dir.path() / "m.json", model);
  const GbdtModel loaded = load_model(dir.path() / "m.json", d.schema);
  int differing = 0;
  std::mt19937_64 probe(9);
  for (int i = 0; i < 1000; ++i) {
    const Property p = testing::random_property(probe, "p", 0.3);
    const double x = predict(model, d.schema, p), y = predict(loaded, d.schema, p);
    differing += std::memcmp(&x, &y, sizeof x) != 0;
  }
  v.pass &= differing == 0;
  v.detail += fmt("round-trip: %d/1000 probe predictions differ", differing);
  return v;
}

Verdict mape_checks() {
  const std::vector<double> a{100, 200}, p{110, 180};
  const double identity = mape(a, a), two_point = mape(a, p);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.5, 500.0), scale(1e-3, 1e3);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Eigen::VectorXd x(20), y(20);
    for (int i = 0; i < 20; ++i) x[i] = u(rng), y[i] = u(rng);
    const double c = scale(rng);
    const Eigen::VectorXd cx = c * x, cy = c * y;
    worst = std::max(worst, std::abs(mape(cx, cy) - mape(x, y)) / std::max(1.0, mape(x, y)));
  }
  return {identity == 0.0 && two_point == 10.0 && worst <= 1e-12,
          fmt("identity %.17g, two-point %.17g, worst relative scale drift %.2e", identity, two_point, worst)};
}

Verdict offline_end_to_end() {
  testing::TempDir dir;
  const std::string data = dir.path().string();
  std::ostringstream out, err;
  if (cli::run({"synth", "--seed", "3", "--size", "1000", "--data-dir", data}, out, err) != 0 ||
      cli::run({"train", "--data-dir", data}, out, err) != 0) {
    return {false, "setup failed: " + err.str()};
  }
  const DataLayout layout{dir.path()};
  const Dataset d = load_dataset(layout, default_schema(), PropertyType::Apartment);
  const Property& record = d.records[42];
  const Json request{{"property_type", "apartment"},
                     {"address", record.address},
                     {"transaction_date", format_date(*record.transaction_date)},
                     {"features", encode(record)["features"]},
                     {"configuration", Json::object()}};
  const auto path = dir.path() / "request.json";
  std::ofstream(path) << request.dump();
  std::ostringstream report_out;
  if (cli::run({"predict", path.string(), "--data-dir", data}, report_out, err) != 0) {
    return {false, "predict failed: " + err.str()};
  }
  const Json r = Json::parse(report_out.str());
  const Json& first = r["neighbors"][0];
  const bool rank_ok = first["rank"] == 1 && first["id"] == record.id && first["distance"].get<double>() == 0.0;

  // Complete: every schema feature is observed, imputed, or listed unresolved.
  const Json& imp = r["imputation"];
  bool complete = imp.contains("entries") && imp.contains("unresolved") && imp.contains("fallbacks") &&
                  imp.contains("empty_neighborhood");
  const FeatureSchema schema = default_schema();
  for (const auto& decl : schema.features()) {
    const Json& tf = r.at("target").at("features");
    const bool observed = tf.contains(decl.name) && !tf.at(decl.name).is_null();
    bool imputed = false, unresolved = false;
    for (const auto& e : imp["entries"]) imputed |= e["feature"] == decl.name;
    for (const auto& u : imp["unresolved"]) unresolved |= u == decl.name;
    complete &= (observed ? 1 : 0) + (imputed ? 1 : 0) + (unresolved ? 1 : 0) == 1;
  }
  const bool explained = r["explanation"]["renderer"] == "template" &&
                         !r["explanation"]["text"].get<std::string>().empty();
  return {rank_ok && complete && explained,
          fmt("rank-1 %s at distance %g (expected %s at 0); imputation report %s; template explanation %s",
              first["id"].get<std::string>().c_str(), first["distance"].get<double>(), record.id.c_str(),
              complete ? "complete" : "incomplete", explained ? "non-empty" : "missing")};
}

Verdict explanation_fallback() {
  const Dataset d = synth_generate(8, 500, 0.8);
  Property target = d.records[0];
  target.id = "target";
  const auto neighbors = find_neighbors(target, {}, 6, d).neighbors;
  ExplainOptions options;
  options.llm_timeout = 500ms;
  // Unreachable backend: never answers within the deadline.
  auto llm = std::make_shared<StaticLlmClient>("unreachable", 10s);
  const auto started = Clock::now();
  ExplanationBundle b;
  bool threw = false;
  try {
    b = generate_explanation(target, neighbors, 50.0, d.schema, d.stats, llm, options);
  } catch (...) {
    threw = true;
  }
  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
  const bool ok = !threw && b.renderer == Renderer::Template && !b.text.empty() &&
                  elapsed <= options.llm_timeout + 100ms;
  return {ok, fmt("renderer=%s after %lld ms (limit %lld ms)%s", std::string(to_string(b.renderer)).c_str(),
                  static_cast<long long>(elapsed.count()),
                  static_cast<long long>((options.llm_timeout + 100ms).count()), threw ? ", threw" : "")};
}

}  // namespace
}  // namespace proval

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<const char*, std::function<proval::Verdict()>>> criteria = {
      {"ablation ordering", proval::ablation_ordering},
      {"kNN oracle equivalence", proval::knn_oracle},
      {"distance metric suite", proval::distance_metric},
      {"imputation suite", proval::imputation_suite},
      {"GBDT", proval::gbdt},
      {"MAPE", proval::mape_checks},
      {"offline end-to-end", proval::offline_end_to_end},
      {"explanation fallback", proval::explanation_fallback},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    proval::Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s [%zu] %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
