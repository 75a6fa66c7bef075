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

#include "proval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "proval/imputation.hpp"
#include "proval/neighbor_search.hpp"

namespace proval {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::set<std::string> default_keep_always() {
  return {std::string(features::kLatitude), std::string(features::kLongitude), std::string(features::kHouseAge)};
}

Property mask_features(const Property& property, const FeatureSchema& schema, double mask_rate,
                       const std::set<std::string>& keep_always, std::uint64_t seed) {
  if (!(mask_rate >= 0.0 && mask_rate <= 1.0)) throw InvalidArgument("mask_features: mask_rate must lie in [0, 1]");
  for (const auto& name : keep_always) {
    if (!schema.find(name)) throw InvalidArgument("mask_features: keep_always names undeclared feature '" + name + "'");
  }
  Property out = property;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& decl : schema.features()) {
    if (keep_always.contains(decl.name)) continue;
    const double u = unit(rng);  // drawn for every maskable feature so masks stay aligned
    if (u < mask_rate) out.set(decl.name, Missing{});
  }
  return out;
}

std::string_view to_string(AblationArm arm) {
  switch (arm) {
    case AblationArm::None: return "none";
    case AblationArm::Average: return "average";
    case AblationArm::Neighbor: return "neighbor";
    case AblationArm::Ideal: return "ideal";
  }
  return "unknown";
}

const AblationCell* AblationResult::find(PropertyType type, AblationArm arm) const {
  for (const auto& c : cells) {
    if (c.property_type == type && c.arm == arm) return &c;
  }
  return nullptr;
}

void AblationResult::merge(const AblationResult& other) {
  if (cells.empty()) {
    *this = other;
    return;
  }
  cells.insert(cells.end(), other.cells.begin(), other.cells.end());
}

AblationResult run_ablation(const Dataset& dataset, const TrainParams& params, const PropertyConfiguration& config,
                            int k, double mask_rate, const std::vector<std::uint64_t>& seeds,
                            const AblationOptions& options) {
  if (seeds.empty()) throw InvalidArgument("run_ablation: at least one seed is required");
  if (k < 1) throw InvalidArgument("run_ablation: k must be at least 1");
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    throw InvalidArgument("run_ablation: test_fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.records.size();
  const auto n_test = static_cast<std::size_t>(std::llround(options.test_fraction * static_cast<double>(n)));
  if (n_test == 0 || n_test >= n) throw InvalidArgument("run_ablation: dataset too small to split");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(seeds.front());
  std::shuffle(order.begin(), order.end(), split_rng);
  std::vector<Property> test, train_rows;
  for (std::size_t i = 0; i < n; ++i) {
    (i < n_test ? test : train_rows).push_back(dataset.records[order[i]]);
  }
  const Dataset train_set = make_dataset(dataset.schema, dataset.property_type, std::move(train_rows));
  const GbdtModel model = train(train_set, params);
  const NeighborIndex index(train_set);
  const FeatureSchema& schema = dataset.schema;

  Eigen::VectorXd actual(static_cast<Eigen::Index>(n_test));
  Eigen::VectorXd ideal(static_cast<Eigen::Index>(n_test));
  for (std::size_t i = 0; i < n_test; ++i) {
    actual[static_cast<Eigen::Index>(i)] = *test[i].unit_price;
    ideal[static_cast<Eigen::Index>(i)] = predict(model, schema, test[i]);
  }
  const double ideal_mape = mape(actual, ideal);

  AblationResult result;
  result.mask_rate = mask_rate;
  result.k = k;
  result.seeds = seeds;
  result.split_seed = seeds.front();
  std::map<AblationArm, AblationCell> cells;
  for (AblationArm arm : kAblationArms) {
    cells[arm].property_type = dataset.property_type;
    cells[arm].arm = arm;
    cells[arm].n_test = n_test;
  }

  for (std::uint64_t seed : seeds) {
    Eigen::VectorXd none(actual.size()), average(actual.size()), neighbor(actual.size());
    for (std::size_t i = 0; i < n_test; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const Property masked = mask_features(test[i], schema, mask_rate, options.keep_always, mix(seed, i));
      none[row] = predict(model, schema, impute_none(masked).property);
      average[row] = predict(model, schema, impute_average(masked, train_set.stats, schema).property);

      const NeighborSearchResult found = find_neighbors(index, masked, config, k);
      std::vector<Property> neighbors;
      for (const auto& r : found.neighbors) neighbors.push_back(r.neighbor);
      const Imputed imputed = impute_neighbor(masked, neighbors, schema, train_set.stats);
      if (imputed.report.empty_neighborhood || !imputed.report.fallbacks.empty()) ++cells[AblationArm::Neighbor].fallback_count;
      neighbor[row] = predict(model, schema, imputed.property);
    }
    cells[AblationArm::None].per_seed.push_back(mape(actual, none));
    cells[AblationArm::Average].per_seed.push_back(mape(actual, average));
    cells[AblationArm::Neighbor].per_seed.push_back(mape(actual, neighbor));
    cells[AblationArm::Ideal].per_seed.push_back(ideal_mape);
  }

  for (AblationArm arm : kAblationArms) {
    AblationCell& c = cells[arm];
    c.mape_mean = std::accumulate(c.per_seed.begin(), c.per_seed.end(), 0.0) / static_cast<double>(c.per_seed.size());
    c.mape_std = sample_std(c.per_seed);
    result.cells.push_back(std::move(c));
  }
  return result;
}

void write_ablation_csv(std::ostream& out, const AblationResult& result) {
  out << "property_type,strategy,mape_mean,mape_std,n_test,fallback_count\n";
  for (const auto& c : result.cells) {
    out << to_string(c.property_type) << ',' << to_string(c.arm) << ',' << format_number(c.mape_mean) << ','
        << format_number(c.mape_std) << ',' << c.n_test << ',' << c.fallback_count << '\n';
  }
}

std::string format_ablation_table(const AblationResult& result) {
  static constexpr std::array<const char*, 4> kHeaders = {"No Imputation", "Average Imputation", "Neighbor Imputation",
                                                          "Ideal"};
  char line[256];
  std::string out;
  std::snprintf(line, sizeof(line), "%-10s | %-20s | %-20s | %-20s | %-20s\n", "MAPE (%)", kHeaders[0], kHeaders[1],
                kHeaders[2], kHeaders[3]);
  out += line;
  out += std::string(106, '-') + "\n";
  for (PropertyType type : kPropertyTypes) {
    if (!result.find(type, AblationArm::Ideal)) continue;
    std::array<std::string, 4> col;
    for (std::size_t a = 0; a < kAblationArms.size(); ++a) {
      const AblationCell* c = result.find(type, kAblationArms[a]);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f +/- %.2f", c->mape_mean, c->mape_std);
      col[a] = buf;
    }
    std::string name(to_string(type));
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    std::snprintf(line, sizeof(line), "%-10s | %-20s | %-20s | %-20s | %-20s\n", name.c_str(), col[0].c_str(),
                  col[1].c_str(), col[2].c_str(), col[3].c_str());
    out += line;
  }
  char footer[160];
  std::snprintf(footer, sizeof(footer), "mask_rate=%.2f k=%d seeds=%zu split_seed=%llu\n", result.mask_rate, result.k,
                result.seeds.size(), static_cast<unsigned long long>(result.split_seed));
  out += footer;
  return out;
}

}  // namespace proval
