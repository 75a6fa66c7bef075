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

#include <gtest/gtest.h>

#include <set>

#include "proval/errors.hpp"
#include "proval/neighbor_search.hpp"
#include "support/oracles.hpp"
#include "support/random_config.hpp"

namespace proval {
namespace {

Dataset random_corpus(std::uint64_t seed, int size, double missing_rate) {
  std::mt19937_64 rng(seed);
  std::vector<Property> records;
  for (int i = 0; i < size; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "C%05d", i);
    records.push_back(testing::random_property(rng, id, missing_rate));
  }
  return make_dataset(default_schema(), PropertyType::Apartment, std::move(records));
}

std::vector<std::string> ids_of(const NeighborSearchResult& r) {
  std::vector<std::string> out;
  for (const auto& n : r.neighbors) out.push_back(n.neighbor.id);
  return out;
}

TEST(FilterCandidates, NoConstraintsKeepsEverything) {
  const Dataset d = random_corpus(1, 200, 0.3);
  EXPECT_EQ(filter_candidates(PropertyConfiguration{}, d).size(), 200u);
}

TEST(FilterCandidates, RangeExcludesOutsideAndMissing) {
  Property inside, outside, missing;
  inside.set("house_age", 5.0);
  outside.set("house_age", 12.0);
  missing.set("house_age", Missing{});
  PropertyConfiguration c;
  c.constraints["house_age"] = NumericRange{0.0, 10.0};
  EXPECT_TRUE(satisfies(c, inside));
  EXPECT_FALSE(satisfies(c, outside));
  EXPECT_FALSE(satisfies(c, missing));
  // Unconstrained features never exclude, even when Missing.
  EXPECT_TRUE(satisfies(PropertyConfiguration{}, missing));
}

TEST(FilterCandidates, AgreesWithOracleFilter) {
  const Dataset d = random_corpus(2, 500, 0.2);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto config = testing::random_configuration(rng);
    std::vector<std::size_t> want;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
      if (testing::oracle_admits(config, d.records[i])) want.push_back(i);
    }
    ASSERT_EQ(filter_candidates(config, d), want);
  }
}

TEST(FindNeighbors, DuplicateIsFoundAtDistanceZero) {
  std::mt19937_64 rng(4);
  Property original = testing::random_property(rng, "orig", 0.0);
  const Dataset d = make_dataset(default_schema(), PropertyType::Apartment, {original});
  Property target = original;
  target.id = "target";
  const auto r = find_neighbors(target, PropertyConfiguration{}, 1, d);
  ASSERT_EQ(r.found(), 1u);
  EXPECT_EQ(r.neighbors[0].neighbor.id, "orig");
  EXPECT_EQ(r.neighbors[0].distance, 0.0);
  EXPECT_EQ(r.neighbors[0].rank, 1);
  EXPECT_EQ(r.status, NeighborStatus::Ok);
}

TEST(FindNeighbors, ExcludesTargetsOwnId) {
  const Dataset d = random_corpus(5, 50, 0.0);
  const auto r = find_neighbors(d.records[7], PropertyConfiguration{}, 10, d);
  for (const auto& n : r.neighbors) EXPECT_NE(n.neighbor.id, d.records[7].id);
}

TEST(FindNeighbors, ShortfallAndNoCandidates) {
  const Dataset d = random_corpus(6, 30, 0.0);
  const auto all = find_neighbors(d.records[0], PropertyConfiguration{}, 100, d);
  EXPECT_EQ(all.found(), 29u);
  EXPECT_EQ(all.status, NeighborStatus::Shortfall);

  PropertyConfiguration impossible;
  impossible.constraints["house_age"] = NumericRange{1000.0, 2000.0};
  const auto none = find_neighbors(d.records[0], impossible, 6, d);
  EXPECT_EQ(none.found(), 0u);
  EXPECT_EQ(none.status, NeighborStatus::NoCandidates);
  EXPECT_EQ(none.message(), "no neighbors matched configuration");
}

TEST(FindNeighbors, RejectsInvalidInput) {
  const Dataset d = random_corpus(7, 10, 0.0);
  EXPECT_THROW(find_neighbors(d.records[0], PropertyConfiguration{}, 0, d), InvalidArgument);
  PropertyConfiguration bad;
  bad.constraints["house_age"] = NumericRange{5.0, 1.0};
  EXPECT_THROW(find_neighbors(d.records[0], bad, 3, d), InvalidArgument);
}

TEST(FindNeighbors, TiesBreakByIdAscending) {
  Property base;
  base.set("house_age", 10.0);
  base.set("building_area", 50.0);
  std::vector<Property> records;
  for (const char* id : {"z", "b", "m", "a"}) {
    Property p = base;
    p.id = id;
    records.push_back(p);
  }
  Property far = base;
  far.id = "0far";
  far.set("house_age", 40.0);
  records.push_back(far);
  const Dataset d = make_dataset(default_schema(), PropertyType::House, records);
  Property target = base;
  target.id = "t";
  const auto r = find_neighbors(target, PropertyConfiguration{}, 5, d);
  EXPECT_EQ(ids_of(r), (std::vector<std::string>{"a", "b", "m", "z", "0far"}));
  for (std::size_t i = 0; i < r.neighbors.size(); ++i) EXPECT_EQ(r.neighbors[i].rank, static_cast<int>(i + 1));
}

TEST(FindNeighbors, MatchesBruteForceOracle) {
  const Dataset d = random_corpus(8, 1000, 0.15);
  const NeighborIndex index(d);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> pick_k(1, 15);
  for (int trial = 0; trial < 100; ++trial) {
    const Property target = trial % 2 == 0 ? d.records[static_cast<std::size_t>(trial * 7)]
                                           : testing::random_property(rng, "target", 0.4);
    const auto config = testing::random_configuration(rng);
    const int k = pick_k(rng);
    const auto got = find_neighbors(index, target, config, k);
    const auto want = testing::oracle_knn(d, target, config, k);
    ASSERT_EQ(got.neighbors.size(), want.size()) << "trial " << trial;
    for (std::size_t i = 0; i < want.size(); ++i) {
      ASSERT_EQ(got.neighbors[i].neighbor.id, want[i].first) << "trial " << trial << " rank " << i + 1;
      ASSERT_NEAR(got.neighbors[i].distance, want[i].second, 1e-12);
    }
  }
}

TEST(FindNeighbors, EnlargingARangeNeverLosesCandidates) {
  const Dataset d = random_corpus(10, 400, 0.1);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    PropertyConfiguration narrow;
    const double lo = 5.0 + trial % 20;
    narrow.constraints["house_age"] = NumericRange{lo, lo + 10.0};
    PropertyConfiguration wide = narrow;
    wide.constraints["house_age"] = NumericRange{lo - 3.0, lo + 20.0};
    const auto target = testing::random_property(rng, "t", 0.2);
    const auto small = find_neighbors(target, narrow, 8, d);
    std::set<std::size_t> wide_set;
    for (std::size_t i : filter_candidates(wide, d)) wide_set.insert(i);
    for (const auto& n : small.neighbors) {
      auto it = std::find_if(d.records.begin(), d.records.end(), [&](const Property& p) { return p.id == n.neighbor.id; });
      EXPECT_TRUE(wide_set.contains(static_cast<std::size_t>(it - d.records.begin())));
    }
  }
}

TEST(FindNeighbors, DeterministicAndSorted) {
  const Dataset d = random_corpus(12, 300, 0.2);
  std::mt19937_64 rng(13);
  const auto target = testing::random_property(rng, "t", 0.3);
  const auto a = find_neighbors(target, PropertyConfiguration{}, 12, d);
  const auto b = find_neighbors(target, PropertyConfiguration{}, 12, d);
  EXPECT_EQ(ids_of(a), ids_of(b));
  for (std::size_t i = 1; i < a.neighbors.size(); ++i) EXPECT_LE(a.neighbors[i - 1].distance, a.neighbors[i].distance);
}

TEST(Normalize, EntriesInUnitIntervalAndNaNForMissing) {
  const Dataset d = random_corpus(14, 100, 0.0);
  std::mt19937_64 rng(15);
  Property p = testing::random_property(rng, "t", 0.0);
  p.set("house_age", 1000.0);
  p.set("total_floors", Missing{});
  const FeatureVector v = normalize(d.schema, d.stats, p);
  ASSERT_EQ(v.size(), static_cast<Eigen::Index>(d.schema.numeric_indices().size()));
  EXPECT_EQ(v[2], 1.0);
  EXPECT_TRUE(std::isnan(v[4]));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isnan(v[i])) {
      EXPECT_GE(v[i], 0.0);
      EXPECT_LE(v[i], 1.0);
    }
  }
}

}  // namespace
}  // namespace proval
