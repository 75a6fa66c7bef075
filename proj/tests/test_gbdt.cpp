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

#include <cstring>

#include "proval/eval.hpp"
#include "proval/gbdt.hpp"
#include "proval/synth.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace proval {
namespace {

// y = 3a - 2b with a in [1, 2], b in [0, 1]; no noise.
Dataset linear_dataset(std::size_t n, std::uint64_t seed) {
  const FeatureSchema schema({{"a", FeatureKind::Numeric, "", true}, {"b", FeatureKind::Numeric, "", true}});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Property> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Property p;
    p.id = "L" + std::to_string(i);
    const double a = 1.0 + u(rng), b = u(rng);
    p.set("a", a);
    p.set("b", b);
    p.unit_price = 3.0 * a - 2.0 * b;
    rows.push_back(std::move(p));
  }
  return make_dataset(schema, PropertyType::Apartment, std::move(rows));
}

TrainParams small_params() {
  TrainParams p;
  p.num_trees = 60;
  p.seed = 3;
  return p;
}

TEST(TrainParams, Validation) {
  TrainParams p;
  EXPECT_NO_THROW(p.validate());
  p.num_trees = 0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.learning_rate = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.max_leaves = 1;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p = {};
  p.feature_histogram_bins = 1;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Train, RejectsTooFewRowsAndMissingPrices) {
  TrainParams p = small_params();
  EXPECT_THROW(train(linear_dataset(2 * p.min_samples_leaf - 1, 1), p), InvalidArgument);
  Dataset d = linear_dataset(100, 1);
  d.records[5].unit_price.reset();
  EXPECT_THROW(train(d, p), InvalidArgument);
}

TEST(Train, LossIsMonotoneAtCheckpoints) {
  const Dataset d = synth_generate(11, 2000, 0.8);
  TrainParams p;
  p.seed = 11;
  const GbdtModel model = train(d, p);
  const Eigen::MatrixXd rows = model.encode(d.records);
  double previous = INFINITY;
  for (std::size_t limit = 10; limit <= model.trees.size(); limit += 10) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const double r = model.raw_score(rows.row(i), limit) - model.transform(*d.records[i].unit_price);
      loss += r * r;
    }
    loss /= static_cast<double>(rows.rows());
    EXPECT_LE(loss, previous) << "at " << limit << " trees";
    previous = loss;
  }
}

TEST(Train, NoiselessLinearFit) {
  const Dataset d = linear_dataset(2000, 5);
  TrainParams p;
  p.target_transform = TargetTransform::Identity;
  const GbdtModel model = train(d, p);
  std::vector<double> actual, predicted;
  for (const auto& r : d.records) {
    actual.push_back(*r.unit_price);
    predicted.push_back(predict(model, d.schema, r));
  }
  EXPECT_LE(mape(actual, predicted), 5.0);
}

TEST(Train, ConstantTargetHasNoTrees) {
  Dataset d = linear_dataset(100, 2);
  for (auto& r : d.records) r.unit_price = 42.0;
  const GbdtModel model = train(d, small_params());
  EXPECT_TRUE(model.trees.empty());
  EXPECT_NEAR(predict(model, d.schema, d.records[0]), 42.0, 1e-9);
}

TEST(Train, DeterministicForFixedSeed) {
  const Dataset d = synth_generate(4, 800, 0.8);
  EXPECT_EQ(train(d, small_params()), train(d, small_params()));
}

TEST(Predict, AgreesWithNaiveTreeWalk) {
  const Dataset d = synth_generate(6, 1500, 0.8);
  const GbdtModel model = train(d, small_params());
  std::mt19937_64 rng(6);
  for (int i = 0; i < 500; ++i) {
    const Property p = testing::random_property(rng, "q", 0.4);
    const double got = predict(model, d.schema, p);
    EXPECT_NEAR(got, testing::oracle_tree_walk(model, model.encode(p)), 1e-9 * std::abs(got));
  }
}

TEST(Predict, MissingFeaturesStillYieldFinitePositivePrices) {
  const Dataset d = synth_generate(8, 1000, 0.8);
  const GbdtModel model = train(d, small_params());
  Property empty;
  const double v = predict(model, d.schema, empty);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(v, 0.0);
}

TEST(Predict, RejectsForeignSchema) {
  const Dataset d = linear_dataset(200, 1);
  const GbdtModel model = train(d, small_params());
  EXPECT_THROW(predict(model, default_schema(), d.records[0]), SchemaMismatch);
}

TEST(Serialization, RoundTripIsBitIdentical) {
  const Dataset d = synth_generate(9, 2000, 0.8);
  const GbdtModel model = train(d, small_params());
  testing::TempDir dir;
  const auto path = dir.path() / "model.json";
  save_model(path, model);
  const GbdtModel loaded = load_model(path, d.schema);
  EXPECT_EQ(loaded, model);
  const GbdtModel decoded = decode_model(Json::parse(encode(model).dump()));

  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Property p = testing::random_property(rng, "probe", 0.3);
    const double a = predict(model, d.schema, p), b = predict(loaded, d.schema, p), c = predict(decoded, d.schema, p);
    ASSERT_EQ(std::memcmp(&a, &b, sizeof a), 0) << i;
    ASSERT_EQ(std::memcmp(&a, &c, sizeof a), 0) << i;
  }
}

TEST(Serialization, LoadChecksSchemaHashAndFormat) {
  const Dataset d = linear_dataset(200, 1);
  const GbdtModel model = train(d, small_params());
  testing::TempDir dir;
  save_model(dir.path() / "m.json", model);
  EXPECT_THROW(load_model(dir.path() / "m.json", default_schema()), SchemaMismatch);
  EXPECT_THROW(load_model(dir.path() / "absent.json", d.schema), IoError);
  Json j = encode(model);
  j["version"] = 999;
  EXPECT_THROW(decode_model(j), InvalidArgument);
}

TEST(Categorical, SplitsSeparateLabels) {
  const FeatureSchema schema({{"zone", FeatureKind::Categorical, "", true}});
  std::vector<Property> rows;
  const char* zones[] = {"a", "b", "c", "d"};
  const double price[] = {10, 40, 10, 40};
  for (int i = 0; i < 400; ++i) {
    Property p;
    p.id = std::to_string(i);
    p.set("zone", std::string(zones[i % 4]));
    p.unit_price = price[i % 4];
    rows.push_back(std::move(p));
  }
  const Dataset d = make_dataset(schema, PropertyType::House, std::move(rows));
  const GbdtModel model = train(d, small_params());
  Property q;
  q.set("zone", std::string("b"));
  const double high = predict(model, schema, q);
  q.set("zone", std::string("c"));
  const double low = predict(model, schema, q);
  EXPECT_GT(high, 30.0);
  EXPECT_LT(low, 15.0);
}

}  // namespace
}  // namespace proval
