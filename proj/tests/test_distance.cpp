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

#include "proval/errors.hpp"
#include "proval/neighbor_search.hpp"
#include "support/oracles.hpp"

namespace proval {
namespace {

using testing::kNaN;

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

TEST(MinkowskiDistance, ThreeFourFive) {
  auto d = minkowski_distance(vec({0.0, 0.0}), vec({0.3, 0.4}));
  ASSERT_TRUE(d);
  EXPECT_NEAR(*d, 0.5, 1e-12);
}

TEST(MinkowskiDistance, IdentityIsZero) {
  auto d = minkowski_distance(vec({0.1, 0.7, 0.3}), vec({0.1, 0.7, 0.3}));
  ASSERT_TRUE(d);
  EXPECT_EQ(*d, 0.0);
}

TEST(MinkowskiDistance, MissingEntriesRescaleByObservedFraction) {
  auto d = minkowski_distance(vec({0.0, kNaN}), vec({0.3, 0.9}));
  ASSERT_TRUE(d);
  EXPECT_NEAR(*d, std::sqrt(2.0 * 0.09), 1e-12);
  EXPECT_NEAR(*d, 0.4243, 1e-4);
}

TEST(MinkowskiDistance, NoJointlyObservedEntryIsUndefined) {
  EXPECT_FALSE(minkowski_distance(vec({kNaN, 0.2}), vec({0.3, kNaN})));
  EXPECT_FALSE(minkowski_distance(vec({kNaN, kNaN}), vec({kNaN, kNaN})));
}

TEST(MinkowskiDistance, RejectsBadArguments) {
  EXPECT_THROW(minkowski_distance(vec({0.0, 1.0}), vec({0.0})), InvalidArgument);
  EXPECT_THROW(minkowski_distance(vec({0.0}), vec({1.0}), 0.0), InvalidArgument);
}

TEST(MinkowskiDistance, ExponentParameter) {
  auto d1 = minkowski_distance(vec({0.0, 0.0}), vec({0.3, 0.4}), 1.0);
  ASSERT_TRUE(d1);
  EXPECT_NEAR(*d1, 0.7, 1e-12);
  auto d3 = minkowski_distance(vec({0.0, kNaN}), vec({0.5, 0.1}), 3.0);
  ASSERT_TRUE(d3);
  EXPECT_NEAR(*d3, std::cbrt(2.0 * 0.125), 1e-12);
}

TEST(MinkowskiDistance, FloatScalar) {
  Eigen::VectorXf a(2), b(2);
  a << 0.0f, 0.0f;
  b << 0.3f, 0.4f;
  auto d = minkowski_distance(a, b);
  ASSERT_TRUE(d);
  EXPECT_NEAR(*d, 0.5f, 1e-6f);
}

TEST(MinkowskiDistance, AgreesWithOracleUnderRandomMissingness) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5000; ++trial) {
    const int n = 1 + static_cast<int>(u(rng) * 9);
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = u(rng) < 0.3 ? kNaN : u(rng);
      y[i] = u(rng) < 0.3 ? kNaN : u(rng);
    }
    const auto got = minkowski_distance(x, y);
    const auto want = testing::oracle_distance(as_std(x), as_std(y));
    ASSERT_EQ(got.has_value(), want.has_value());
    if (got) ASSERT_NEAR(*got, *want, 1e-12);
  }
}

TEST(MinkowskiDistance, MetricPropertiesOnFullyObservedVectors) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 7;
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd x(n), y(n), z(n);
    for (int i = 0; i < n; ++i) {
      x[i] = u(rng);
      y[i] = u(rng);
      z[i] = u(rng);
    }
    const double xy = *minkowski_distance(x, y), yx = *minkowski_distance(y, x);
    const double xz = *minkowski_distance(x, z), zy = *minkowski_distance(z, y);
    ASSERT_GE(xy, 0.0);
    ASSERT_NEAR(xy, yx, 1e-9);
    ASSERT_NEAR(*minkowski_distance(x, x), 0.0, 1e-9);
    ASSERT_LE(xy, xz + zy + 1e-9);
  }
}

TEST(MinMaxNormalize, ClampsOutOfRange) {
  EXPECT_EQ(min_max_normalize(5.0, 0.0, 10.0), 0.5);
  EXPECT_EQ(min_max_normalize(-5.0, 0.0, 10.0), 0.0);
  EXPECT_EQ(min_max_normalize(50.0, 0.0, 10.0), 1.0);
  EXPECT_EQ(min_max_normalize(3.0, 3.0, 3.0), 0.0);
}

}  // namespace
}  // namespace proval
