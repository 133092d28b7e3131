/*
 * Copyright 2026 The Uplift Eval Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uplift/data_model.h"

#include <cmath>
#include <random>
#include <sstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_helpers.h"
#include "uplift/errors.h"

namespace uplift {
namespace {

using ::testing::ElementsAre;
using test_util::InOrder;
using test_util::KindOf;
using test_util::MakeDataset;
using test_util::Unit;

std::vector<std::size_t> Order(const ScoredDataset& s) {
  return {s.order().begin(), s.order().end()};
}

LoggedBanditDataset Parse(const std::string& text) {
  std::istringstream in(text);
  return LoadDataset(in);
}

const char kHeader[] = "unit_id,features,treatment,outcome,propensity\n";

TEST(LoadDatasetTest, MapsFields) {
  const auto d = Parse(std::string(kHeader) + "7,ST,1,1,0.5\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].unit_id, 7);
  EXPECT_EQ(std::get<std::string>(d[0].features), "ST");
  EXPECT_EQ(d[0].treatment, 1);
  EXPECT_EQ(d[0].outcome, 1.0);
  EXPECT_EQ(d[0].propensity, 0.5);
  EXPECT_TRUE(d.binary_outcome());
  EXPECT_FALSE(d.embedded_scores().has_value());
}

TEST(LoadDatasetTest, VectorFeaturesAndScores) {
  const auto d = Parse(
      "unit_id,features,treatment,outcome,propensity,score\n"
      "1,0.5|1.5,0,2.5,0.25,0.75\n");
  EXPECT_THAT(std::get<std::vector<double>>(d[0].features),
              ElementsAre(0.5, 1.5));
  EXPECT_FALSE(d.binary_outcome());
  ASSERT_TRUE(d.embedded_scores().has_value());
  EXPECT_THAT(*d.embedded_scores(), ElementsAre(0.75));
}

TEST(LoadDatasetTest, OverlapViolations) {
  EXPECT_EQ(KindOf([] { Parse(std::string(kHeader) + "1,A,1,1,0.0\n"); }),
            ErrorKind::kOverlapViolation);
  EXPECT_EQ(KindOf([] { Parse(std::string(kHeader) + "1,A,1,1,1.0\n"); }),
            ErrorKind::kOverlapViolation);
}

TEST(LoadDatasetTest, RejectsBadTreatmentAndRows) {
  EXPECT_EQ(KindOf([] { Parse(std::string(kHeader) + "1,A,2,1,0.5\n"); }),
            ErrorKind::kDomain);
  try {
    Parse(std::string(kHeader) + "1,A,1,1,0.5\n2,A,1,x,0.5\n");
    FAIL();
  } catch (const UpliftError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
    EXPECT_THAT(e.what(), ::testing::HasSubstr("line 3"));
  }
  EXPECT_EQ(KindOf([] { Parse("id,features,treatment,outcome,propensity\n"); }),
            ErrorKind::kParse);
}

TEST(LoadDatasetTest, RoundTrip) {
  const auto d = MakeDataset({{1, 1, 0.25}, {0, 0, 0.75}, {1, 0, 1.0 / 3.0}});
  const std::vector<double> scores = {0.1, -2.0, 1e-17};
  std::ostringstream out;
  WriteDataset(out, d, std::span<const double>(scores));
  const auto back = Parse(out.str());
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back[i].treatment, d[i].treatment);
    EXPECT_EQ(back[i].outcome, d[i].outcome);
    EXPECT_EQ(back[i].propensity, d[i].propensity);
  }
  EXPECT_EQ(*back.embedded_scores(), scores);
}

TEST(RankByScoreTest, DescendingPermutation) {
  const auto s = RankByScore(MakeDataset({{}, {}, {}}), {0.1, 0.5, 0.3});
  // 1-based phi = [2, 3, 1].
  EXPECT_THAT(Order(s), ElementsAre(1, 2, 0));
}

TEST(RankByScoreTest, IsoGroups) {
  const auto s = RankByScore(MakeDataset({{}, {}, {}, {}}), {3, 2, 2, 1});
  ASSERT_EQ(s.iso_groups().size(), 3u);
  EXPECT_EQ(s.iso_groups()[1].begin, 1u);
  EXPECT_EQ(s.iso_groups()[1].end, 3u);
  EXPECT_THAT(s.last_positions(), ElementsAre(1, 3, 4));
}

TEST(RankByScoreTest, AllEqualIsIdentity) {
  const auto s = RankByScore(MakeDataset({{}, {}, {}, {}, {}}), {4, 4, 4, 4, 4});
  EXPECT_THAT(Order(s), ElementsAre(0, 1, 2, 3, 4));
  EXPECT_THAT(s.last_positions(), ElementsAre(5));
}

TEST(RankByScoreTest, Errors) {
  const auto d = MakeDataset({{}, {}});
  EXPECT_EQ(KindOf([&] { RankByScore(d, {1.0}); }), ErrorKind::kDimension);
  EXPECT_EQ(KindOf([&] { RankByScore(d, {1.0, NAN}); }), ErrorKind::kDomain);
}

TEST(RankByScoreTest, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Unit> units(40);
    std::vector<double> scores(units.size()), transformed(units.size());
    for (std::size_t i = 0; i < units.size(); ++i) {
      scores[i] = pick(rng) - 2.5;
      transformed[i] = std::exp(3.0 * scores[i]) + 10.0;
    }
    const auto d = MakeDataset(units);
    const auto a = RankByScore(d, scores);
    const auto b = RankByScore(d, transformed);
    EXPECT_TRUE(std::equal(a.order().begin(), a.order().end(),
                           b.order().begin()));
    EXPECT_EQ(a.last_positions(), b.last_positions());
  }
}

TEST(RankByScoreTest, ResortingSortedIsIdentity) {
  const auto s = InOrder({{}, {}, {}, {}});
  EXPECT_THAT(Order(s), ElementsAre(0, 1, 2, 3));
}

TEST(TopKCountsTest, HandCount) {
  const auto s = InOrder({{1, 1}, {0, 1}, {1, 0}});
  EXPECT_EQ(TopKCountsAt(s, 2), (TopKCounts{1, 1, 1, 1}));
  EXPECT_EQ(TopKCountsAt(s, 3), (TopKCounts{2, 1, 1, 1}));
  EXPECT_EQ(KindOf([&] { TopKCountsAt(s, 0); }), ErrorKind::kBounds);
  EXPECT_EQ(KindOf([&] { TopKCountsAt(s, 4); }), ErrorKind::kBounds);
}

TEST(TopKCountsTest, AllControl) {
  const auto s = InOrder({{0, 1}, {0, 0}, {0, 1}});
  for (std::size_t k = 1; k <= 3; ++k) {
    const auto c = TopKCountsAt(s, k);
    EXPECT_EQ(c.n_treated, 0u);
    EXPECT_EQ(c.responders_treated, 0u);
  }
}

TEST(TopKCountsTest, PrefixCountsMatchDirectAndAreMonotone) {
  std::mt19937_64 rng(3);
  std::bernoulli_distribution coin(0.5);
  std::vector<Unit> units(60);
  for (auto& u : units) u = {coin(rng) ? 1 : 0, coin(rng) ? 1.0 : 0.0, 0.5};
  const auto s = InOrder(units);
  const auto prefix = PrefixCounts(s);
  for (std::size_t k = 1; k <= units.size(); ++k) {
    const auto& c = prefix[k - 1];
    EXPECT_EQ(c, TopKCountsAt(s, k));
    EXPECT_EQ(c.n_treated + c.n_control, k);
    EXPECT_LE(c.responders_treated, c.n_treated);
    EXPECT_LE(c.responders_control, c.n_control);
    if (k > 1) {
      const auto& p = prefix[k - 2];
      EXPECT_GE(c.n_treated, p.n_treated);
      EXPECT_GE(c.n_control, p.n_control);
      EXPECT_GE(c.responders_treated, p.responders_treated);
      EXPECT_GE(c.responders_control, p.responders_control);
    }
  }
}

TEST(FullFeedbackRecordTest, TrueIte) {
  EXPECT_EQ((FullFeedbackRecord{1, std::string("SD"), 0, 1}).true_ite(), -1.0);
  EXPECT_EQ((FullFeedbackRecord{1, std::string("CO"), 1, 0}).true_ite(), 1.0);
}

}  // namespace
}  // namespace uplift
