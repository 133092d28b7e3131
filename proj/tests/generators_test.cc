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

#include "uplift/generators.h"

#include <cmath>
#include <sstream>

#include "gtest/gtest.h"
#include "test_helpers.h"

namespace uplift {
namespace {

using test_util::KindOf;

struct GroupTally {
  double units = 0, treated = 0, treated_resp = 0, control_resp = 0;
};

std::vector<GroupTally> Tally(const GeneratedData& data, std::size_t groups) {
  std::vector<GroupTally> tally(groups);
  for (std::size_t i = 0; i < data.logged.size(); ++i) {
    auto& t = tally[data.group_of[i]];
    const auto& r = data.logged[i];
    t.units += 1;
    if (r.treatment == 1) {
      t.treated += 1;
      t.treated_resp += r.outcome;
    } else {
      t.control_resp += r.outcome;
    }
  }
  return tally;
}

TEST(GenerateTest, NoiselessArchetypes) {
  const auto data = Generate(Toy1Spec(4000, 5));
  for (std::size_t i = 0; i < data.logged.size(); ++i) {
    const auto& r = data.logged[i];
    const auto& f = data.full[i];
    const std::string label = std::get<std::string>(r.features);
    if (label == "CO") EXPECT_EQ(r.outcome, r.treatment == 1 ? 1.0 : 0.0);
    if (label == "LC") EXPECT_EQ(r.outcome, 0.0);
    if (label == "SD") {
      EXPECT_EQ(f.outcome_treated, 0);
      EXPECT_EQ(f.outcome_control, 1);
    }
    EXPECT_EQ(r.outcome, r.treatment * f.outcome_treated +
                             (1 - r.treatment) * f.outcome_control);
  }
}

TEST(GenerateTest, Toy1OverallTreatedFraction) {
  const std::size_t n = 100000;
  const auto data = Generate(Toy1Spec(n, 11));
  const double frac = static_cast<double>(data.logged.num_treated()) / n;
  // Per-group sampling makes this a sum of binomials; the plain binomial
  // sigma is an upper bound on its spread.
  EXPECT_NEAR(frac, 0.5, 3.0 * std::sqrt(0.25 / n));
}

TEST(GenerateTest, EmpiricalRatesMatchSpec) {
  const std::size_t n = 200000;
  const PopulationSpec spec = Toy3Spec(0.3, n, 19);
  const auto data = Generate(spec);
  const auto tally = Tally(data, spec.groups.size());
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& gs = spec.groups[g];
    const auto& t = tally[g];
    const double q = gs.treatment_prob;
    EXPECT_NEAR(t.treated / t.units, q, 4 * std::sqrt(q * (1 - q) / t.units));
    const double b1 = gs.beta_treated, b0 = gs.beta_control;
    const double control = t.units - t.treated;
    EXPECT_NEAR(t.treated_resp / t.treated, b1,
                4 * std::sqrt(b1 * (1 - b1) / t.treated));
    EXPECT_NEAR(t.control_resp / control, b0,
                4 * std::sqrt(b0 * (1 - b0) / control));
  }
}

TEST(GenerateTest, PropensityIsProbabilityOfLoggedTreatment) {
  const auto data = Generate(Toy2Spec(Toy2Model::kDistinguishing, 0.75, 2000, 3));
  for (const auto& r : data.logged.records()) {
    EXPECT_EQ(r.propensity, r.treatment == 1 ? 0.75 : 0.25);
  }
}

TEST(GenerateTest, Deterministic) {
  const auto a = Generate(Toy1Spec(5000, 42));
  const auto b = Generate(Toy1Spec(5000, 42));
  std::ostringstream sa, sb;
  WriteDataset(sa, a.logged, std::span<const double>(a.model_scores));
  WriteDataset(sb, b.logged, std::span<const double>(b.model_scores));
  EXPECT_EQ(sa.str(), sb.str());
  const auto c = Generate(Toy1Spec(5000, 43));
  std::ostringstream sc;
  WriteDataset(sc, c.logged, std::span<const double>(c.model_scores));
  EXPECT_NE(sa.str(), sc.str());
}

TEST(AllocateGroupsTest, LargestRemainder) {
  PopulationSpec spec;
  spec.groups = {GroupSpec{"a", 0.5}, GroupSpec{"b", 0.3}, GroupSpec{"c", 0.2}};
  spec.n = 7;
  // 3.5, 2.1, 1.4 -> floors 3, 2, 1; remainders favour a.
  EXPECT_EQ(AllocateGroups(spec), (std::vector<std::size_t>{4, 2, 1}));
}

TEST(ValidatePopulationTest, RejectsBadSpecs) {
  PopulationSpec spec = Toy1Spec(100, 1);
  spec.groups[0].share = 0.15;  // shares sum to 0.9
  EXPECT_EQ(KindOf([&] { ValidatePopulation(spec); }), ErrorKind::kValidation);
  spec = Toy1Spec(100, 1);
  spec.groups[1].treatment_prob = 1.0;
  EXPECT_EQ(KindOf([&] { ValidatePopulation(spec); }), ErrorKind::kValidation);
  spec = Toy1Spec(100, 1);
  spec.n = 0;
  EXPECT_EQ(KindOf([&] { ValidatePopulation(spec); }), ErrorKind::kValidation);
}

TEST(ToySpecsTest, FixedParameters) {
  const auto t1 = Toy1Spec();
  EXPECT_EQ(t1.groups[0].treatment_prob, 1.0 / 4.0);
  EXPECT_EQ(t1.groups[1].treatment_prob, 5.0 / 6.0);
  EXPECT_EQ(t1.groups[2].treatment_prob, 5.0 / 12.0);
  EXPECT_EQ(t1.groups[3].treatment_prob, 1.0 / 2.0);
  EXPECT_EQ(t1.groups[3].beta_treated, 0.0);
  EXPECT_EQ(t1.groups[3].beta_control, 1.0);

  const auto t3 = Toy3Spec();
  EXPECT_NEAR(t3.groups[0].true_uplift(), 0.2, 1e-15);
  EXPECT_NEAR(t3.groups[1].true_uplift(), 0.1, 1e-15);
  EXPECT_EQ(t3.groups[0].model_score, 0.1);
  EXPECT_EQ(t3.groups[1].model_score, 0.2);

  const auto merged = Toy2Spec(Toy2Model::kMerged);
  EXPECT_EQ(merged.groups[1].model_score, merged.groups[2].model_score);
}

TEST(HeterogeneousSpecTest, HitsTargetAndGoodScores) {
  for (const double alpha : {0.3, 0.5, 0.7}) {
    for (const double p : {0.2, 0.5, 0.8}) {
      const auto het = HeterogeneousSpec(12, alpha, p, 9);
      ValidatePopulation(het.spec);
      EXPECT_EQ(RequireRct(het.spec), alpha);
      EXPECT_NEAR(ComputeRates(het.spec).p_y1, p, 1e-9);
      for (const auto& g : het.spec.groups) {
        EXPECT_EQ(g.model_score, g.beta_treated - g.beta_control);
      }
      auto good = het.bad_scores;
      std::vector<double> model;
      for (const auto& g : het.spec.groups) model.push_back(g.model_score);
      std::sort(good.begin(), good.end());
      std::sort(model.begin(), model.end());
      EXPECT_EQ(good, model);  // bad scores are a permutation
    }
  }
}

TEST(HeterogeneousSpecTest, Deterministic) {
  const auto a = HeterogeneousSpec(8, 0.5, 0.4, 77);
  const auto b = HeterogeneousSpec(8, 0.5, 0.4, 77);
  EXPECT_EQ(nlohmann::json(a.spec).dump(), nlohmann::json(b.spec).dump());
  EXPECT_EQ(a.bad_scores, b.bad_scores);
}

TEST(PopulationSpecJsonTest, RoundTrip) {
  const auto spec = Toy1Spec(123, 9);
  const nlohmann::json j = spec;
  const auto back = j.get<PopulationSpec>();
  EXPECT_EQ(back.n, 123u);
  EXPECT_EQ(back.seed, 9u);
  ASSERT_EQ(back.groups.size(), 4u);
  EXPECT_EQ(back.groups[2].treatment_prob, 5.0 / 12.0);
}

TEST(GroundTruthTest, SidecarRows) {
  const auto data = Generate(Toy1Spec(8, 1));
  std::ostringstream out;
  WriteGroundTruth(out, data);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "unit_id,y1,y0,tau,score_u_true,score_model");
  std::getline(in, line);
  EXPECT_EQ(line, "1,1,0,1,1,0");  // a CO unit
}

}  // namespace
}  // namespace uplift
