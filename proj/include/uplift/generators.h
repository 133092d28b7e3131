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

#ifndef UPLIFT_GENERATORS_H_
#define UPLIFT_GENERATORS_H_

#include <cstdint>
#include <random>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "uplift/data_model.h"

namespace uplift {

// A homogeneous population segment with Bernoulli potential outcomes.
struct GroupSpec {
  std::string label;
  double share = 1.0;
  double treatment_prob = 0.5;
  double beta_treated = 0.0;  // P(y(1) = 1)
  double beta_control = 0.0;  // P(y(0) = 1)
  double model_score = 0.0;   // the evaluated model's constant prediction

  double true_uplift() const { return beta_treated - beta_control; }
};

struct PopulationSpec {
  std::vector<GroupSpec> groups;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

// Throws UpliftError(kValidation) when the spec breaks an invariant.
void ValidatePopulation(const PopulationSpec& spec);

// Exact proportional allocation of n units to the groups: floor(share * n)
// plus largest-remainder fixup (ties go to the earlier group).
std::vector<std::size_t> AllocateGroups(const PopulationSpec& spec);

struct GeneratedData {
  LoggedBanditDataset logged;
  FullFeedbackDataset full;
  std::vector<double> model_scores;  // per record, the group's model_score
  std::vector<double> true_scores;   // per record, the group's true uplift
  std::vector<std::size_t> group_of;  // per record, index into spec.groups
};

// Units are laid out group by group in spec order, ids 1..n. Per unit the
// generator draws, in this order, t ~ Ber(q), y(1) ~ Ber(beta1) and
// y(0) ~ Ber(beta0) from one stream seeded with spec.seed.
GeneratedData Generate(const PopulationSpec& spec);

// Deterministic generator used by every sampler in the library. The engine
// is fully specified by the standard and the real conversion is done here, so
// streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t Next() { return engine_(); }
  // Uniform on [0, 1) with 53 bits of resolution.
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

// Seed of Monte Carlo realization r.
inline std::uint64_t RealizationSeed(std::uint64_t seed, std::uint64_t r) {
  return seed ^ r;
}

// Four noiseless archetype groups CO, ST, LC, SD with treatment
// probabilities (1/4, 5/6, 5/12, 1/2) and model scores (0, 1, 1, -1).
PopulationSpec Toy1Spec(std::size_t n = 40000, std::uint64_t seed = 1);

enum class Toy2Model {
  kDistinguishing,  // scores (1, 1/2, -1/2, -1)
  kMerged,          // scores (1, 1/2, 1/2, -1)
  kTrueUplift,      // scores (1, 0, 0, -1)
};

// Same archetypes with a uniform treatment probability q0 (3/4 by default).
PopulationSpec Toy2Spec(Toy2Model model = Toy2Model::kDistinguishing,
                        double q0 = 0.75, std::size_t n = 40000,
                        std::uint64_t seed = 1);

// Two equal Bernoulli groups, q0 = 0.1, betas (0.4, 0.2) and (0.2, 0.1),
// model scores (0.1, 0.2).
PopulationSpec Toy3Spec(double q0 = 0.1, std::size_t n = 40000,
                        std::uint64_t seed = 1);

struct HeterogeneousPopulation {
  // Model scores are the per-segment true uplifts (the "good" model).
  PopulationSpec spec;
  // Per-segment scores of the "bad" model: a seeded permutation of the good
  // scores.
  std::vector<double> bad_scores;
};

// Equal-share RCT segments with treatment probability alpha whose betas are
// shifted so that the population P(y = 1) equals p_y1_target.
HeterogeneousPopulation HeterogeneousSpec(std::size_t n_segments, double alpha,
                                          double p_y1_target,
                                          std::uint64_t seed,
                                          std::size_t n = 10000);

// Population-level P(y=1 | t=1), P(y=1 | t=0) and P(y = 1).
struct PopulationRates {
  double p1 = 0.0;
  double p0 = 0.0;
  double p_y1 = 0.0;
};
PopulationRates ComputeRates(const PopulationSpec& spec);

// Returns the common treatment probability, or throws when groups differ.
double RequireRct(const PopulationSpec& spec);

// JSON mirror of the spec types.
void to_json(nlohmann::json& j, const GroupSpec& g);
void from_json(const nlohmann::json& j, GroupSpec& g);
void to_json(nlohmann::json& j, const PopulationSpec& p);
void from_json(const nlohmann::json& j, PopulationSpec& p);

// Sidecar CSV: unit_id,y1,y0,tau,score_u_true,score_model
void WriteGroundTruth(std::ostream& out, const GeneratedData& data);

}  // namespace uplift

#endif  // UPLIFT_GENERATORS_H_
