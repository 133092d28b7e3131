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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uplift/errors.h"
#include "uplift/text.h"

namespace uplift {
namespace {

[[noreturn]] void Invalid(const std::string& what) {
  Fail(ErrorKind::kValidation, "invalid population spec: " + what);
}

GroupSpec Archetype(const char* label, double q, int y1, int y0,
                    double score) {
  return GroupSpec{label, 0.25, q, static_cast<double>(y1),
                   static_cast<double>(y0), score};
}

}  // namespace

void ValidatePopulation(const PopulationSpec& spec) {
  if (spec.groups.empty()) Invalid("no groups");
  if (spec.n < 1) Invalid("n must be at least 1");
  double total = 0.0;
  for (const auto& g : spec.groups) {
    if (!(g.share > 0.0 && g.share <= 1.0)) {
      Invalid("group '" + g.label + "' share must lie in (0,1]");
    }
    if (!(g.treatment_prob > 0.0 && g.treatment_prob < 1.0)) {
      Invalid("group '" + g.label + "' treatment_prob must lie in (0,1)");
    }
    if (!(g.beta_treated >= 0.0 && g.beta_treated <= 1.0) ||
        !(g.beta_control >= 0.0 && g.beta_control <= 1.0)) {
      Invalid("group '" + g.label + "' betas must lie in [0,1]");
    }
    if (!std::isfinite(g.model_score)) {
      Invalid("group '" + g.label + "' model_score must be finite");
    }
    total += g.share;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    Invalid("shares sum to " + FormatDouble(total) + ", expected 1");
  }
}

std::vector<std::size_t> AllocateGroups(const PopulationSpec& spec) {
  const auto n = spec.n;
  std::vector<std::size_t> counts(spec.groups.size());
  std::vector<double> remainders(spec.groups.size());
  std::size_t assigned = 0;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const double exact = spec.groups[g].share * static_cast<double>(n);
    counts[g] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    remainders[g] = exact - static_cast<double>(counts[g]);
    assigned += counts[g];
  }
  std::vector<std::size_t> by_remainder(spec.groups.size());
  std::iota(by_remainder.begin(), by_remainder.end(), std::size_t{0});
  std::stable_sort(by_remainder.begin(), by_remainder.end(),
                   [&](std::size_t a, std::size_t b) {
                     return remainders[a] > remainders[b];
                   });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) {
    ++counts[by_remainder[i % by_remainder.size()]];
  }
  while (assigned > n) {
    // Shares summing to slightly above 1 can overshoot by one unit.
    auto it = std::max_element(counts.begin(), counts.end());
    --*it;
    --assigned;
  }
  return counts;
}

GeneratedData Generate(const PopulationSpec& spec) {
  ValidatePopulation(spec);
  const auto counts = AllocateGroups(spec);
  Rng rng(spec.seed);

  std::vector<LoggedBanditRecord> logged;
  GeneratedData data;
  logged.reserve(spec.n);
  data.full.reserve(spec.n);
  data.model_scores.reserve(spec.n);
  data.true_scores.reserve(spec.n);
  data.group_of.reserve(spec.n);

  std::int64_t unit_id = 1;
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    const auto& group = spec.groups[g];
    for (std::size_t i = 0; i < counts[g]; ++i, ++unit_id) {
      const int t = rng.Bernoulli(group.treatment_prob) ? 1 : 0;
      const int y1 = rng.Bernoulli(group.beta_treated) ? 1 : 0;
      const int y0 = rng.Bernoulli(group.beta_control) ? 1 : 0;
      LoggedBanditRecord record;
      record.unit_id = unit_id;
      record.features = group.label;
      record.treatment = t;
      record.outcome = t == 1 ? y1 : y0;
      record.propensity =
          t == 1 ? group.treatment_prob : 1.0 - group.treatment_prob;
      logged.push_back(std::move(record));
      data.full.push_back(FullFeedbackRecord{unit_id, group.label, y1, y0});
      data.model_scores.push_back(group.model_score);
      data.true_scores.push_back(group.true_uplift());
      data.group_of.push_back(g);
    }
  }
  data.logged = LoggedBanditDataset(std::move(logged));
  return data;
}

PopulationSpec Toy1Spec(std::size_t n, std::uint64_t seed) {
  PopulationSpec spec;
  spec.groups = {
      Archetype("CO", 1.0 / 4.0, 1, 0, 0.0),
      Archetype("ST", 5.0 / 6.0, 1, 1, 1.0),
      Archetype("LC", 5.0 / 12.0, 0, 0, 1.0),
      Archetype("SD", 1.0 / 2.0, 0, 1, -1.0),
  };
  spec.n = n;
  spec.seed = seed;
  return spec;
}

PopulationSpec Toy2Spec(Toy2Model model, double q0, std::size_t n,
                        std::uint64_t seed) {
  double scores[4] = {1.0, 0.5, -0.5, -1.0};
  if (model == Toy2Model::kMerged) {
    scores[2] = 0.5;
  } else if (model == Toy2Model::kTrueUplift) {
    scores[1] = 0.0;
    scores[2] = 0.0;
  }
  PopulationSpec spec;
  spec.groups = {
      Archetype("CO", q0, 1, 0, scores[0]),
      Archetype("ST", q0, 1, 1, scores[1]),
      Archetype("LC", q0, 0, 0, scores[2]),
      Archetype("SD", q0, 0, 1, scores[3]),
  };
  spec.n = n;
  spec.seed = seed;
  return spec;
}

PopulationSpec Toy3Spec(double q0, std::size_t n, std::uint64_t seed) {
  PopulationSpec spec;
  spec.groups = {
      GroupSpec{"X1", 0.5, q0, 0.4, 0.2, 0.1},
      GroupSpec{"X2", 0.5, q0, 0.2, 0.1, 0.2},
  };
  spec.n = n;
  spec.seed = seed;
  return spec;
}

HeterogeneousPopulation HeterogeneousSpec(std::size_t n_segments, double alpha,
                                          double p_y1_target,
                                          std::uint64_t seed, std::size_t n) {
  if (n_segments < 2) Invalid("heterogeneous population needs >= 2 segments");
  if (!(alpha > 0.0 && alpha < 1.0)) Invalid("alpha must lie in (0,1)");
  if (!(p_y1_target > 0.0 && p_y1_target < 1.0)) {
    Invalid("p_y1_target must lie in (0,1)");
  }
  constexpr int kMaxAttempts = 100;
  constexpr std::uint64_t kSeedStride = 0x9E3779B97F4A7C15ULL;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    Rng rng(seed + kSeedStride * static_cast<std::uint64_t>(attempt));
    // Per segment: uplift u and a deviation of P(y=1 | segment) from the
    // population mean. Deviations are centred so the mean hits the target.
    std::vector<double> uplift(n_segments), deviation(n_segments);
    for (std::size_t s = 0; s < n_segments; ++s) {
      uplift[s] = -0.05 + 0.2 * rng.Uniform();
      deviation[s] = -0.08 + 0.16 * rng.Uniform();
    }
    const double mean_dev =
        std::accumulate(deviation.begin(), deviation.end(), 0.0) /
        static_cast<double>(n_segments);

    HeterogeneousPopulation out;
    bool feasible = true;
    for (std::size_t s = 0; s < n_segments && feasible; ++s) {
      const double rate = p_y1_target + deviation[s] - mean_dev;
      GroupSpec g;
      g.label = "S" + std::to_string(s + 1);
      g.share = 1.0 / static_cast<double>(n_segments);
      g.treatment_prob = alpha;
      g.beta_control = rate - alpha * uplift[s];
      g.beta_treated = rate + (1.0 - alpha) * uplift[s];
      feasible = g.beta_control >= 0.0 && g.beta_control <= 1.0 &&
                 g.beta_treated >= 0.0 && g.beta_treated <= 1.0;
      g.model_score = g.true_uplift();
      out.spec.groups.push_back(std::move(g));
    }
    if (!feasible) continue;

    std::vector<double> good;
    for (const auto& g : out.spec.groups) good.push_back(g.model_score);
    auto sorted = good;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      continue;
    }
    // Fisher-Yates on the driving stream.
    out.bad_scores = good;
    for (std::size_t i = out.bad_scores.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(rng.Next() % (i + 1));
      std::swap(out.bad_scores[i], out.bad_scores[j]);
    }
    // Shares of 1/n_segments need not sum to exactly 1 in floating point.
    double total = 0.0;
    for (const auto& g : out.spec.groups) total += g.share;
    out.spec.groups.back().share += 1.0 - total;
    out.spec.n = n;
    out.spec.seed = seed;
    return out;
  }
  Fail(ErrorKind::kValidation,
       "could not build a feasible heterogeneous population after 100 "
       "attempts");
}

PopulationRates ComputeRates(const PopulationSpec& spec) {
  double treated = 0.0, treated_resp = 0.0;
  double control = 0.0, control_resp = 0.0;
  for (const auto& g : spec.groups) {
    treated += g.share * g.treatment_prob;
    treated_resp += g.share * g.treatment_prob * g.beta_treated;
    control += g.share * (1.0 - g.treatment_prob);
    control_resp += g.share * (1.0 - g.treatment_prob) * g.beta_control;
  }
  return PopulationRates{treated_resp / treated, control_resp / control,
                         treated_resp + control_resp};
}

double RequireRct(const PopulationSpec& spec) {
  if (spec.groups.empty()) Invalid("no groups");
  const double alpha = spec.groups.front().treatment_prob;
  for (const auto& g : spec.groups) {
    if (g.treatment_prob != alpha) {
      Fail(ErrorKind::kValidation,
           "population is not an RCT: treatment probabilities differ across "
           "groups");
    }
  }
  return alpha;
}

void to_json(nlohmann::json& j, const GroupSpec& g) {
  j = nlohmann::json{{"label", g.label},
                     {"share", g.share},
                     {"treatment_prob", g.treatment_prob},
                     {"beta_treated", g.beta_treated},
                     {"beta_control", g.beta_control},
                     {"model_score", g.model_score}};
}

void from_json(const nlohmann::json& j, GroupSpec& g) {
  j.at("label").get_to(g.label);
  j.at("share").get_to(g.share);
  j.at("treatment_prob").get_to(g.treatment_prob);
  j.at("beta_treated").get_to(g.beta_treated);
  j.at("beta_control").get_to(g.beta_control);
  j.at("model_score").get_to(g.model_score);
}

void to_json(nlohmann::json& j, const PopulationSpec& p) {
  j = nlohmann::json{{"groups", p.groups}, {"n", p.n}, {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, PopulationSpec& p) {
  j.at("groups").get_to(p.groups);
  p.n = j.value("n", std::size_t{0});
  p.seed = j.value("seed", std::uint64_t{0});
}

void WriteGroundTruth(std::ostream& out, const GeneratedData& data) {
  out << "unit_id,y1,y0,tau,score_u_true,score_model\n";
  for (std::size_t i = 0; i < data.full.size(); ++i) {
    const auto& r = data.full[i];
    out << r.unit_id << ',' << r.outcome_treated << ',' << r.outcome_control
        << ',' << FormatDouble(r.true_ite()) << ','
        << FormatDouble(data.true_scores[i]) << ','
        << FormatDouble(data.model_scores[i]) << '\n';
  }
}

}  // namespace uplift
