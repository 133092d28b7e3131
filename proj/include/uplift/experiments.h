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

#ifndef UPLIFT_EXPERIMENTS_H_
#define UPLIFT_EXPERIMENTS_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "uplift/curves.h"
#include "uplift/generators.h"
#include "uplift/metrics.h"

namespace uplift {

// Runs fn(r) for r in [0, count) on a small thread pool. Results must be
// written to per-r slots so the outcome does not depend on scheduling.
void ParallelFor(std::size_t count, const std::function<void(std::size_t)>& fn);

// Summary of a sample: mean, unbiased variance and standard error of the mean.
struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;
  double stderr_mean = 0.0;
  std::size_t count = 0;
};
SampleStats Summarize(const std::vector<double>& sample);

// Least-squares slope of y on x.
double RegressionSlope(const std::vector<double>& x,
                       const std::vector<double>& y);

enum class CurveEstimator { kV1, kRebalanced };
const char* CurveEstimatorName(CurveEstimator estimator);

// One model's piecewise-linear expected curve: groups sorted by decreasing
// score, equal scores merged into a single segment.
struct ExpectedSegment {
  std::vector<std::string> labels;
  double share = 0.0;
  double slope = 0.0;  // dV/dx on the estimator's own scale
};

struct ModelResult {
  std::string name;
  std::vector<double> scores;  // per group
  std::vector<ExpectedSegment> segments;
  double analytic_auuc = 0.0;
  SampleStats mc_auuc;
  double mc_z = 0.0;  // (mc mean - analytic) / stderr
};

enum class ToyId { kToy1, kToy2, kToy3 };
ToyId ParseToyId(const std::string& name);
const char* ToyName(ToyId id);

struct CounterexampleOptions {
  ToyId id = ToyId::kToy1;
  std::size_t n = 40000;
  std::size_t realizations = 200;
  std::uint64_t seed = 1;
  // Uniform treatment probability for toy2/toy3 (toy1 has fixed ones).
  std::optional<double> q0;
  CurveEstimator estimator = CurveEstimator::kV1;
  bool interpolate_ties = true;
};

struct CounterexampleReport {
  CounterexampleOptions options;
  PopulationSpec population;
  std::vector<double> group_slopes;  // V1 expected slope per group
  ModelResult truth;                 // scores = true uplift
  ModelResult challenger;            // the misranked competing model
  // Paired per-realization difference AUUC(challenger) - AUUC(truth).
  SampleStats mc_difference;
  double separation = 0.0;  // mc_difference.mean / stderr
  // Analytic AUUC(challenger) > AUUC(truth) beyond rounding.
  bool verdict = false;
};

// Expected curve and its exact area for the given per-group scores.
std::vector<ExpectedSegment> ExpectedSegments(const PopulationSpec& spec,
                                              const std::vector<double>& scores,
                                              CurveEstimator estimator);
double ExpectedAuuc(const std::vector<ExpectedSegment>& segments);

CounterexampleReport RunCounterexample(const CounterexampleOptions& options);

// AUUC of one realization for a per-group score vector; group_of maps each
// record to its group.
double RealizationAuuc(std::shared_ptr<const LoggedBanditDataset> dataset,
                       const std::vector<std::size_t>& group_of,
                       const std::vector<double>& group_scores,
                       CurveEstimator estimator, bool interpolate_ties);

struct UnbiasednessCell {
  double r = 0.0;
  double nu = 0.0;
  std::size_t k = 0;
  double target = 0.0;
  SampleStats estimate;
  double z = 0.0;
};

struct UnbiasednessReport {
  double alpha = 0.0;
  std::size_t realizations = 0;
  std::vector<UnbiasednessCell> cells;
  double max_abs_z() const;
};

// MC mean of the propensity-rescaled V_nu at k = ceil(r N) against the
// population uplift mass of the top k ranked units divided by N. Units are
// ranked by the population's model scores. Throws kValidation for non-RCT specs.
UnbiasednessReport UnbiasednessCheck(const PopulationSpec& population,
                                     const std::vector<double>& r_grid,
                                     const std::vector<double>& nus,
                                     std::size_t realizations,
                                     std::uint64_t seed);

enum class VarianceMetric { kAuucTrapezoid, kAuucRiemann };

struct VarianceStudyConfig {
  PopulationSpec population;
  std::vector<double> nus;
  std::size_t realizations = 101;
  std::uint64_t seed = 1;
  VarianceMetric metric = VarianceMetric::kAuucTrapezoid;
};
void ValidateConfig(const VarianceStudyConfig& config);

struct NuStats {
  double nu = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  // Estimated variance of the sample variance.
  double variance_of_variance = 0.0;
};

struct ExperimentReport {
  double p_y1 = 0.0;
  double alpha = 0.0;
  std::vector<NuStats> per_nu;
  double argmin_nu_empirical = 0.0;
  double argmin_nu_theoretical = 0.0;
};

// AUUC of the rescaled V_nu curve over seeded realizations, per nu.
ExperimentReport VarianceStudy(const VarianceStudyConfig& config);

struct NuSurfaceReport {
  std::vector<double> p_y1_grid;
  std::vector<ExperimentReport> rows;  // one per p_y1
  double argmin_slope = 0.0;           // regression of empirical argmin on p_y1
};

struct HeterogeneousOptions {
  std::size_t segments = 10;
  double alpha = 0.5;
  std::size_t n = 10000;
};

// Re-runs the study for each P(y = 1) on a heterogeneous population; every
// row shares base.seed so rows use common random numbers.
NuSurfaceReport NuSurfaceSweep(const std::vector<double>& p_y1_grid,
                               const HeterogeneousOptions& population,
                               const VarianceStudyConfig& base);

// Direct simulation of Q1, Q2 over n_units independent units.
struct QMomentSample {
  double mean_q1 = 0.0;
  double mean_q2 = 0.0;
  double cov_q1q2 = 0.0;
  double cov_stderr = 0.0;
  std::vector<double> nus;
  std::vector<double> var_qnu;
  std::vector<double> var_qnu_stderr;
};
QMomentSample SampleQMoments(double p0, double p1, double alpha,
                             std::size_t n_units, const std::vector<double>& nus,
                             std::uint64_t seed);

void to_json(nlohmann::json& j, const SampleStats& s);
void to_json(nlohmann::json& j, const CounterexampleReport& report);
void to_json(nlohmann::json& j, const UnbiasednessReport& report);
void to_json(nlohmann::json& j, const ExperimentReport& report);
void to_json(nlohmann::json& j, const NuSurfaceReport& report);

// Parses {"population": <PopulationSpec> | "heterogeneous": {...}, "nus",
// "realizations", "seed", "metric"}.
VarianceStudyConfig ParseVarianceStudyConfig(const nlohmann::json& j);

// Tidy `nu,p_y1,mean,var` rows.
void WriteVarianceCsv(std::ostream& out,
                      const std::vector<ExperimentReport>& rows);

}  // namespace uplift

#endif  // UPLIFT_EXPERIMENTS_H_
