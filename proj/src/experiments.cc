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

#include "uplift/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "uplift/errors.h"
#include "uplift/text.h"

namespace uplift {
namespace {

std::vector<double> RecordScores(const std::vector<std::size_t>& group_of,
                                 const std::vector<double>& group_scores) {
  std::vector<double> scores(group_of.size());
  for (std::size_t i = 0; i < group_of.size(); ++i) {
    scores[i] = group_scores[group_of[i]];
  }
  return scores;
}

std::vector<double> ModelScores(const PopulationSpec& spec) {
  std::vector<double> scores;
  for (const auto& g : spec.groups) scores.push_back(g.model_score);
  return scores;
}

std::vector<double> TrueScores(const PopulationSpec& spec) {
  std::vector<double> scores;
  for (const auto& g : spec.groups) scores.push_back(g.true_uplift());
  return scores;
}

double ZScore(double estimate, double target, double stderr_mean) {
  if (stderr_mean > 0.0) return (estimate - target) / stderr_mean;
  return estimate == target ? 0.0 : std::copysign(INFINITY, estimate - target);
}

ModelResult AnalyticModel(const std::string& name, const PopulationSpec& spec,
                          std::vector<double> scores,
                          CurveEstimator estimator) {
  ModelResult model;
  model.name = name;
  model.segments = ExpectedSegments(spec, scores, estimator);
  model.analytic_auuc = ExpectedAuuc(model.segments);
  model.scores = std::move(scores);
  return model;
}

}  // namespace

void ParallelFor(std::size_t count,
                 const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(
      count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

SampleStats Summarize(const std::vector<double>& sample) {
  SampleStats s;
  s.count = sample.size();
  if (sample.empty()) return s;
  s.mean = std::accumulate(sample.begin(), sample.end(), 0.0) /
           static_cast<double>(sample.size());
  if (sample.size() < 2) return s;
  double ss = 0.0;
  for (const double v : sample) ss += (v - s.mean) * (v - s.mean);
  s.variance = ss / static_cast<double>(sample.size() - 1);
  s.stderr_mean = std::sqrt(s.variance / static_cast<double>(sample.size()));
  return s;
}

double RegressionSlope(const std::vector<double>& x,
                       const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    Fail(ErrorKind::kDimension, "regression needs >= 2 paired points");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) Fail(ErrorKind::kDomain, "regression on constant x");
  return sxy / sxx;
}

const char* CurveEstimatorName(CurveEstimator estimator) {
  return estimator == CurveEstimator::kV1 ? "v1" : "rebalanced";
}

ToyId ParseToyId(const std::string& name) {
  if (name == "toy1") return ToyId::kToy1;
  if (name == "toy2") return ToyId::kToy2;
  if (name == "toy3") return ToyId::kToy3;
  Fail(ErrorKind::kDomain, "unknown counterexample '" + name + "'");
}

const char* ToyName(ToyId id) {
  switch (id) {
    case ToyId::kToy1: return "toy1";
    case ToyId::kToy2: return "toy2";
    case ToyId::kToy3: return "toy3";
  }
  return "?";
}

std::vector<ExpectedSegment> ExpectedSegments(const PopulationSpec& spec,
                                              const std::vector<double>& scores,
                                              CurveEstimator estimator) {
  if (scores.size() != spec.groups.size()) {
    Fail(ErrorKind::kDimension, "one score per group expected");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  std::vector<ExpectedSegment> segments;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    ExpectedSegment seg;
    std::vector<SlopeMember> members;
    double uplift_mass = 0.0;
    for (; j < order.size() && scores[order[j]] == scores[order[i]]; ++j) {
      const auto& g = spec.groups[order[j]];
      seg.labels.push_back(g.label);
      seg.share += g.share;
      members.push_back({g.share, g.treatment_prob, g.beta_treated,
                         g.beta_control});
      uplift_mass += g.share * g.true_uplift();
    }
    if (estimator == CurveEstimator::kV1) {
      seg.slope = MergedSlope(members);
    } else {
      // Rebalanced steps average u per unit while x advances 1/N per unit.
      seg.slope = static_cast<double>(spec.n) * uplift_mass / seg.share;
    }
    segments.push_back(std::move(seg));
    i = j;
  }
  return segments;
}

double ExpectedAuuc(const std::vector<ExpectedSegment>& segments) {
  double area = 0.0;
  double v = 0.0;
  for (const auto& seg : segments) {
    area += seg.share * v + 0.5 * seg.slope * seg.share * seg.share;
    v += seg.slope * seg.share;
  }
  return area;
}

double RealizationAuuc(std::shared_ptr<const LoggedBanditDataset> dataset,
                       const std::vector<std::size_t>& group_of,
                       const std::vector<double>& group_scores,
                       CurveEstimator estimator, bool interpolate_ties) {
  const ScoredDataset scored =
      RankByScore(std::move(dataset), RecordScores(group_of, group_scores));
  Curve curve = estimator == CurveEstimator::kV1 ? CurveV1(scored)
                                                 : CurveRebalanced(scored);
  if (interpolate_ties) curve = InterpolateIsoUplift(curve, scored);
  return AreaUnderCurve(curve);
}

CounterexampleReport RunCounterexample(const CounterexampleOptions& options) {
  CounterexampleReport report;
  report.options = options;
  std::string challenger_name;
  switch (options.id) {
    case ToyId::kToy1:
      if (options.q0) {
        Fail(ErrorKind::kDomain, "toy1 has fixed treatment probabilities");
      }
      report.population = Toy1Spec(options.n, options.seed);
      challenger_name = "u_hat_n";
      break;
    case ToyId::kToy2:
      report.population = Toy2Spec(Toy2Model::kDistinguishing,
                                   options.q0.value_or(0.75), options.n,
                                   options.seed);
      challenger_name = "u_hat_d";
      break;
    case ToyId::kToy3:
      report.population =
          Toy3Spec(options.q0.value_or(0.1), options.n, options.seed);
      challenger_name = "u_hat";
      break;
  }
  const auto& spec = report.population;
  ValidatePopulation(spec);
  if (options.realizations < 2) {
    Fail(ErrorKind::kDomain, "need at least 2 realizations");
  }
  for (const auto& g : spec.groups) {
    report.group_slopes.push_back(
        ExpectedSlope(g.treatment_prob, g.beta_treated, g.beta_control));
  }
  report.truth = AnalyticModel("u", spec, TrueScores(spec), options.estimator);
  report.challenger =
      AnalyticModel(challenger_name, spec, ModelScores(spec), options.estimator);

  std::vector<double> truth_auuc(options.realizations);
  std::vector<double> challenger_auuc(options.realizations);
  ParallelFor(options.realizations, [&](std::size_t r) {
    PopulationSpec realization = spec;
    realization.seed = RealizationSeed(options.seed, r);
    GeneratedData data = Generate(realization);
    auto logged =
        std::make_shared<const LoggedBanditDataset>(std::move(data.logged));
    truth_auuc[r] =
        RealizationAuuc(logged, data.group_of, report.truth.scores,
                        options.estimator, options.interpolate_ties);
    challenger_auuc[r] =
        RealizationAuuc(logged, data.group_of, report.challenger.scores,
                        options.estimator, options.interpolate_ties);
  });
  std::vector<double> diff(options.realizations);
  for (std::size_t r = 0; r < diff.size(); ++r) {
    diff[r] = challenger_auuc[r] - truth_auuc[r];
  }
  for (auto* model : {&report.truth, &report.challenger}) {
    model->mc_auuc =
        Summarize(model == &report.truth ? truth_auuc : challenger_auuc);
    model->mc_z = ZScore(model->mc_auuc.mean, model->analytic_auuc,
                         model->mc_auuc.stderr_mean);
  }
  report.mc_difference = Summarize(diff);
  report.separation = ZScore(report.mc_difference.mean, 0.0,
                             report.mc_difference.stderr_mean);
  const double a_hat = report.challenger.analytic_auuc;
  const double a_true = report.truth.analytic_auuc;
  report.verdict = a_hat - a_true > 1e-12 * std::max(1.0, std::abs(a_true));
  return report;
}

double UnbiasednessReport::max_abs_z() const {
  double m = 0.0;
  for (const auto& c : cells) m = std::max(m, std::abs(c.z));
  return m;
}

UnbiasednessReport UnbiasednessCheck(const PopulationSpec& population,
                                     const std::vector<double>& r_grid,
                                     const std::vector<double>& nus,
                                     std::size_t realizations,
                                     std::uint64_t seed) {
  ValidatePopulation(population);
  UnbiasednessReport report;
  report.alpha = RequireRct(population);
  report.realizations = realizations;
  if (realizations < 2) Fail(ErrorKind::kDomain, "need at least 2 realizations");
  const std::size_t n = population.n;

  // The ranking only depends on the deterministic group layout, so the
  // targets are fixed across realizations.
  const auto counts = AllocateGroups(population);
  std::vector<std::size_t> layout;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    layout.insert(layout.end(), counts[g], g);
  }
  const auto scores = ModelScores(population);
  std::stable_sort(layout.begin(), layout.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  std::vector<double> uplift_prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    uplift_prefix[i + 1] =
        uplift_prefix[i] + population.groups[layout[i]].true_uplift();
  }

  for (const double r : r_grid) {
    if (!(r > 0.0 && r <= 1.0)) Fail(ErrorKind::kDomain, "r must lie in (0,1]");
    const auto k = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::ceil(r * static_cast<double>(n) - 1e-9)),
        1, n);
    for (const double nu : nus) {
      UnbiasednessCell cell;
      cell.r = r;
      cell.nu = nu;
      cell.k = k;
      cell.target = uplift_prefix[k] / static_cast<double>(n);
      report.cells.push_back(cell);
    }
  }

  // samples[cell][realization]
  std::vector<std::vector<double>> samples(
      report.cells.size(), std::vector<double>(realizations));
  ParallelFor(realizations, [&](std::size_t m) {
    PopulationSpec realization = population;
    realization.seed = RealizationSeed(seed, m);
    GeneratedData data = Generate(realization);
    const ScoredDataset scored = RankByScore(
        std::make_shared<const LoggedBanditDataset>(std::move(data.logged)),
        std::move(data.model_scores));
    // One curve per nu, sampled at every r.
    for (std::size_t ni = 0; ni < nus.size(); ++ni) {
      const Curve curve = CurveRescaledVnu(scored, nus[ni]);
      for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
        const std::size_t c = ri * nus.size() + ni;
        samples[c][m] = curve.values[report.cells[c].k - 1];
      }
    }
  });
  for (std::size_t c = 0; c < report.cells.size(); ++c) {
    auto& cell = report.cells[c];
    cell.estimate = Summarize(samples[c]);
    cell.z = ZScore(cell.estimate.mean, cell.target, cell.estimate.stderr_mean);
  }
  return report;
}

void ValidateConfig(const VarianceStudyConfig& config) {
  ValidatePopulation(config.population);
  RequireRct(config.population);
  if (config.realizations < 2) {
    Fail(ErrorKind::kValidation, "variance study needs >= 2 realizations");
  }
  if (config.nus.empty()) Fail(ErrorKind::kValidation, "nus grid is empty");
  for (const double nu : config.nus) {
    if (!(nu >= 0.0 && nu <= 1.0)) {
      Fail(ErrorKind::kValidation, "nu values must lie in [0,1]");
    }
  }
}

ExperimentReport VarianceStudy(const VarianceStudyConfig& config) {
  ValidateConfig(config);
  const auto& nus = config.nus;
  const std::size_t m_count = config.realizations;
  const Quadrature quadrature = config.metric == VarianceMetric::kAuucTrapezoid
                                    ? Quadrature::kTrapezoid
                                    : Quadrature::kRiemannRight;
  // auuc[nu][realization]
  std::vector<std::vector<double>> auuc(nus.size(),
                                        std::vector<double>(m_count));
  ParallelFor(m_count, [&](std::size_t m) {
    PopulationSpec realization = config.population;
    realization.seed = RealizationSeed(config.seed, m);
    GeneratedData data = Generate(realization);
    const ScoredDataset scored = RankByScore(
        std::make_shared<const LoggedBanditDataset>(std::move(data.logged)),
        std::move(data.model_scores));
    for (std::size_t i = 0; i < nus.size(); ++i) {
      auuc[i][m] =
          AreaUnderCurve(CurveRescaledVnu(scored, nus[i]), {}, quadrature);
    }
  });

  ExperimentReport report;
  const auto rates = ComputeRates(config.population);
  report.alpha = config.population.groups.front().treatment_prob;
  report.p_y1 = rates.p_y1;
  report.argmin_nu_theoretical = OptimalNu(rates.p0, rates.p1, report.alpha);
  const double m = static_cast<double>(m_count);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nus.size(); ++i) {
    const SampleStats s = Summarize(auuc[i]);
    double m4 = 0.0;
    for (const double v : auuc[i]) m4 += std::pow(v - s.mean, 4);
    m4 /= m;
    NuStats stats;
    stats.nu = nus[i];
    stats.mean = s.mean;
    stats.variance = s.variance;
    stats.variance_of_variance =
        std::max(0.0, (m4 - s.variance * s.variance * (m - 3.0) / (m - 1.0)) / m);
    report.per_nu.push_back(stats);
    if (stats.variance < report.per_nu[best].variance) best = i;
  }
  report.argmin_nu_empirical = nus[best];
  return report;
}

NuSurfaceReport NuSurfaceSweep(const std::vector<double>& p_y1_grid,
                               const HeterogeneousOptions& population,
                               const VarianceStudyConfig& base) {
  if (p_y1_grid.empty()) Fail(ErrorKind::kValidation, "p_y1 grid is empty");
  NuSurfaceReport report;
  report.p_y1_grid = p_y1_grid;
  std::vector<double> argmins;
  for (const double p : p_y1_grid) {
    VarianceStudyConfig config = base;
    config.population = HeterogeneousSpec(population.segments, population.alpha,
                                          p, base.seed, population.n)
                            .spec;
    report.rows.push_back(VarianceStudy(config));
    argmins.push_back(report.rows.back().argmin_nu_empirical);
  }
  if (p_y1_grid.size() >= 2) {
    report.argmin_slope = RegressionSlope(p_y1_grid, argmins);
  }
  return report;
}

QMomentSample SampleQMoments(double p0, double p1, double alpha,
                             std::size_t n_units, const std::vector<double>& nus,
                             std::uint64_t seed) {
  if (n_units < 2) Fail(ErrorKind::kDomain, "need at least 2 units");
  Rng rng(seed);
  std::vector<double> q1(n_units), q2(n_units);
  for (std::size_t i = 0; i < n_units; ++i) {
    const int t = rng.Bernoulli(alpha) ? 1 : 0;
    const int y = rng.Bernoulli(t == 1 ? p1 : p0) ? 1 : 0;
    q1[i] = QIncrement(y, t, alpha, QWhich::kQ1);
    q2[i] = QIncrement(y, t, alpha, QWhich::kQ2);
  }
  const double n = static_cast<double>(n_units);
  QMomentSample out;
  out.mean_q1 = std::accumulate(q1.begin(), q1.end(), 0.0) / n;
  out.mean_q2 = std::accumulate(q2.begin(), q2.end(), 0.0) / n;
  std::vector<double> products(n_units);
  for (std::size_t i = 0; i < n_units; ++i) {
    products[i] = (q1[i] - out.mean_q1) * (q2[i] - out.mean_q2);
  }
  const SampleStats cov = Summarize(products);
  out.cov_q1q2 = cov.mean * n / (n - 1.0);
  out.cov_stderr = cov.stderr_mean;
  out.nus = nus;
  for (const double nu : nus) {
    std::vector<double> q(n_units);
    for (std::size_t i = 0; i < n_units; ++i) {
      q[i] = (1.0 - nu) * q1[i] + nu * q2[i];
    }
    const SampleStats s = Summarize(q);
    double m4 = 0.0;
    for (const double v : q) m4 += std::pow(v - s.mean, 4);
    m4 /= n;
    out.var_qnu.push_back(s.variance);
    out.var_qnu_stderr.push_back(
        std::sqrt(std::max(0.0, m4 - s.variance * s.variance) / n));
  }
  return out;
}

void to_json(nlohmann::json& j, const SampleStats& s) {
  j = nlohmann::json{{"mean", s.mean},
                     {"variance", s.variance},
                     {"stderr", s.stderr_mean},
                     {"count", s.count}};
}

namespace {

nlohmann::json ModelJson(const ModelResult& m) {
  nlohmann::json segments = nlohmann::json::array();
  for (const auto& s : m.segments) {
    segments.push_back(
        {{"labels", s.labels}, {"share", s.share}, {"slope", s.slope}});
  }
  return {{"name", m.name},         {"scores", m.scores},
          {"segments", segments},   {"analytic_auuc", m.analytic_auuc},
          {"mc_auuc", m.mc_auuc},   {"mc_z", m.mc_z}};
}

}  // namespace

void to_json(nlohmann::json& j, const CounterexampleReport& report) {
  const auto& o = report.options;
  j = nlohmann::json{
      {"id", ToyName(o.id)},
      {"n", o.n},
      {"realizations", o.realizations},
      {"seed", o.seed},
      {"estimator", CurveEstimatorName(o.estimator)},
      {"interpolate_ties", o.interpolate_ties},
      {"population", report.population},
      {"group_slopes", report.group_slopes},
      {"truth", ModelJson(report.truth)},
      {"challenger", ModelJson(report.challenger)},
      {"mc_difference", report.mc_difference},
      {"separation", report.separation},
      {"verdict", report.verdict}};
  j["q0"] = o.q0 ? nlohmann::json(*o.q0) : nlohmann::json();
}

void to_json(nlohmann::json& j, const UnbiasednessReport& report) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"r", c.r},
                     {"nu", c.nu},
                     {"k", c.k},
                     {"target", c.target},
                     {"estimate", c.estimate},
                     {"z", c.z}});
  }
  j = nlohmann::json{{"alpha", report.alpha},
                     {"realizations", report.realizations},
                     {"cells", cells}};
}

void to_json(nlohmann::json& j, const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : report.per_nu) {
    rows.push_back({{"nu", s.nu},
                    {"mean", s.mean},
                    {"variance", s.variance},
                    {"variance_of_variance", s.variance_of_variance}});
  }
  j = nlohmann::json{{"p_y1", report.p_y1},
                     {"alpha", report.alpha},
                     {"per_nu", rows},
                     {"argmin_nu_empirical", report.argmin_nu_empirical},
                     {"argmin_nu_theoretical", report.argmin_nu_theoretical}};
}

void to_json(nlohmann::json& j, const NuSurfaceReport& report) {
  j = nlohmann::json{{"p_y1_grid", report.p_y1_grid},
                     {"rows", report.rows},
                     {"argmin_slope", report.argmin_slope}};
}

VarianceStudyConfig ParseVarianceStudyConfig(const nlohmann::json& j) {
  VarianceStudyConfig config;
  try {
    if (j.contains("population")) {
      j.at("population").get_to(config.population);
    } else if (j.contains("heterogeneous")) {
      const auto& h = j.at("heterogeneous");
      config.population =
          HeterogeneousSpec(h.value("segments", std::size_t{10}),
                            h.value("alpha", 0.5), h.value("p_y1", 0.5),
                            j.value("seed", std::uint64_t{1}),
                            h.value("n", std::size_t{10000}))
              .spec;
    } else {
      Fail(ErrorKind::kValidation,
           "config needs a 'population' or 'heterogeneous' entry");
    }
    j.at("nus").get_to(config.nus);
    config.realizations = j.value("realizations", std::size_t{101});
    config.seed = j.value("seed", std::uint64_t{1});
    const std::string metric = j.value("metric", std::string("auuc_trapezoid"));
    if (metric == "auuc_trapezoid") {
      config.metric = VarianceMetric::kAuucTrapezoid;
    } else if (metric == "auuc_riemann") {
      config.metric = VarianceMetric::kAuucRiemann;
    } else {
      Fail(ErrorKind::kValidation, "unknown metric '" + metric + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kValidation, std::string("bad config: ") + e.what());
  }
  if (config.population.n == 0) config.population.n = 10000;
  config.population.seed = config.seed;
  ValidateConfig(config);
  return config;
}

void WriteVarianceCsv(std::ostream& out,
                      const std::vector<ExperimentReport>& rows) {
  out << "nu,p_y1,mean,var\n";
  for (const auto& row : rows) {
    for (const auto& s : row.per_nu) {
      out << FormatDouble(s.nu) << ',' << FormatDouble(row.p_y1) << ','
          << FormatDouble(s.mean) << ',' << FormatDouble(s.variance) << '\n';
    }
  }
}

}  // namespace uplift
