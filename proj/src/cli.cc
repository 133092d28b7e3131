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

#include "uplift/cli.h"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "uplift/curves.h"
#include "uplift/data_model.h"
#include "uplift/errors.h"
#include "uplift/experiments.h"
#include "uplift/generators.h"
#include "uplift/metrics.h"
#include "uplift/text.h"

namespace uplift {
namespace {

struct GlobalFlags {
  std::uint64_t seed = 1;
  std::string output;
  std::string format = "json";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::ofstream OpenOutput(const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  return out;
}

void WriteJsonFile(const std::string& path, const nlohmann::json& j) {
  auto out = OpenOutput(path);
  out << j.dump(2) << '\n';
}

std::string Replace(std::string path, const std::string& suffix,
                    const std::string& replacement) {
  if (path.size() >= suffix.size() &&
      path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0) {
    path.resize(path.size() - suffix.size());
  }
  return path + replacement;
}

std::string Fixed(double v, int precision = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// Reads one numeric column of a CSV file, picking the first header name in
// `candidates` that exists (or the only column).
std::vector<double> ReadColumn(const std::string& path,
                               const std::vector<std::string>& candidates) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorKind::kParse, path + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
        cell.pop_back();
      }
      header.push_back(cell);
    }
  }
  std::optional<std::size_t> column;
  for (const auto& name : candidates) {
    for (std::size_t i = 0; i < header.size() && !column; ++i) {
      if (header[i] == name) column = i;
    }
    if (column) break;
  }
  if (!column && header.size() == 1) column = 0;
  if (!column) {
    Fail(ErrorKind::kParse, path + ": no column named " + candidates.front());
  }
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i <= *column; ++i) {
      if (!std::getline(ss, cell, ',')) {
        Fail(ErrorKind::kParse, path + ": line " + std::to_string(line_no) +
                                    ": missing column");
      }
    }
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      Fail(ErrorKind::kParse, path + ": line " + std::to_string(line_no) +
                                  ": bad number '" + cell + "'");
    }
  }
  return values;
}

// --- generate --------------------------------------------------------------

struct GenerateArgs {
  std::string builtin;
  std::string spec_path;
  std::size_t n = 0;
  std::optional<double> q0;
  std::string toy2_model = "distinguishing";
  std::size_t segments = 10;
  double alpha = 0.5;
  double p_y1 = 0.5;
  std::string hetero_model = "good";
};

int RunGenerate(const GenerateArgs& args, const GlobalFlags& flags,
                std::ostream& out) {
  if (args.builtin.empty() == args.spec_path.empty()) {
    throw UsageError("generate needs exactly one of --builtin or --spec");
  }
  if (flags.output.empty()) throw UsageError("generate needs --output");
  PopulationSpec spec;
  std::optional<std::vector<double>> group_scores;
  if (!args.spec_path.empty()) {
    std::ifstream in(args.spec_path);
    if (!in) Fail(ErrorKind::kIo, "cannot open " + args.spec_path);
    try {
      nlohmann::json::parse(in).get_to(spec);
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kValidation, std::string("bad spec: ") + e.what());
    }
    if (spec.n == 0) spec.n = 10000;
  } else if (args.builtin == "toy1") {
    spec = Toy1Spec();
  } else if (args.builtin == "toy2") {
    Toy2Model model = Toy2Model::kDistinguishing;
    if (args.toy2_model == "merged") {
      model = Toy2Model::kMerged;
    } else if (args.toy2_model == "true") {
      model = Toy2Model::kTrueUplift;
    } else if (args.toy2_model != "distinguishing") {
      throw UsageError("unknown --model " + args.toy2_model);
    }
    spec = Toy2Spec(model, args.q0.value_or(0.75));
  } else if (args.builtin == "toy3") {
    spec = Toy3Spec(args.q0.value_or(0.1));
  } else if (args.builtin == "hetero") {
    auto het = HeterogeneousSpec(args.segments, args.alpha, args.p_y1,
                                 flags.seed);
    spec = het.spec;
    if (args.hetero_model == "bad") {
      group_scores = het.bad_scores;
    } else if (args.hetero_model != "good") {
      throw UsageError("unknown --hetero-model " + args.hetero_model);
    }
  } else {
    throw UsageError("unknown builtin '" + args.builtin + "'");
  }
  if (args.n > 0) spec.n = args.n;
  spec.seed = flags.seed;
  if (group_scores) {
    for (std::size_t g = 0; g < spec.groups.size(); ++g) {
      spec.groups[g].model_score = (*group_scores)[g];
    }
  }
  const GeneratedData data = Generate(spec);
  const std::string truth_path = Replace(flags.output, ".csv", ".truth.csv");
  {
    auto file = OpenOutput(flags.output);
    WriteDataset(file, data.logged, std::span<const double>(data.model_scores));
  }
  {
    auto file = OpenOutput(truth_path);
    WriteGroundTruth(file, data);
  }
  out << "wrote " << data.logged.size() << " records to " << flags.output
      << " (ground truth: " << truth_path << ")\n";
  out << "treated fraction: "
      << Fixed(static_cast<double>(data.logged.num_treated()) /
               static_cast<double>(data.logged.size()))
      << '\n';
  return kExitOk;
}

// --- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string dataset;
  std::string scores_file;
  std::string estimator = "rebalanced";
  std::optional<double> nu;
  std::optional<std::size_t> kernel_width;
  bool interpolate_ties = true;
  std::optional<double> upto;
  std::string curve_output;
};

Curve BuildCurve(const ScoredDataset& scored, const EvaluateArgs& args) {
  const std::string& e = args.estimator;
  if (args.nu && e != "vnu") throw UsageError("--nu only applies to vnu");
  if (args.kernel_width && e != "ips-local") {
    throw UsageError("--kernel-width only applies to ips-local");
  }
  if (e == "v1") return CurveV1(scored);
  if (e == "v2") return CurveV2(scored);
  if (e == "vnu") {
    if (!args.nu) throw UsageError("vnu needs --nu");
    return CurveVnu(scored, *args.nu);
  }
  if (e == "rebalanced") return CurveRebalanced(scored);
  if (e == "ips-global") return CurveIpsGlobal(scored);
  if (e == "ips-local") {
    if (!args.kernel_width) throw UsageError("ips-local needs --kernel-width");
    return CurveIpsLocal(scored, KernelSpec{*args.kernel_width});
  }
  if (e.rfind("table1:", 0) == 0) {
    return Table1Curve(scored, Table1Variant::Parse(e.substr(7)));
  }
  throw UsageError("unknown estimator '" + e + "'");
}

int RunEvaluate(const EvaluateArgs& args, const GlobalFlags& flags,
                std::ostream& out) {
  auto dataset =
      std::make_shared<const LoggedBanditDataset>(LoadDatasetFile(args.dataset));
  std::vector<double> scores;
  if (!args.scores_file.empty()) {
    scores = ReadColumn(args.scores_file, {"score", "tau_hat", "prediction"});
  } else if (dataset->embedded_scores()) {
    scores = *dataset->embedded_scores();
  } else {
    throw UsageError(
        "dataset has no score column; pass --scores-file");
  }
  const ScoredDataset scored = RankByScore(dataset, std::move(scores));
  Curve curve = BuildCurve(scored, args);
  const bool separate =
      args.estimator.rfind("table1:", 0) == 0 &&
      Table1Variant::Parse(args.estimator.substr(7)).ranking ==
          Table1Ranking::kSeparate;
  if (args.interpolate_ties && !separate) {
    curve = InterpolateIsoUplift(curve, scored);
  }
  const MetricReport report = EvaluateCurve(curve, args.upto);

  out << "estimator:    " << args.estimator << " (" << report.scale
      << " scale)\n";
  out << "records:      " << scored.size() << "\n";
  out << "iso groups:   " << scored.iso_groups().size()
      << (curve.interpolated ? " (interpolated)" : "") << "\n";
  out << "auuc:         " << FormatDouble(report.auuc) << "\n";
  out << "auuc_riemann: " << FormatDouble(report.auuc_riemann) << "\n";
  out << "delta_auuc:   " << FormatDouble(report.delta_auuc) << "\n";
  out << "endpoint:     " << FormatDouble(report.endpoint) << "\n";

  std::string curve_path = args.curve_output;
  if (curve_path.empty() && !flags.output.empty()) {
    curve_path = Replace(Replace(flags.output, ".json", ""), ".csv", "") +
                 ".curve.csv";
  }
  if (!flags.output.empty()) {
    if (flags.format == "json") {
      nlohmann::json j = report;
      j["curve"] = CurveHeaderJson(curve);
      j["curve"]["path"] = curve_path;
      WriteJsonFile(flags.output, j);
    } else {
      auto file = OpenOutput(flags.output);
      file << "auuc,auuc_riemann,delta_auuc,endpoint,x_end\n"
           << FormatDouble(report.auuc) << ','
           << FormatDouble(report.auuc_riemann) << ','
           << FormatDouble(report.delta_auuc) << ','
           << FormatDouble(report.endpoint) << ','
           << FormatDouble(report.x_end) << '\n';
    }
  }
  if (!curve_path.empty()) {
    auto file = OpenOutput(curve_path);
    WriteCurveCsv(file, curve);
  }
  return kExitOk;
}

// --- counterexample --------------------------------------------------------

struct CounterexampleArgs {
  std::string id;
  std::size_t n = 40000;
  std::size_t realizations = 200;
  std::optional<double> q0;
  std::string estimator = "v1";
  bool interpolate_ties = true;
};

int RunCounterexampleCmd(const CounterexampleArgs& args,
                         const GlobalFlags& flags, std::ostream& out) {
  CounterexampleOptions options;
  options.id = ParseToyId(args.id);
  options.n = args.n;
  options.realizations = args.realizations;
  options.seed = flags.seed;
  options.q0 = args.q0;
  options.interpolate_ties = args.interpolate_ties;
  if (args.estimator == "v1") {
    options.estimator = CurveEstimator::kV1;
  } else if (args.estimator == "rebalanced") {
    options.estimator = CurveEstimator::kRebalanced;
  } else {
    throw UsageError("counterexample estimator must be v1 or rebalanced");
  }
  const CounterexampleReport report = RunCounterexample(options);

  out << ToyName(options.id) << " (" << CurveEstimatorName(options.estimator)
      << ", N=" << options.n << ", M=" << options.realizations << ")\n";
  out << "group  q        beta1  beta0  uplift   slope\n";
  for (std::size_t g = 0; g < report.population.groups.size(); ++g) {
    const auto& gr = report.population.groups[g];
    out << std::left << std::setw(7) << gr.label << std::setw(9)
        << Fixed(gr.treatment_prob, 4) << std::setw(7)
        << Fixed(gr.beta_treated, 2) << std::setw(7)
        << Fixed(gr.beta_control, 2) << std::setw(9)
        << Fixed(gr.true_uplift(), 3) << Fixed(report.group_slopes[g], 4)
        << std::right << "\n";
  }
  out << "model      analytic_auuc  mc_mean        mc_stderr  z\n";
  for (const auto* m : {&report.truth, &report.challenger}) {
    out << std::left << std::setw(11) << m->name << std::setw(15)
        << Fixed(m->analytic_auuc) << std::setw(15) << Fixed(m->mc_auuc.mean)
        << std::setw(11) << Fixed(m->mc_auuc.stderr_mean) << Fixed(m->mc_z, 2)
        << std::right << "\n";
  }
  out << "paired difference: " << Fixed(report.mc_difference.mean, 6)
      << " (separation " << Fixed(report.separation, 1) << " stderr)\n";
  out << "AUUC misranks: " << (report.verdict ? "true" : "false") << "\n";
  if (!flags.output.empty()) WriteJsonFile(flags.output, report);
  return kExitOk;
}

// --- variance-study / nu-sweep ---------------------------------------------

void PrintStudy(const ExperimentReport& r, std::ostream& out) {
  out << "P(Y=1)=" << Fixed(r.p_y1, 4) << " alpha=" << Fixed(r.alpha, 3)
      << "\n";
  out << "nu      mean          variance\n";
  for (const auto& s : r.per_nu) {
    out << std::left << std::setw(8) << Fixed(s.nu, 3) << std::setw(14)
        << Fixed(s.mean, 6) << FormatDouble(s.variance) << std::right << "\n";
  }
  out << "argmin nu: empirical " << Fixed(r.argmin_nu_empirical, 3)
      << ", theoretical " << Fixed(r.argmin_nu_theoretical, 3) << "\n";
}

void WriteStudyOutput(const GlobalFlags& flags,
                      const std::vector<ExperimentReport>& rows,
                      const nlohmann::json& j) {
  if (flags.output.empty()) return;
  if (flags.format == "csv") {
    auto file = OpenOutput(flags.output);
    WriteVarianceCsv(file, rows);
  } else {
    WriteJsonFile(flags.output, j);
  }
}

int RunVarianceStudyCmd(const std::string& config_path, bool seed_given,
                        const GlobalFlags& flags, std::ostream& out) {
  std::ifstream in(config_path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + config_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kValidation, std::string("bad config: ") + e.what());
  }
  if (seed_given || !j.contains("seed")) j["seed"] = flags.seed;
  const VarianceStudyConfig config = ParseVarianceStudyConfig(j);
  out << "study seed: " << config.seed << "\n";
  const ExperimentReport report = VarianceStudy(config);
  PrintStudy(report, out);
  WriteStudyOutput(flags, {report}, report);
  return kExitOk;
}

struct SweepArgs {
  std::vector<double> p_y1 = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  std::vector<double> nus;
  std::size_t segments = 10;
  double alpha = 0.5;
  std::size_t n = 10000;
  std::size_t realizations = 101;
};

int RunNuSweepCmd(SweepArgs args, const GlobalFlags& flags,
                  std::ostream& out) {
  if (args.nus.empty()) {
    for (int i = 0; i <= 20; ++i) args.nus.push_back(i / 20.0);
  }
  VarianceStudyConfig base;
  base.nus = args.nus;
  base.realizations = args.realizations;
  base.seed = flags.seed;
  const NuSurfaceReport report = NuSurfaceSweep(
      args.p_y1, HeterogeneousOptions{args.segments, args.alpha, args.n}, base);
  out << "P(Y=1)  argmin_empirical  argmin_theoretical\n";
  for (const auto& row : report.rows) {
    out << std::left << std::setw(8) << Fixed(row.p_y1, 3) << std::setw(18)
        << Fixed(row.argmin_nu_empirical, 3)
        << Fixed(row.argmin_nu_theoretical, 3) << std::right << "\n";
  }
  out << "argmin slope vs P(Y=1): " << Fixed(report.argmin_slope, 3) << "\n";
  WriteStudyOutput(flags, report.rows, report);
  return kExitOk;
}

// --- pehe --------------------------------------------------------------------

int RunPeheCmd(const std::string& truth_path, const std::string& preds_path,
               const GlobalFlags& flags, std::ostream& out) {
  const auto tau = ReadColumn(truth_path, {"tau", "ite"});
  const auto tau_hat =
      ReadColumn(preds_path, {"tau_hat", "score", "prediction", "tau"});
  const double value = Pehe(tau_hat, tau);
  out << "PEHE: " << FormatDouble(value) << "\n";
  if (!flags.output.empty()) {
    WriteJsonFile(flags.output, {{"pehe", value}, {"n", tau.size()}});
  }
  return kExitOk;
}

int ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
    case ErrorKind::kDegenerateWindow:
    case ErrorKind::kUndefined:
      return kExitRuntime;
    default:
      return kExitUsage;
  }
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  GlobalFlags flags;
  if (const char* env = std::getenv("UPLIFT_EVAL_SEED")) {
    try {
      flags.seed = std::stoull(env);
    } catch (const std::exception&) {
      err << "error: UPLIFT_EVAL_SEED is not an integer\n";
      return kExitUsage;
    }
  }

  CLI::App app{"Uplift model evaluation: curves, AUUC and simulation studies",
               "uplift_eval"};
  app.require_subcommand(1);
  app.fallthrough();
  auto* seed_opt = app.add_option("--seed", flags.seed, "64-bit seed");
  app.add_option("--output", flags.output, "machine-readable output path");
  app.add_option("--format", flags.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  generate->add_option("--builtin", gen.builtin, "toy1|toy2|toy3|hetero");
  generate->add_option("--spec", gen.spec_path, "population spec JSON");
  generate->add_option("--n", gen.n, "number of units");
  generate->add_option("--q0", gen.q0, "treatment probability (toy2/toy3)");
  generate->add_option("--model", gen.toy2_model,
                       "toy2 model: distinguishing|merged|true");
  generate->add_option("--segments", gen.segments, "hetero segments");
  generate->add_option("--alpha", gen.alpha, "hetero treatment probability");
  generate->add_option("--p-y1", gen.p_y1, "hetero target P(Y=1)");
  generate->add_option("--hetero-model", gen.hetero_model, "good|bad");

  EvaluateArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "build a curve and its AUUC");
  evaluate->add_option("dataset", eval.dataset, "dataset CSV")->required();
  evaluate->add_flag("--scores-column", "use the dataset's score column");
  evaluate->add_option("--scores-file", eval.scores_file,
                       "CSV with a score column, one row per record");
  evaluate->add_option("--estimator", eval.estimator,
                       "v1|v2|vnu|rebalanced|ips-local|ips-global|"
                       "table1:<variant>");
  evaluate->add_option("--nu", eval.nu, "V_nu mixing weight");
  evaluate->add_option("--kernel-width", eval.kernel_width,
                       "boxcar half width for ips-local");
  evaluate->add_flag("--interpolate-ties,!--no-interpolate-ties",
                     eval.interpolate_ties,
                     "interpolate within equal-score runs (default on)");
  evaluate->add_option("--upto", eval.upto, "integrate over [0, upto]");
  evaluate->add_option("--curve-output", eval.curve_output, "curve CSV path");

  CounterexampleArgs cex;
  auto* counterexample =
      app.add_subcommand("counterexample", "run toy1, toy2 or toy3");
  counterexample->add_option("id", cex.id, "toy1|toy2|toy3")->required();
  counterexample->add_option("--n", cex.n, "units per realization");
  counterexample->add_option("--realizations", cex.realizations,
                             "Monte Carlo realizations");
  counterexample->add_option("--q0", cex.q0, "treatment probability override");
  counterexample->add_option("--estimator", cex.estimator, "v1|rebalanced");
  counterexample->add_flag("--interpolate-ties,!--no-interpolate-ties",
                           cex.interpolate_ties, "default on");

  std::string config_path;
  auto* variance = app.add_subcommand("variance-study", "AUUC variance per nu");
  variance->add_option("--config", config_path, "study config JSON")
      ->required();

  SweepArgs sweep;
  auto* nu_sweep =
      app.add_subcommand("nu-sweep", "variance surface over P(Y=1) and nu");
  nu_sweep->add_option("--p-y1", sweep.p_y1, "P(Y=1) grid");
  nu_sweep->add_option("--nus", sweep.nus, "nu grid (default 0..1 by 0.05)");
  nu_sweep->add_option("--segments", sweep.segments, "segments");
  nu_sweep->add_option("--alpha", sweep.alpha, "treatment probability");
  nu_sweep->add_option("--n", sweep.n, "units per realization");
  nu_sweep->add_option("--realizations", sweep.realizations, "realizations");

  std::string truth_path, preds_path;
  auto* pehe = app.add_subcommand("pehe", "PEHE between two effect files");
  pehe->add_option("truth", truth_path, "CSV with a tau column")->required();
  pehe->add_option("predictions", preds_path, "CSV with predictions")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  out << "seed: " << flags.seed << "\n";
  try {
    if (*generate) return RunGenerate(gen, flags, out);
    if (*evaluate) return RunEvaluate(eval, flags, out);
    if (*counterexample) return RunCounterexampleCmd(cex, flags, out);
    if (*variance) {
      return RunVarianceStudyCmd(config_path, seed_opt->count() > 0, flags,
                                 out);
    }
    if (*nu_sweep) return RunNuSweepCmd(sweep, flags, out);
    if (*pehe) return RunPeheCmd(truth_path, preds_path, flags, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UpliftError& e) {
    err << ErrorKindName(e.kind()) << ": " << e.what() << "\n";
    return ExitCodeFor(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace uplift
