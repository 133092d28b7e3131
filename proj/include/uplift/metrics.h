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

#ifndef UPLIFT_METRICS_H_
#define UPLIFT_METRICS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "uplift/curves.h"

namespace uplift {

enum class Quadrature {
  kTrapezoid,     // piecewise-linear curve through the implied origin
  kRiemannRight,  // sum of V(i) times the x increment ending at i
};

// Integral of the curve over [0, upto] (whole extent when unset). Absent
// points are skipped and their neighbours joined linearly. Throws kBounds if
// `upto` lies past the last point.
double AreaUnderCurve(const Curve& curve, std::optional<double> upto = {},
                      Quadrature quadrature = Quadrature::kTrapezoid);

// Area between the curve and the straight line from the origin to its last
// point: AreaUnderCurve - x_end * V(N) / 2.
double DeltaAuuc(const Curve& curve,
                 Quadrature quadrature = Quadrature::kTrapezoid);

struct MetricReport {
  double auuc = 0.0;
  double auuc_riemann = 0.0;
  double delta_auuc = 0.0;
  double endpoint = 0.0;
  double x_end = 0.0;
  std::optional<double> upto;
  std::string constructor;
  std::string scale;
  bool interpolated = false;
};

MetricReport EvaluateCurve(const Curve& curve,
                           std::optional<double> upto = {});
void to_json(nlohmann::json& j, const MetricReport& report);

// Mean squared difference between estimated and true effects.
double Pehe(std::span<const double> tau_hat, std::span<const double> tau);

// Variance-minimising mixing weight p1 (1 - alpha) + p0 alpha.
double OptimalNu(double p0, double p1, double alpha);

// Expected per-unit slope of the V1 curve over a homogeneous group:
// q (beta1 + beta0) - beta0.
double ExpectedSlope(double q, double beta1, double beta0);

struct SlopeMember {
  double weight = 1.0;  // population share
  double q = 0.5;
  double beta1 = 0.0;
  double beta0 = 0.0;
};
// Groups sharing a score form one segment whose slope is the
// population-weighted mean of the member slopes.
double MergedSlope(const std::vector<SlopeMember>& members);

enum class QWhich { kQ1, kQ2 };

// Rescaled per-unit increment. Q1: +1/alpha for (y=1, t=1), -1/(1-alpha) for
// (y=1, t=0). Q2: +1/(1-alpha) for (y=0, t=0), -1/alpha for (y=0, t=1).
double QIncrement(int y, int t, double alpha, QWhich which);

// Moments of Q1(alpha), Q2(alpha) for a unit drawn with P(y=1|t=1) = p1,
// P(y=1|t=0) = p0 and treatment probability alpha.
struct TheoreticalMoments {
  double e_q1 = 0.0;
  double e_q2 = 0.0;
  double e_q1_sq = 0.0;
  double e_q2_sq = 0.0;
  double cov_q1q2 = 0.0;
  // Var(Q_nu) = a nu^2 + b nu + c.
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;

  double var_q1() const { return e_q1_sq - e_q1 * e_q1; }
  double var_q2() const { return e_q2_sq - e_q2 * e_q2; }
  double VarQnu(double nu) const { return (a * nu + b) * nu + c; }
  double DVarQnu(double nu) const { return 2.0 * a * nu + b; }
  double ArgminNu() const { return -b / (2.0 * a); }
};
TheoreticalMoments ComputeTheoreticalMoments(double p0, double p1,
                                             double alpha);

}  // namespace uplift

#endif  // UPLIFT_METRICS_H_
