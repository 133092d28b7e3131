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

#include "uplift/metrics.h"

#include <cmath>

#include "uplift/errors.h"
#include "uplift/text.h"

namespace uplift {
namespace {

void RequireAlpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    Fail(ErrorKind::kDomain,
         "alpha must lie in (0,1), got " + FormatDouble(alpha));
  }
}

}  // namespace

double AreaUnderCurve(const Curve& curve, std::optional<double> upto,
                      Quadrature quadrature) {
  const double end = curve.x_end();
  if (upto) {
    if (!(*upto > 0.0)) Fail(ErrorKind::kDomain, "upto must be positive");
    // Rebalanced curves end near, not at, 1; allow rounding slack only.
    if (*upto > end + 1e-12) {
      Fail(ErrorKind::kBounds, "upto=" + FormatDouble(*upto) +
                                   " exceeds curve extent " +
                                   FormatDouble(end));
    }
  }
  const double limit = upto ? std::min(*upto, end) : end;
  double area = 0.0;
  double prev_x = 0.0;
  double prev_v = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve.absent(i)) continue;
    const double x = curve.xs[i];
    const double v = curve.values[i];
    const bool last = x >= limit;
    const double right = last ? limit : x;
    const double width = right - prev_x;
    if (width > 0.0) {
      if (quadrature == Quadrature::kTrapezoid) {
        const double v_right =
            x > prev_x ? prev_v + (v - prev_v) * width / (x - prev_x) : v;
        area += 0.5 * (prev_v + v_right) * width;
      } else {
        area += v * width;
      }
    }
    if (last) break;
    prev_x = x;
    prev_v = v;
  }
  return area;
}

double DeltaAuuc(const Curve& curve, Quadrature quadrature) {
  std::optional<std::size_t> last;
  for (std::size_t i = curve.size(); i-- > 0;) {
    if (!curve.absent(i)) {
      last = i;
      break;
    }
  }
  if (!last) Fail(ErrorKind::kUndefined, "curve has no defined points");
  const double x_end = curve.xs[*last];
  return AreaUnderCurve(curve, {}, quadrature) -
         0.5 * x_end * curve.values[*last];
}

MetricReport EvaluateCurve(const Curve& curve, std::optional<double> upto) {
  MetricReport report;
  report.auuc = AreaUnderCurve(curve, upto, Quadrature::kTrapezoid);
  report.auuc_riemann = AreaUnderCurve(curve, upto, Quadrature::kRiemannRight);
  report.delta_auuc = DeltaAuuc(curve);
  report.endpoint = curve.endpoint();
  report.x_end = curve.x_end();
  report.upto = upto;
  report.constructor = curve.constructor;
  report.scale = CurveScaleName(curve.scale);
  report.interpolated = curve.interpolated;
  return report;
}

void to_json(nlohmann::json& j, const MetricReport& report) {
  j = nlohmann::json{{"auuc", report.auuc},
                     {"auuc_riemann", report.auuc_riemann},
                     {"delta_auuc", report.delta_auuc},
                     {"endpoint", report.endpoint},
                     {"x_end", report.x_end},
                     {"constructor", report.constructor},
                     {"scale", report.scale},
                     {"interpolated", report.interpolated}};
  j["upto"] = report.upto ? nlohmann::json(*report.upto) : nlohmann::json();
}

double Pehe(std::span<const double> tau_hat, std::span<const double> tau) {
  if (tau_hat.size() != tau.size()) {
    Fail(ErrorKind::kDimension,
         "pehe: " + std::to_string(tau_hat.size()) + " predictions for " +
             std::to_string(tau.size()) + " true effects");
  }
  if (tau.empty()) Fail(ErrorKind::kDimension, "pehe: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double d = tau_hat[i] - tau[i];
    sum += d * d;
  }
  return sum / static_cast<double>(tau.size());
}

double OptimalNu(double p0, double p1, double alpha) {
  RequireAlpha(alpha);
  return p1 * (1.0 - alpha) + p0 * alpha;
}

double ExpectedSlope(double q, double beta1, double beta0) {
  return q * (beta1 + beta0) - beta0;
}

double MergedSlope(const std::vector<SlopeMember>& members) {
  double weight = 0.0;
  double sum = 0.0;
  for (const auto& m : members) {
    weight += m.weight;
    sum += m.weight * ExpectedSlope(m.q, m.beta1, m.beta0);
  }
  if (!(weight > 0.0)) Fail(ErrorKind::kDomain, "merged segment has no mass");
  return sum / weight;
}

double QIncrement(int y, int t, double alpha, QWhich which) {
  RequireAlpha(alpha);
  if (which == QWhich::kQ1) {
    if (y != 1) return 0.0;
    return t == 1 ? 1.0 / alpha : -1.0 / (1.0 - alpha);
  }
  if (y != 0) return 0.0;
  return t == 0 ? 1.0 / (1.0 - alpha) : -1.0 / alpha;
}

TheoreticalMoments ComputeTheoreticalMoments(double p0, double p1,
                                             double alpha) {
  RequireAlpha(alpha);
  TheoreticalMoments m;
  const double d = p1 - p0;
  m.e_q1 = d;
  m.e_q2 = d;
  m.e_q1_sq = p1 / alpha + p0 / (1.0 - alpha);
  m.e_q2_sq = (1.0 - p0) / (1.0 - alpha) + (1.0 - p1) / alpha;
  // Q1 lives on y = 1 and Q2 on y = 0, so E[Q1 Q2] = 0.
  m.cov_q1q2 = -d * d;
  const double v1 = m.var_q1();
  const double v2 = m.var_q2();
  m.a = v1 + v2 - 2.0 * m.cov_q1q2;
  m.b = 2.0 * (m.cov_q1q2 - v1);
  m.c = v1;
  return m;
}

}  // namespace uplift
