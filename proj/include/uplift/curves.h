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

#ifndef UPLIFT_CURVES_H_
#define UPLIFT_CURVES_H_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "uplift/data_model.h"

namespace uplift {

enum class CurveScale { kNormalized, kAbsolute };

const char* CurveScaleName(CurveScale scale);

// A discrete uplift/Qini curve. Point i (0-based) is the curve after the
// (i + 1)-th ranked unit; the origin (0, 0) is implied and not stored.
// Absent points (undefined ratios) hold NaN.
struct Curve {
  std::vector<double> xs;
  std::vector<double> values;
  CurveScale scale = CurveScale::kNormalized;
  std::string constructor;
  std::optional<double> nu;
  std::optional<std::size_t> kernel_half_width;
  bool interpolated = false;

  std::size_t size() const { return values.size(); }
  bool absent(std::size_t i) const { return std::isnan(values[i]); }
  double x_end() const { return xs.empty() ? 0.0 : xs.back(); }
  // Value of the last point, V(N).
  double endpoint() const { return values.empty() ? 0.0 : values.back(); }

  static constexpr double kAbsent = std::numeric_limits<double>::quiet_NaN();
};

// Classical construction: +1 for a treated responder, -1 for a control
// responder, flat otherwise; all steps are 1/N on both axes.
Curve CurveV1(const ScoredDataset& scored);

// Inverted-label construction: +1 for a control non-responder, -1 for a
// treated non-responder.
Curve CurveV2(const ScoredDataset& scored);

// Pointwise (1 - nu) * V1 + nu * V2, nu in [0, 1].
Curve CurveVnu(const ScoredDataset& scored, double nu);

// V_nu built from propensity-rescaled increments: each unit's +/-1 step is
// divided by its logged propensity q_i, still on the 1/N grid. Under an RCT
// with rate alpha these are the Q1(alpha), Q2(alpha) increments, whose sum
// over the top k is an unbiased estimate of k times the prefix uplift.
Curve CurveRescaledVnu(const ScoredDataset& scored, double nu);

// Propensity-rebalanced curve: V(k) = sum_{i<=k} (1/q_i)(y_i t_i -
// y_i (1 - t_i)) on the absolute scale, with xs[k] = (1/N) sum_{i<=k}
// 1/(2 q_i). With nu > 0 the inverted-label steps are mixed in as in
// CurveVnu.
Curve CurveRebalanced(const ScoredDataset& scored, double nu = 0.0);

// Boxcar window over sorted ranks [k - w, k + w], clipped to [1, N].
struct KernelSpec {
  std::size_t half_width = 1;
};

// Local-IPS curve R_T(k) / e_T(k) - R_C(k) / (1 - e_T(k)) where e_T(k) is
// the windowed treated fraction. Throws kDegenerateWindow if e_T(k) hits 0
// or 1 anywhere.
Curve CurveIpsLocal(const ScoredDataset& scored, KernelSpec kernel);

// Importance-weighted V1 towards a 50% RCT policy: cumulative
// (0.5 / q_i)[1(t=1, y=1) - 1(t=0, y=1)] divided by N.
Curve CurveIpsGlobal(const ScoredDataset& scored);

enum class Table1Family { kQini, kUplift };
enum class Table1Ranking { kSeparate, kJoint };
enum class Table1Count { kAbsolute, kRelative };

struct Table1Variant {
  Table1Family family = Table1Family::kUplift;
  Table1Ranking ranking = Table1Ranking::kJoint;
  Table1Count count = Table1Count::kRelative;

  // "qini-sep-abs", "uplift-joint-rel", ...
  std::string Name() const;
  static Table1Variant Parse(const std::string& name);
  friend bool operator==(const Table1Variant&, const Table1Variant&) = default;
};

// The six populated variants (Qini has no relative-count cells).
std::vector<Table1Variant> AllTable1Variants();

// Separate variants evaluate at proportions p (default j/N, j = 1..N) and
// rank treated and control units independently; joint variants evaluate at
// every k = 1..N and ignore `grid`. A top-p group prefix holds
// floor(p * |G|) units, rounding to the nearest integer when within 1e-9.
Curve Table1Curve(const ScoredDataset& scored, Table1Variant variant,
                  const std::vector<double>& grid = {});

// Number of units in the top-p prefix of a group of `group_size` units.
std::size_t GroupPrefixSize(double p, std::size_t group_size);

// Replaces every point not closing an iso-score run by linear interpolation
// in xs between the enclosing run ends (the origin before the first one).
Curve InterpolateIsoUplift(const Curve& curve, const ScoredDataset& scored);

// Returns a copy with values multiplied by `factor`.
Curve ScaleValues(const Curve& curve, double factor);

// Exact fraction used by the scaling-factor checksums.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  friend bool operator==(const Rational&, const Rational&) = default;
  Rational operator+(const Rational& other) const;
  Rational operator*(const Rational& other) const;
};

// Sums of the per-unit RCT scaling factors computed term by term in exact
// arithmetic: y_axis = sum_i (t_i/|T| + (1-t_i)/|C|)(|T|+|C|), expected to
// equal 2(|T|+|C|); x_axis = (1/2) sum_i (t_i/|T| + (1-t_i)/|C|), expected 1.
struct ScalingChecksums {
  Rational y_axis;
  Rational x_axis;
  Rational y_axis_expected;
};
ScalingChecksums ComputeScalingChecksums(const LoggedBanditDataset& dataset);

nlohmann::json CurveHeaderJson(const Curve& curve);
// `k,x,value` rows, k 1-based; absent values are written as empty fields.
void WriteCurveCsv(std::ostream& out, const Curve& curve);

}  // namespace uplift

#endif  // UPLIFT_CURVES_H_
