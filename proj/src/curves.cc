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

#include "uplift/curves.h"

#include <algorithm>
#include <numeric>

#include "uplift/errors.h"
#include "uplift/text.h"

namespace uplift {
namespace {

void RequireBinary(const ScoredDataset& scored, const char* estimator) {
  if (!scored.dataset().binary_outcome()) {
    Fail(ErrorKind::kDomain,
         std::string(estimator) + " requires binary outcomes");
  }
}

void RequireNu(double nu) {
  if (!(nu >= 0.0 && nu <= 1.0)) {
    Fail(ErrorKind::kDomain, "nu must lie in [0,1], got " + FormatDouble(nu));
  }
}

std::vector<double> UnitGrid(std::size_t n) {
  std::vector<double> xs(n);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 1; k <= n; ++k) xs[k - 1] = static_cast<double>(k) / dn;
  return xs;
}

// Cumulative sum of per-unit steps, divided by `divisor` at each point.
template <typename Step>
std::vector<double> Cumulate(const ScoredDataset& scored, double divisor,
                             Step step) {
  std::vector<double> values(scored.size());
  double running = 0.0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    running += step(scored.sorted(i));
    values[i] = running / divisor;
  }
  return values;
}

double V1Step(const LoggedBanditRecord& r) {
  if (r.outcome != 1.0) return 0.0;
  return r.treatment == 1 ? 1.0 : -1.0;
}

double V2Step(const LoggedBanditRecord& r) {
  if (r.outcome != 0.0) return 0.0;
  return r.treatment == 0 ? 1.0 : -1.0;
}

Curve Combine(const Curve& v1, const Curve& v2, double nu) {
  Curve out = v1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values[i] = (1.0 - nu) * v1.values[i] + nu * v2.values[i];
  }
  out.nu = nu;
  return out;
}

using I128 = __int128;

I128 Gcd(I128 a, I128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    const I128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Rational Reduce(I128 num, I128 den) {
  if (den == 0) Fail(ErrorKind::kDomain, "zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const I128 g = Gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return Rational{static_cast<std::int64_t>(num),
                  static_cast<std::int64_t>(den)};
}

}  // namespace

const char* CurveScaleName(CurveScale scale) {
  return scale == CurveScale::kNormalized ? "normalized" : "absolute";
}

Curve CurveV1(const ScoredDataset& scored) {
  RequireBinary(scored, "v1");
  Curve c;
  c.xs = UnitGrid(scored.size());
  c.values = Cumulate(scored, static_cast<double>(scored.size()), V1Step);
  c.constructor = "v1";
  return c;
}

Curve CurveV2(const ScoredDataset& scored) {
  RequireBinary(scored, "v2");
  Curve c;
  c.xs = UnitGrid(scored.size());
  c.values = Cumulate(scored, static_cast<double>(scored.size()), V2Step);
  c.constructor = "v2";
  return c;
}

Curve CurveVnu(const ScoredDataset& scored, double nu) {
  RequireNu(nu);
  Curve c = Combine(CurveV1(scored), CurveV2(scored), nu);
  c.constructor = "vnu";
  return c;
}

Curve CurveRescaledVnu(const ScoredDataset& scored, double nu) {
  RequireNu(nu);
  RequireBinary(scored, "rescaled vnu");
  const double n = static_cast<double>(scored.size());
  Curve q1;
  q1.xs = UnitGrid(scored.size());
  q1.values = Cumulate(scored, n, [](const LoggedBanditRecord& r) {
    return V1Step(r) / r.propensity;
  });
  Curve q2;
  q2.values = Cumulate(scored, n, [](const LoggedBanditRecord& r) {
    return V2Step(r) / r.propensity;
  });
  Curve c = Combine(q1, q2, nu);
  c.constructor = "rescaled-vnu";
  return c;
}

Curve CurveRebalanced(const ScoredDataset& scored, double nu) {
  RequireNu(nu);
  const double n = static_cast<double>(scored.size());
  Curve c;
  c.scale = CurveScale::kAbsolute;
  c.constructor = "rebalanced";
  c.xs.resize(scored.size());
  double x = 0.0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    x += 1.0 / (2.0 * scored.sorted(i).propensity);
    c.xs[i] = x / n;
  }
  // Logged outcomes: y t - y (1 - t), also defined for real-valued y.
  c.values = Cumulate(scored, 1.0, [](const LoggedBanditRecord& r) {
    const double signed_outcome =
        r.treatment == 1 ? r.outcome : -r.outcome;
    return signed_outcome / r.propensity;
  });
  if (nu != 0.0) {
    RequireBinary(scored, "rebalanced vnu");
    const auto inverted =
        Cumulate(scored, 1.0, [](const LoggedBanditRecord& r) {
          return V2Step(r) / r.propensity;
        });
    for (std::size_t i = 0; i < c.size(); ++i) {
      c.values[i] = (1.0 - nu) * c.values[i] + nu * inverted[i];
    }
    c.nu = nu;
  }
  return c;
}

Curve CurveIpsLocal(const ScoredDataset& scored, KernelSpec kernel) {
  RequireBinary(scored, "ips-local");
  if (kernel.half_width < 1) {
    Fail(ErrorKind::kDomain, "kernel half_width must be positive");
  }
  const std::size_t n = scored.size();
  // treated_prefix[j] = number of treated among the first j ranked units.
  std::vector<std::size_t> treated_prefix(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    treated_prefix[i + 1] = treated_prefix[i] + (scored.sorted(i).treatment == 1);
  }
  const auto prefix = PrefixCounts(scored);
  Curve c;
  c.scale = CurveScale::kAbsolute;
  c.constructor = "ips-local";
  c.kernel_half_width = kernel.half_width;
  c.xs = UnitGrid(n);
  c.values.resize(n);
  const std::size_t w = kernel.half_width;
  for (std::size_t k = 1; k <= n; ++k) {
    const std::size_t lo = k > w ? k - w : 1;
    const std::size_t hi = std::min(n, k + w);
    const double e = static_cast<double>(treated_prefix[hi] -
                                         treated_prefix[lo - 1]) /
                     static_cast<double>(hi - lo + 1);
    if (e <= 0.0 || e >= 1.0) {
      Fail(ErrorKind::kDegenerateWindow,
           "local treated fraction is " + FormatDouble(e) + " at k=" +
               std::to_string(k) + "; widen the kernel (half_width=" +
               std::to_string(w) + ")");
    }
    const auto& counts = prefix[k - 1];
    c.values[k - 1] = static_cast<double>(counts.responders_treated) / e -
                      static_cast<double>(counts.responders_control) / (1.0 - e);
  }
  return c;
}

Curve CurveIpsGlobal(const ScoredDataset& scored) {
  RequireBinary(scored, "ips-global");
  Curve c;
  c.constructor = "ips-global";
  c.xs = UnitGrid(scored.size());
  c.values = Cumulate(scored, static_cast<double>(scored.size()),
                      [](const LoggedBanditRecord& r) {
                        return (0.5 / r.propensity) * V1Step(r);
                      });
  return c;
}

std::string Table1Variant::Name() const {
  std::string name = family == Table1Family::kQini ? "qini" : "uplift";
  name += ranking == Table1Ranking::kSeparate ? "-sep" : "-joint";
  name += count == Table1Count::kAbsolute ? "-abs" : "-rel";
  return name;
}

Table1Variant Table1Variant::Parse(const std::string& name) {
  for (const auto& v : AllTable1Variants()) {
    if (v.Name() == name) return v;
  }
  Fail(ErrorKind::kDomain, "unknown curve variant '" + name + "'");
}

std::vector<Table1Variant> AllTable1Variants() {
  using F = Table1Family;
  using R = Table1Ranking;
  using C = Table1Count;
  return {
      {F::kQini, R::kSeparate, C::kAbsolute},
      {F::kUplift, R::kSeparate, C::kAbsolute},
      {F::kUplift, R::kSeparate, C::kRelative},
      {F::kQini, R::kJoint, C::kAbsolute},
      {F::kUplift, R::kJoint, C::kAbsolute},
      {F::kUplift, R::kJoint, C::kRelative},
  };
}

std::size_t GroupPrefixSize(double p, std::size_t group_size) {
  const double exact = p * static_cast<double>(group_size);
  const double nearest = std::round(exact);
  const double count =
      std::abs(exact - nearest) < 1e-9 ? nearest : std::floor(exact);
  return static_cast<std::size_t>(std::clamp(count, 0.0,
                                             static_cast<double>(group_size)));
}

Curve Table1Curve(const ScoredDataset& scored, Table1Variant variant,
                  const std::vector<double>& grid) {
  RequireBinary(scored, "table1");
  if (variant.family == Table1Family::kQini &&
      variant.count == Table1Count::kRelative) {
    Fail(ErrorKind::kDomain, "Qini curves have no relative-count variant");
  }
  const auto n = scored.size();
  const double size_t_group = static_cast<double>(scored.dataset().num_treated());
  const double size_c_group = static_cast<double>(scored.dataset().num_control());
  Curve c;
  c.constructor = "table1:" + variant.Name();
  c.scale = CurveScale::kAbsolute;
  if (variant.count == Table1Count::kRelative &&
      variant.ranking == Table1Ranking::kSeparate) {
    c.scale = CurveScale::kNormalized;
  }
  if (variant.ranking == Table1Ranking::kJoint &&
      variant.count == Table1Count::kRelative) {
    c.scale = CurveScale::kNormalized;
  }

  if (variant.ranking == Table1Ranking::kSeparate) {
    // Responders among the top m of each group, following the joint ranking
    // restricted to that group.
    std::vector<std::size_t> resp_t{0}, resp_c{0};
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = scored.sorted(i);
      auto& cum = r.treatment == 1 ? resp_t : resp_c;
      cum.push_back(cum.back() + (r.outcome == 1.0));
    }
    const auto proportions = grid.empty() ? UnitGrid(n) : grid;
    c.xs = proportions;
    c.values.resize(proportions.size());
    for (std::size_t j = 0; j < proportions.size(); ++j) {
      const double p = proportions[j];
      if (!(p > 0.0 && p <= 1.0)) {
        Fail(ErrorKind::kDomain, "separate-variant grid must lie in (0,1]");
      }
      const double rt = static_cast<double>(
          resp_t[GroupPrefixSize(p, resp_t.size() - 1)]);
      const double rc = static_cast<double>(
          resp_c[GroupPrefixSize(p, resp_c.size() - 1)]);
      double v = Curve::kAbsent;
      if (variant.family == Table1Family::kQini) {
        if (size_c_group > 0) v = rt - rc * size_t_group / size_c_group;
      } else if (variant.count == Table1Count::kAbsolute) {
        v = rt - rc;
      } else if (size_t_group > 0 && size_c_group > 0) {
        v = rt / size_t_group - rc / size_c_group;
      }
      c.values[j] = v;
    }
    return c;
  }

  const auto prefix = PrefixCounts(scored);
  c.xs = UnitGrid(n);
  c.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& cnt = prefix[k];
    const double nt = static_cast<double>(cnt.n_treated);
    const double nc = static_cast<double>(cnt.n_control);
    const double rt = static_cast<double>(cnt.responders_treated);
    const double rc = static_cast<double>(cnt.responders_control);
    double v = Curve::kAbsent;
    if (variant.family == Table1Family::kQini) {
      if (cnt.n_control > 0) v = rt - rc * nt / nc;
    } else if (variant.count == Table1Count::kAbsolute) {
      if (cnt.n_treated > 0 && cnt.n_control > 0) {
        v = (rt / nt - rc / nc) * (nt + nc);
      }
    } else if (size_t_group > 0 && size_c_group > 0) {
      v = rt / size_t_group - rc / size_c_group;
    }
    c.values[k] = v;
  }
  return c;
}

Curve InterpolateIsoUplift(const Curve& curve, const ScoredDataset& scored) {
  if (curve.size() != scored.size()) {
    Fail(ErrorKind::kDimension,
         "curve has " + std::to_string(curve.size()) + " points but dataset " +
             std::to_string(scored.size()) + " records");
  }
  Curve out = curve;
  out.interpolated = true;
  double left_x = 0.0;
  double left_v = 0.0;
  for (const auto& group : scored.iso_groups()) {
    const std::size_t last = group.end - 1;
    const double right_x = curve.xs[last];
    const double right_v = curve.values[last];
    for (std::size_t i = group.begin; i < last; ++i) {
      if (std::isnan(right_v) || right_x == left_x) {
        out.values[i] = right_v;
        continue;
      }
      const double t = (curve.xs[i] - left_x) / (right_x - left_x);
      out.values[i] = left_v + t * (right_v - left_v);
    }
    if (!std::isnan(right_v)) {
      left_x = right_x;
      left_v = right_v;
    }
  }
  return out;
}

Curve ScaleValues(const Curve& curve, double factor) {
  Curve out = curve;
  for (auto& v : out.values) v *= factor;
  return out;
}

Rational Rational::operator+(const Rational& other) const {
  return Reduce(static_cast<I128>(num) * other.den +
                    static_cast<I128>(other.num) * den,
                static_cast<I128>(den) * other.den);
}

Rational Rational::operator*(const Rational& other) const {
  return Reduce(static_cast<I128>(num) * other.num,
                static_cast<I128>(den) * other.den);
}

ScalingChecksums ComputeScalingChecksums(const LoggedBanditDataset& dataset) {
  const auto treated = static_cast<std::int64_t>(dataset.num_treated());
  const auto control = static_cast<std::int64_t>(dataset.num_control());
  if (treated == 0 || control == 0) {
    Fail(ErrorKind::kDomain,
         "scaling checksums need both treated and control units");
  }
  const Rational total{treated + control, 1};
  const Rational half{1, 2};
  ScalingChecksums sums;
  sums.y_axis = Rational{0, 1};
  sums.x_axis = Rational{0, 1};
  for (const auto& r : dataset.records()) {
    const Rational factor = r.treatment == 1 ? Rational{1, treated}
                                             : Rational{1, control};
    sums.y_axis = sums.y_axis + factor * total;
    sums.x_axis = sums.x_axis + half * factor;
  }
  sums.y_axis_expected = Rational{2, 1} * total;
  return sums;
}

nlohmann::json CurveHeaderJson(const Curve& curve) {
  nlohmann::json j{{"constructor", curve.constructor},
                   {"scale", CurveScaleName(curve.scale)},
                   {"N", curve.size()},
                   {"interpolated", curve.interpolated}};
  if (curve.nu) j["nu"] = *curve.nu;
  if (curve.kernel_half_width) {
    j["kernel"] = {{"kind", "boxcar"}, {"half_width", *curve.kernel_half_width}};
  }
  return j;
}

void WriteCurveCsv(std::ostream& out, const Curve& curve) {
  out << "k,x,value\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << (i + 1) << ',' << FormatDouble(curve.xs[i]) << ',';
    if (!curve.absent(i)) out << FormatDouble(curve.values[i]);
    out << '\n';
  }
}

}  // namespace uplift
