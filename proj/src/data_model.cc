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

#include "uplift/data_model.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string_view>

#include "uplift/errors.h"
#include "uplift/text.h"

namespace uplift {
namespace {

std::vector<std::string> SplitCsvLine(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      break;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

bool ParseDouble(std::string_view text, double* value) {
  text = Trim(text);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, *value);
  return result.ec == std::errc() && result.ptr == end;
}

bool ParseInt(std::string_view text, std::int64_t* value) {
  text = Trim(text);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  const auto result = std::from_chars(text.data(), end, *value);
  return result.ec == std::errc() && result.ptr == end;
}

// A features cell is a real vector when every `|`-separated token parses as a
// real, otherwise it is a label.
Features ParseFeatures(std::string_view text) {
  text = Trim(text);
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto bar = text.find('|', start);
    const auto token = text.substr(
        start, bar == std::string_view::npos ? std::string_view::npos
                                             : bar - start);
    double v = 0.0;
    if (!ParseDouble(token, &v)) return std::string(text);
    values.push_back(v);
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return values;
}

[[noreturn]] void ParseError(std::size_t line, const std::string& what) {
  Fail(ErrorKind::kParse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string FeaturesToString(const Features& features) {
  if (const auto* label = std::get_if<std::string>(&features)) return *label;
  const auto& values = std::get<std::vector<double>>(features);
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += '|';
    out += FormatDouble(values[i]);
  }
  return out;
}

void ValidateRecord(const LoggedBanditRecord& record) {
  if (record.treatment != 0 && record.treatment != 1) {
    Fail(ErrorKind::kDomain, "unit " + std::to_string(record.unit_id) +
                                 ": treatment must be 0 or 1");
  }
  if (!std::isfinite(record.outcome)) {
    Fail(ErrorKind::kDomain,
         "unit " + std::to_string(record.unit_id) + ": non-finite outcome");
  }
  // Overlap: 0 < q < 1.
  if (!(record.propensity > 0.0 && record.propensity < 1.0)) {
    Fail(ErrorKind::kOverlapViolation,
         "unit " + std::to_string(record.unit_id) +
             ": propensity must lie strictly inside (0,1) (overlap "
             "assumption violated)");
  }
}

LoggedBanditDataset::LoggedBanditDataset(
    std::vector<LoggedBanditRecord> records,
    std::optional<std::vector<double>> scores)
    : records_(std::move(records)), embedded_scores_(std::move(scores)) {
  if (embedded_scores_ && embedded_scores_->size() != records_.size()) {
    Fail(ErrorKind::kDimension, "score column length differs from records");
  }
  for (const auto& record : records_) {
    ValidateRecord(record);
    if (record.outcome != 0.0 && record.outcome != 1.0) {
      binary_outcome_ = false;
    }
    num_treated_ += record.treatment == 1;
  }
}

LoggedBanditDataset LoadDataset(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) ParseError(1, "missing header");
  ++line_no;
  const auto header = SplitCsvLine(Trim(line));
  static const char* kRequired[] = {"unit_id", "features", "treatment",
                                    "outcome", "propensity"};
  if (header.size() < 5 || header.size() > 6) {
    ParseError(line_no, "expected 5 or 6 columns in header");
  }
  for (std::size_t i = 0; i < 5; ++i) {
    if (Trim(header[i]) != kRequired[i]) {
      ParseError(line_no, std::string("expected column '") + kRequired[i] +
                              "' at position " + std::to_string(i + 1));
    }
  }
  const bool has_score = header.size() == 6;
  if (has_score && Trim(header[5]) != "score") {
    ParseError(line_no, "sixth column must be 'score'");
  }

  std::vector<LoggedBanditRecord> records;
  std::vector<double> scores;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitCsvLine(Trim(line));
    if (fields.size() != header.size()) {
      ParseError(line_no, "expected " + std::to_string(header.size()) +
                              " fields, found " +
                              std::to_string(fields.size()));
    }
    LoggedBanditRecord record;
    std::int64_t treatment = 0;
    if (!ParseInt(fields[0], &record.unit_id)) ParseError(line_no, "bad unit_id");
    record.features = ParseFeatures(fields[1]);
    if (!ParseInt(fields[2], &treatment)) ParseError(line_no, "bad treatment");
    if (!ParseDouble(fields[3], &record.outcome)) {
      ParseError(line_no, "bad outcome");
    }
    if (!ParseDouble(fields[4], &record.propensity)) {
      ParseError(line_no, "bad propensity");
    }
    if (treatment != 0 && treatment != 1) {
      Fail(ErrorKind::kDomain, "line " + std::to_string(line_no) +
                                   ": treatment must be 0 or 1");
    }
    record.treatment = static_cast<int>(treatment);
    try {
      ValidateRecord(record);
    } catch (const UpliftError& e) {
      Fail(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (has_score) {
      double score = 0.0;
      if (!ParseDouble(fields[5], &score)) ParseError(line_no, "bad score");
      scores.push_back(score);
    }
    records.push_back(std::move(record));
  }
  if (has_score) return LoggedBanditDataset(std::move(records), std::move(scores));
  return LoggedBanditDataset(std::move(records));
}

LoggedBanditDataset LoadDatasetFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  return LoadDataset(in);
}

void WriteDataset(std::ostream& out, const LoggedBanditDataset& dataset,
                  std::optional<std::span<const double>> scores) {
  if (scores && scores->size() != dataset.size()) {
    Fail(ErrorKind::kDimension, "scores length differs from dataset");
  }
  out << "unit_id,features,treatment,outcome,propensity";
  if (scores) out << ",score";
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& r = dataset[i];
    out << r.unit_id << ',' << FeaturesToString(r.features) << ','
        << r.treatment << ',' << FormatDouble(r.outcome) << ','
        << FormatDouble(r.propensity);
    if (scores) out << ',' << FormatDouble((*scores)[i]);
    out << '\n';
  }
}

ScoredDataset::ScoredDataset(std::shared_ptr<const LoggedBanditDataset> dataset,
                             std::vector<double> scores)
    : dataset_(std::move(dataset)), scores_(std::move(scores)) {
  if (scores_.size() != dataset_->size()) {
    Fail(ErrorKind::kDimension,
         "scores length " + std::to_string(scores_.size()) +
             " differs from dataset length " +
             std::to_string(dataset_->size()));
  }
  for (const double s : scores_) {
    if (!std::isfinite(s)) Fail(ErrorKind::kDomain, "non-finite score");
  }
  order_.resize(scores_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [this](std::size_t a, std::size_t b) {
                     return scores_[a] > scores_[b];
                   });
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= order_.size(); ++i) {
    if (i == order_.size() || scores_[order_[i]] != scores_[order_[begin]]) {
      iso_groups_.push_back({begin, i});
      begin = i;
    }
  }
}

std::vector<std::size_t> ScoredDataset::last_positions() const {
  std::vector<std::size_t> last;
  last.reserve(iso_groups_.size());
  for (const auto& group : iso_groups_) last.push_back(group.end);
  return last;
}

ScoredDataset RankByScore(const LoggedBanditDataset& dataset,
                          std::vector<double> scores) {
  return ScoredDataset(std::make_shared<const LoggedBanditDataset>(dataset),
                       std::move(scores));
}

ScoredDataset RankByScore(std::shared_ptr<const LoggedBanditDataset> dataset,
                          std::vector<double> scores) {
  return ScoredDataset(std::move(dataset), std::move(scores));
}

TopKCounts TopKCountsAt(const ScoredDataset& scored, std::size_t k) {
  if (k < 1 || k > scored.size()) {
    Fail(ErrorKind::kBounds, "k=" + std::to_string(k) + " outside [1, " +
                                 std::to_string(scored.size()) + "]");
  }
  TopKCounts counts;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& r = scored.sorted(i);
    const bool responder = r.outcome == 1.0;
    if (r.treatment == 1) {
      ++counts.n_treated;
      counts.responders_treated += responder;
    } else {
      ++counts.n_control;
      counts.responders_control += responder;
    }
  }
  return counts;
}

std::vector<TopKCounts> PrefixCounts(const ScoredDataset& scored) {
  std::vector<TopKCounts> prefix;
  prefix.reserve(scored.size());
  TopKCounts running;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    const auto& r = scored.sorted(i);
    const bool responder = r.outcome == 1.0;
    if (r.treatment == 1) {
      ++running.n_treated;
      running.responders_treated += responder;
    } else {
      ++running.n_control;
      running.responders_control += responder;
    }
    prefix.push_back(running);
  }
  return prefix;
}

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kOverlapViolation: return "overlap violation";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kDimension: return "dimension error";
    case ErrorKind::kBounds: return "bounds error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kDegenerateWindow: return "degenerate window";
    case ErrorKind::kUndefined: return "undefined value";
    case ErrorKind::kIo: return "I/O error";
  }
  return "error";
}

}  // namespace uplift
