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

#ifndef UPLIFT_DATA_MODEL_H_
#define UPLIFT_DATA_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace uplift {

// Features are opaque to every metric: either a categorical group label or a
// dense real vector.
using Features = std::variant<std::string, std::vector<double>>;

std::string FeaturesToString(const Features& features);

// One logged-bandit observation (x, t, y, q) where q = pi(t | x) is the
// probability of the treatment that was actually logged.
struct LoggedBanditRecord {
  std::int64_t unit_id = 0;
  Features features;
  int treatment = 0;
  double outcome = 0.0;
  double propensity = 0.5;
};

// Both potential outcomes of one unit. Only available for synthetic data.
struct FullFeedbackRecord {
  std::int64_t unit_id = 0;
  Features features;
  int outcome_treated = 0;
  int outcome_control = 0;

  double true_ite() const { return outcome_treated - outcome_control; }
};

class LoggedBanditDataset {
 public:
  LoggedBanditDataset() = default;
  // Validates every record; throws UpliftError on overlap or domain
  // violations.
  explicit LoggedBanditDataset(std::vector<LoggedBanditRecord> records,
                               std::optional<std::vector<double>> scores =
                                   std::nullopt);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const LoggedBanditRecord& operator[](std::size_t i) const {
    return records_[i];
  }
  std::span<const LoggedBanditRecord> records() const { return records_; }

  bool binary_outcome() const { return binary_outcome_; }
  std::size_t num_treated() const { return num_treated_; }
  std::size_t num_control() const { return size() - num_treated_; }

  // Scores read from an optional `score` column.
  const std::optional<std::vector<double>>& embedded_scores() const {
    return embedded_scores_;
  }

 private:
  std::vector<LoggedBanditRecord> records_;
  std::optional<std::vector<double>> embedded_scores_;
  bool binary_outcome_ = true;
  std::size_t num_treated_ = 0;
};

using FullFeedbackDataset = std::vector<FullFeedbackRecord>;

// Validates a single record against the overlap and domain rules.
void ValidateRecord(const LoggedBanditRecord& record);

// Reads the CSV schema
//   unit_id,features,treatment,outcome,propensity[,score]
// with a mandatory header line. `features` is a label or `|`-joined reals.
LoggedBanditDataset LoadDataset(std::istream& in);
LoggedBanditDataset LoadDatasetFile(const std::string& path);

// Writes the same schema; the score column is emitted when `scores` is set.
void WriteDataset(std::ostream& out, const LoggedBanditDataset& dataset,
                  std::optional<std::span<const double>> scores);

// Half-open range [begin, end) of 0-based sorted positions sharing one score.
struct IsoGroup {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Dataset joined with per-record scores and the descending-score permutation.
//
// Positions are 0-based in memory: order()[i] is the original index of the
// record ranked (i + 1)-th. Ties keep ascending original index.
class ScoredDataset {
 public:
  ScoredDataset(std::shared_ptr<const LoggedBanditDataset> dataset,
                std::vector<double> scores);

  std::size_t size() const { return order_.size(); }
  const LoggedBanditDataset& dataset() const { return *dataset_; }
  std::span<const double> scores() const { return scores_; }
  std::span<const std::size_t> order() const { return order_; }
  std::span<const IsoGroup> iso_groups() const { return iso_groups_; }

  // 1-based ranks k that end an iso-group (the set L); always contains N.
  std::vector<std::size_t> last_positions() const;

  // Record at 0-based sorted position i.
  const LoggedBanditRecord& sorted(std::size_t i) const {
    return (*dataset_)[order_[i]];
  }
  double sorted_score(std::size_t i) const { return scores_[order_[i]]; }

 private:
  std::shared_ptr<const LoggedBanditDataset> dataset_;
  std::vector<double> scores_;
  std::vector<std::size_t> order_;
  std::vector<IsoGroup> iso_groups_;
};

// Throws on length mismatch or non-finite scores. The first overload copies
// the dataset; the second shares it.
ScoredDataset RankByScore(const LoggedBanditDataset& dataset,
                          std::vector<double> scores);
ScoredDataset RankByScore(std::shared_ptr<const LoggedBanditDataset> dataset,
                          std::vector<double> scores);

struct TopKCounts {
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  std::size_t responders_treated = 0;
  std::size_t responders_control = 0;

  friend bool operator==(const TopKCounts&, const TopKCounts&) = default;
};

// Counts over the first k ranked records, 1 <= k <= N.
TopKCounts TopKCountsAt(const ScoredDataset& scored, std::size_t k);

// All prefixes at once: element k - 1 holds the counts for the top k.
std::vector<TopKCounts> PrefixCounts(const ScoredDataset& scored);

}  // namespace uplift

#endif  // UPLIFT_DATA_MODEL_H_
