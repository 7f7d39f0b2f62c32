#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fraudlens/features.hpp"

namespace fraudlens {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : n_rows(rows), n_cols(cols), values(rows * cols, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return values[r * n_cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * n_cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * n_cols, n_cols);
  }
};

/// Named numeric columns of equal length; the input to feature selection.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  /// Columns of `table` named by `names`. Throws Error{UnknownFeature}.
  static FeatureMatrix from_table(const FeatureTable& table,
                                  std::span<const std::string> names);

  /// Throws Error{LengthMismatch} on a length change and Error{InvalidParams}
  /// on a repeated name.
  void add_column(std::string name, std::vector<double> values);

  std::size_t n_rows() const noexcept { return n_rows_; }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::vector<double>& column(std::string_view name) const;
  bool has(std::string_view name) const;

  /// Row-major matrix of the named columns, in the given order.
  Matrix select(std::span<const std::string> names) const;

 private:
  std::size_t n_rows_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> columns_;
};

inline const std::vector<std::string> kDefaultScoringFeatures = {
    "n_txns", "median_amount_cents", "n_distinct_amounts", "n_distinct_iat"};

/// Average path length of an unsuccessful BST search over n points:
/// c(n) = 2 H(n-1) - 2 (n-1) / n, with c(2) = 1 and c(n <= 1) = 0.
double average_path_length(std::size_t n);

struct IsolationNode {
  std::int32_t feature = -1;  // -1 marks an external node
  double split = 0.0;         // left child takes x < split
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t size = 0;     // training points reaching an external node
  std::uint32_t depth = 0;
};

struct IsolationTree {
  std::vector<IsolationNode> nodes;  // nodes[0] is the root

  /// Depth of the external node reached by `row` plus c(size) there.
  double path_length(std::span<const double> row) const;
  std::uint32_t depth() const;
};

struct IsolationForestParams {
  std::size_t n_trees = 100;
  std::size_t subsample_size = 256;
  std::uint64_t seed = 0;
};

class IsolationForestModel {
 public:
  /// Each tree draws its subsample without replacement with a seed derived
  /// from (seed, tree index), so trees are independent of fitting order.
  /// Throws Error{EmptyMatrix} for no rows or columns, Error{InvalidParams}
  /// unless n_trees >= 1 and 2 <= subsample_size <= n_rows.
  static IsolationForestModel fit(const Matrix& data, const IsolationForestParams& params);

  /// 2^(-E[h(x)] / c(subsample_size)). Throws Error{DimensionMismatch}.
  double score(std::span<const double> row) const;
  std::vector<double> score_all(const Matrix& data) const;

  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t subsample_size() const noexcept { return subsample_size_; }
  std::uint32_t max_depth() const noexcept { return max_depth_; }
  const std::vector<IsolationTree>& trees() const noexcept { return trees_; }

 private:
  std::size_t n_features_ = 0;
  std::size_t subsample_size_ = 0;
  std::uint32_t max_depth_ = 0;
  std::vector<IsolationTree> trees_;
};

/// Labels are 0/1 bytes (1 = fraud).
///
/// Mean, over positives in descending-score order, of the precision at each
/// positive's rank. Equal scores keep input order. Throws
/// Error{LengthMismatch | NoPositives}.
double average_precision(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Share of positives among the top k. Throws Error{LengthMismatch},
/// Error{KTooLarge} for k > size and Error{InvalidParams} for k = 0.
double precision_at_k(std::span<const double> scores, std::span<const std::uint8_t> labels,
                      std::size_t k);

struct RankingMetrics {
  double average_precision = 0.0;
  std::map<std::size_t, double> precision_at_k;
};

/// Prec@k for every k in `ks` that does not exceed the list length.
RankingMetrics evaluate_ranking(std::span<const double> scores,
                                std::span<const std::uint8_t> labels,
                                std::span<const std::size_t> ks);

struct SelectionOptions {
  IsolationForestParams forest;
  std::size_t n_folds = 3;
  double epsilon = 0.001;
};

struct SelectionStep {
  std::string feature;
  double average_precision = 0.0;
};

struct SelectionResult {
  std::vector<SelectionStep> steps;
  /// Best candidate of the step that failed to gain more than epsilon.
  std::optional<SelectionStep> rejected;
};

/// Cross-validated AP of an isolation forest on `names`: rows are split into
/// n_folds stratified folds, each fold is scored by a forest fit on the
/// others, and AP is taken over the pooled held-out scores.
double cross_validated_ap(const FeatureMatrix& features, std::span<const std::uint8_t> labels,
                          std::span<const std::string> names,
                          const SelectionOptions& options = {});

/// Greedy forward selection. Each step adds the candidate with the highest
/// cross-validated AP (ties go to the smaller name); selection stops at
/// max_k or when the best gain is <= epsilon. Throws Error{NoPositives},
/// Error{LengthMismatch}, Error{UnknownFeature}, Error{InvalidParams} when
/// max_k exceeds the candidate count.
SelectionResult forward_select(const FeatureMatrix& features, std::span<const std::uint8_t> labels,
                               std::span<const std::string> candidates, std::size_t max_k,
                               const SelectionOptions& options = {});

/// Reads `card_id,<label>` CSV with a header row. "fraud", "1" and the
/// three behavior names count as positive; "honest", "0", "unlabeled" and
/// blank as negative. Throws Error{MalformedRow} on anything else.
std::map<std::string, std::uint8_t> read_binary_labels(std::istream& in);

/// Label per table row, in table order; cards absent from `labels` are 0.
std::vector<std::uint8_t> align_labels(const FeatureTable& table,
                                       const std::map<std::string, std::uint8_t>& labels);

}  // namespace fraudlens
