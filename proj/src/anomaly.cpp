#include "fraudlens/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <unordered_set>

#include "csv.hpp"
#include "fraudlens/error.hpp"
#include "fraudlens/random.hpp"

namespace fraudlens {

FeatureMatrix FeatureMatrix::from_table(const FeatureTable& table,
                                        std::span<const std::string> names) {
  FeatureMatrix m;
  m.n_rows_ = table.size();
  for (const std::string& name : names) m.add_column(name, table.column(name));
  return m;
}

void FeatureMatrix::add_column(std::string name, std::vector<double> values) {
  if (names_.empty() && columns_.empty()) {
    n_rows_ = values.size();
  } else if (values.size() != n_rows_) {
    throw Error(ErrorKind::LengthMismatch,
                "column '" + name + "' has " + std::to_string(values.size()) +
                    " rows, expected " + std::to_string(n_rows_));
  }
  if (has(name)) throw Error(ErrorKind::InvalidParams, "duplicate column '" + name + "'");
  names_.push_back(std::move(name));
  columns_.push_back(std::move(values));
}

bool FeatureMatrix::has(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<double>& FeatureMatrix::column(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) {
    throw Error(ErrorKind::UnknownFeature, "'" + std::string(name) + "'");
  }
  return columns_[static_cast<std::size_t>(it - names_.begin())];
}

Matrix FeatureMatrix::select(std::span<const std::string> names) const {
  Matrix m(n_rows_, names.size());
  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::vector<double>& col = column(names[c]);
    for (std::size_t r = 0; r < n_rows_; ++r) m.at(r, c) = col[r];
  }
  return m;
}

namespace {

constexpr std::size_t kPathTableSize = 4097;

// c(n) for n < kPathTableSize from cumulative harmonic numbers.
const std::vector<double>& path_length_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kPathTableSize, 0.0);
    double harmonic = 0.0;  // H(n - 1)
    for (std::size_t n = 2; n < kPathTableSize; ++n) {
      harmonic += 1.0 / static_cast<double>(n - 1);
      const double m = static_cast<double>(n);
      t[n] = n == 2 ? 1.0 : 2.0 * harmonic - 2.0 * (m - 1.0) / m;
    }
    return t;
  }();
  return table;
}

}  // namespace

double average_path_length(std::size_t n) {
  if (n < kPathTableSize) return path_length_table()[n];
  double harmonic = 0.0;
  for (std::size_t i = 1; i < n; ++i) harmonic += 1.0 / static_cast<double>(i);
  const double m = static_cast<double>(n);
  return 2.0 * harmonic - 2.0 * (m - 1.0) / m;
}

double IsolationTree::path_length(std::span<const double> row) const {
  const IsolationNode* node = &nodes[0];
  while (node->feature >= 0) {
    node = &nodes[row[node->feature] < node->split ? node->left : node->right];
  }
  return static_cast<double>(node->depth) + average_path_length(node->size);
}

std::uint32_t IsolationTree::depth() const {
  std::uint32_t d = 0;
  for (const IsolationNode& n : nodes) d = std::max(d, n.depth);
  return d;
}

namespace {

// Floyd's sampling: k distinct indices from [0, n), returned sorted.
std::vector<std::uint32_t> sample_without_replacement(SplitMix64& rng, std::size_t n,
                                                      std::size_t k) {
  std::unordered_set<std::uint32_t> chosen;
  chosen.reserve(k * 2);
  std::vector<std::uint32_t> out;
  out.reserve(k);
  for (std::size_t j = n - k; j < n; ++j) {
    auto t = static_cast<std::uint32_t>(rng.below(j + 1));
    if (!chosen.insert(t).second) {
      t = static_cast<std::uint32_t>(j);
      chosen.insert(t);
    }
    out.push_back(t);
  }
  std::sort(out.begin(), out.end());
  return out;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& data, std::uint32_t max_depth, SplitMix64& rng)
      : data_(data), max_depth_(max_depth), rng_(rng) {}

  IsolationTree build(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    tree_.nodes.clear();
    grow(0, rows_.size(), 0);
    return std::move(tree_);
  }

 private:
  std::uint32_t grow(std::size_t lo, std::size_t hi, std::uint32_t depth) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    tree_.nodes.push_back({});
    tree_.nodes[id].depth = depth;
    tree_.nodes[id].size = static_cast<std::uint32_t>(hi - lo);
    if (hi - lo <= 1 || depth >= max_depth_) return id;

    // Candidate features are those with a non-empty range at this node.
    std::vector<std::uint32_t> splittable;
    std::vector<double> mins, maxs;
    for (std::uint32_t c = 0; c < data_.n_cols; ++c) {
      double mn = data_.at(rows_[lo], c), mx = mn;
      for (std::size_t i = lo + 1; i < hi; ++i) {
        const double v = data_.at(rows_[i], c);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      if (mn < mx) {
        splittable.push_back(c);
        mins.push_back(mn);
        maxs.push_back(mx);
      }
    }
    if (splittable.empty()) return id;

    // Exactly one draw for the feature, even with a single candidate.
    const auto pick = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(rng_.next()) * splittable.size()) >> 64);
    const std::uint32_t feature = splittable[pick];
    double split = rng_.uniform(mins[pick], maxs[pick]);
    if (split <= mins[pick]) split = std::nextafter(mins[pick], maxs[pick]);

    const auto mid_it =
        std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(lo),
                       rows_.begin() + static_cast<std::ptrdiff_t>(hi),
                       [&](std::uint32_t r) { return data_.at(r, feature) < split; });
    const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());

    const std::uint32_t left = grow(lo, mid, depth + 1);
    const std::uint32_t right = grow(mid, hi, depth + 1);
    IsolationNode& node = tree_.nodes[id];
    node.feature = static_cast<std::int32_t>(feature);
    node.split = split;
    node.left = left;
    node.right = right;
    node.size = 0;
    return id;
  }

  const Matrix& data_;
  std::uint32_t max_depth_;
  SplitMix64& rng_;
  std::vector<std::uint32_t> rows_;
  IsolationTree tree_;
};

void check_lengths(std::size_t scores, std::size_t labels) {
  if (scores != labels) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(scores) + " scores vs " +
                                               std::to_string(labels) + " labels");
  }
}

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

IsolationForestModel IsolationForestModel::fit(const Matrix& data,
                                               const IsolationForestParams& params) {
  if (data.n_rows == 0 || data.n_cols == 0) {
    throw Error(ErrorKind::EmptyMatrix, "cannot fit on an empty matrix");
  }
  if (params.n_trees == 0) throw Error(ErrorKind::InvalidParams, "n_trees must be >= 1");
  if (params.subsample_size < 2 || params.subsample_size > data.n_rows) {
    throw Error(ErrorKind::InvalidParams,
                "subsample_size must lie in [2, " + std::to_string(data.n_rows) + "], got " +
                    std::to_string(params.subsample_size));
  }
  IsolationForestModel model;
  model.n_features_ = data.n_cols;
  model.subsample_size_ = params.subsample_size;
  model.max_depth_ = static_cast<std::uint32_t>(
      std::ceil(std::log2(static_cast<double>(params.subsample_size))));
  model.trees_.reserve(params.n_trees);
  for (std::size_t t = 0; t < params.n_trees; ++t) {
    SplitMix64 rng(derive_seed(params.seed, t));
    TreeBuilder builder(data, model.max_depth_, rng);
    model.trees_.push_back(
        builder.build(sample_without_replacement(rng, data.n_rows, params.subsample_size)));
  }
  return model;
}

double IsolationForestModel::score(std::span<const double> row) const {
  if (row.size() != n_features_) {
    throw Error(ErrorKind::DimensionMismatch, "row has " + std::to_string(row.size()) +
                                                  " values, model expects " +
                                                  std::to_string(n_features_));
  }
  double total = 0.0;
  for (const IsolationTree& tree : trees_) total += tree.path_length(row);
  const double mean = total / static_cast<double>(trees_.size());
  return std::exp2(-mean / average_path_length(subsample_size_));
}

std::vector<double> IsolationForestModel::score_all(const Matrix& data) const {
  std::vector<double> out;
  out.reserve(data.n_rows);
  for (std::size_t r = 0; r < data.n_rows; ++r) out.push_back(score(data.row(r)));
  return out;
}

double average_precision(std::span<const double> scores,
                         std::span<const std::uint8_t> labels) {
  check_lengths(scores.size(), labels.size());
  const std::vector<std::size_t> order = rank_order(scores);
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (labels[order[r]] != 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) throw Error(ErrorKind::NoPositives, "labels contain no positives");
  return sum / static_cast<double>(hits);
}

double precision_at_k(std::span<const double> scores, std::span<const std::uint8_t> labels,
                      std::size_t k) {
  check_lengths(scores.size(), labels.size());
  if (k == 0) throw Error(ErrorKind::InvalidParams, "k must be >= 1");
  if (k > scores.size()) {
    throw Error(ErrorKind::KTooLarge,
                "k=" + std::to_string(k) + " exceeds " + std::to_string(scores.size()));
  }
  const std::vector<std::size_t> order = rank_order(scores);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < k; ++r) hits += labels[order[r]] != 0 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

RankingMetrics evaluate_ranking(std::span<const double> scores,
                                std::span<const std::uint8_t> labels,
                                std::span<const std::size_t> ks) {
  RankingMetrics m;
  m.average_precision = average_precision(scores, labels);
  for (const std::size_t k : ks) {
    if (k >= 1 && k <= scores.size()) m.precision_at_k[k] = precision_at_k(scores, labels, k);
  }
  return m;
}

namespace {

std::size_t count_positives(std::span<const std::uint8_t> labels) {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](std::uint8_t l) { return l != 0; }));
}

// Stratified fold id per row: positives and negatives are shuffled
// separately and dealt round-robin.
std::vector<std::size_t> assign_folds(std::span<const std::uint8_t> labels,
                                      std::size_t n_folds, std::uint64_t seed) {
  std::vector<std::size_t> fold(labels.size());
  SplitMix64 rng(derive_seed(seed, 0xF01D));
  for (const std::uint8_t cls : {std::uint8_t{1}, std::uint8_t{0}}) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if ((labels[i] != 0 ? 1 : 0) == cls) rows.push_back(i);
    }
    for (std::size_t i = rows.size(); i > 1; --i) {
      std::swap(rows[i - 1], rows[rng.below(i)]);
    }
    for (std::size_t i = 0; i < rows.size(); ++i) fold[rows[i]] = i % n_folds;
  }
  return fold;
}

double cv_ap_with_folds(const FeatureMatrix& features, std::span<const std::uint8_t> labels,
                        std::span<const std::string> names, const SelectionOptions& options,
                        std::span<const std::size_t> fold) {
  const Matrix all = features.select(names);
  std::vector<double> pooled(all.n_rows, 0.0);
  for (std::size_t f = 0; f < options.n_folds; ++f) {
    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t r = 0; r < all.n_rows; ++r) {
      (fold[r] == f ? test_rows : train_rows).push_back(r);
    }
    if (test_rows.empty()) continue;
    Matrix train(train_rows.size(), all.n_cols);
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
      for (std::size_t c = 0; c < all.n_cols; ++c) train.at(i, c) = all.at(train_rows[i], c);
    }
    IsolationForestParams params = options.forest;
    params.subsample_size = std::min(params.subsample_size, train.n_rows);
    params.seed = derive_seed(options.forest.seed, f);
    const IsolationForestModel model = IsolationForestModel::fit(train, params);
    for (const std::size_t r : test_rows) pooled[r] = model.score(all.row(r));
  }
  return average_precision(pooled, labels);
}

void check_selection_inputs(const FeatureMatrix& features,
                            std::span<const std::uint8_t> labels,
                            const SelectionOptions& options) {
  check_lengths(features.n_rows(), labels.size());
  if (count_positives(labels) == 0) {
    throw Error(ErrorKind::NoPositives, "labels contain no positives");
  }
  if (options.n_folds < 2) throw Error(ErrorKind::InvalidParams, "n_folds must be >= 2");
}

}  // namespace

double cross_validated_ap(const FeatureMatrix& features, std::span<const std::uint8_t> labels,
                          std::span<const std::string> names,
                          const SelectionOptions& options) {
  check_selection_inputs(features, labels, options);
  const std::vector<std::size_t> fold =
      assign_folds(labels, options.n_folds, options.forest.seed);
  return cv_ap_with_folds(features, labels, names, options, fold);
}

SelectionResult forward_select(const FeatureMatrix& features,
                               std::span<const std::uint8_t> labels,
                               std::span<const std::string> candidates, std::size_t max_k,
                               const SelectionOptions& options) {
  check_selection_inputs(features, labels, options);
  if (max_k > candidates.size()) {
    throw Error(ErrorKind::InvalidParams, "max_k=" + std::to_string(max_k) + " exceeds " +
                                              std::to_string(candidates.size()) +
                                              " candidates");
  }
  for (const std::string& c : candidates) features.column(c);

  std::vector<std::string> remaining(candidates.begin(), candidates.end());
  std::sort(remaining.begin(), remaining.end());
  remaining.erase(std::unique(remaining.begin(), remaining.end()), remaining.end());
  const std::vector<std::size_t> fold =
      assign_folds(labels, options.n_folds, options.forest.seed);

  SelectionResult result;
  std::vector<std::string> selected;
  double current_ap = 0.0;
  while (selected.size() < max_k && !remaining.empty()) {
    std::size_t best = 0;
    double best_ap = -1.0;
    // `remaining` is sorted, so the strict comparison keeps the smaller name.
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      std::vector<std::string> trial = selected;
      trial.push_back(remaining[i]);
      const double ap = cv_ap_with_folds(features, labels, trial, options, fold);
      if (ap > best_ap) {
        best_ap = ap;
        best = i;
      }
    }
    SelectionStep step{remaining[best], best_ap};
    if (!selected.empty() && best_ap - current_ap <= options.epsilon) {
      result.rejected = step;
      break;
    }
    selected.push_back(step.feature);
    result.steps.push_back(std::move(step));
    current_ap = best_ap;
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return result;
}

std::map<std::string, std::uint8_t> read_binary_labels(std::istream& in) {
  std::map<std::string, std::uint8_t> out;
  std::string line;
  std::vector<std::string> fields;
  bool header = true;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    ++row;
    csv::split(line, fields);
    if (fields.size() < 2) {
      throw Error(ErrorKind::MalformedRow, "row " + std::to_string(row) + ": expected 2 fields");
    }
    const std::string& v = fields[1];
    std::uint8_t label = 0;
    if (v == "fraud" || v == "1" || v == "double_machine_gun" || v == "penny_hunter" ||
        v == "bursty_poster") {
      label = 1;
    } else if (!(v == "honest" || v == "0" || v == "unlabeled" || v.empty())) {
      throw Error(ErrorKind::MalformedRow,
                  "row " + std::to_string(row) + ": unknown label '" + v + "'");
    }
    out[fields[0]] = label;
  }
  return out;
}

std::vector<std::uint8_t> align_labels(const FeatureTable& table,
                                       const std::map<std::string, std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  out.reserve(table.size());
  for (const CardFeatures& f : table.rows()) {
    const auto it = labels.find(f.card_id);
    out.push_back(it == labels.end() ? 0 : it->second);
  }
  return out;
}

}  // namespace fraudlens
