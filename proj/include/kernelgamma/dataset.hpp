#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kernelgamma/error.hpp"

namespace kernelgamma {

/// Read-only view of one feature vector.
using PointView = std::span<const double>;

/// One labeled point. `label` is the contiguous 0-based class id assigned at
/// load time, not the label that appeared in the input file.
struct Sample {
  std::vector<double> features;
  int label = 0;
};

/// Per-feature affine scaling fitted on training data: feature j maps
/// x -> lo + (x - feature_min[j]) * (hi - lo) / (feature_max[j] - feature_min[j]).
struct ScalingSpec {
  std::vector<double> feature_min;
  std::vector<double> feature_max;
  double lo = 0.0;
  double hi = 1.0;

  std::size_t dim() const noexcept { return feature_min.size(); }
};

/// Immutable labeled dataset with a per-class index.
///
/// Class ids are dense and 0-based, assigned in order of first appearance in
/// the source; the label values that actually appeared are kept in
/// `original_labels()` so predictions can be reported in the caller's
/// vocabulary.
class Dataset {
 public:
  Dataset(std::vector<Sample> samples, std::vector<double> original_labels)
      : samples_(std::move(samples)),
        original_labels_(std::move(original_labels)) {
    validate();
    index_classes();
  }

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  int n_classes() const noexcept { return static_cast<int>(original_labels_.size()); }

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  PointView view(std::size_t i) const { return samples_[i].features; }

  /// Sample indices of every class; the lists partition [0, size()).
  const std::vector<std::vector<std::size_t>>& class_index() const noexcept {
    return class_index_;
  }

  const std::vector<std::size_t>& class_members(int c) const {
    check_class(c);
    return class_index_[static_cast<std::size_t>(c)];
  }

  std::vector<PointView> class_views(int c) const {
    check_class(c);
    std::vector<PointView> out;
    out.reserve(class_index_[static_cast<std::size_t>(c)].size());
    for (std::size_t i : class_index_[static_cast<std::size_t>(c)])
      out.push_back(view(i));
    return out;
  }

  const std::vector<double>& original_labels() const noexcept {
    return original_labels_;
  }

  double original_label(int c) const {
    check_class(c);
    return original_labels_[static_cast<std::size_t>(c)];
  }

  /// New dataset holding the given samples, same class table. Indices must be
  /// valid; duplicates are kept as-is.
  Dataset subset(const std::vector<std::size_t>& indices) const {
    std::vector<Sample> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) {
      if (i >= samples_.size())
        throw data_error("subset index out of range");
      picked.push_back(samples_[i]);
    }
    return Dataset(std::move(picked), original_labels_);
  }

 private:
  void validate() const {
    if (samples_.empty()) throw data_error("dataset has no samples");
    if (original_labels_.empty()) throw data_error("dataset has no classes");
    for (std::size_t a = 0; a < original_labels_.size(); ++a)
      for (std::size_t b = a + 1; b < original_labels_.size(); ++b)
        if (original_labels_[a] == original_labels_[b])
          throw data_error("duplicate original label");
    const std::size_t d = samples_.front().features.size();
    if (d == 0) throw data_error("samples have no features");
    const int p = static_cast<int>(original_labels_.size());
    for (const Sample& s : samples_) {
      if (s.features.size() != d)
        throw data_error("inconsistent feature dimension");
      if (s.label < 0 || s.label >= p)
        throw data_error("class id out of range");
      for (double v : s.features)
        if (!std::isfinite(v)) throw data_error("non-finite feature value");
    }
  }

  void index_classes() {
    feature_dim_ = samples_.front().features.size();
    class_index_.assign(original_labels_.size(), {});
    for (std::size_t i = 0; i < samples_.size(); ++i)
      class_index_[static_cast<std::size_t>(samples_[i].label)].push_back(i);
  }

  void check_class(int c) const {
    if (c < 0 || c >= n_classes()) throw data_error("class id out of range");
  }

  std::vector<Sample> samples_;
  std::vector<double> original_labels_;
  std::vector<std::vector<std::size_t>> class_index_;
  std::size_t feature_dim_ = 0;
};

namespace detail {

// Full-token floating point parse. Rejects partial consumption, empty tokens,
// and non-finite spellings; tolerates one leading '+'.
inline bool parse_number(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  double v = 0.0;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) return false;
  if (!std::isfinite(v)) return false;
  out = v;
  return true;
}

inline bool parse_index(std::string_view tok, std::size_t& out) {
  if (tok.empty()) return false;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc{} && res.ptr == tok.data() + tok.size();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline bool blank(std::string_view s) { return trim(s).empty(); }

// First-appearance label interning.
struct LabelTable {
  std::vector<double> seen;

  int id_of(double label) {
    for (std::size_t i = 0; i < seen.size(); ++i)
      if (seen[i] == label) return static_cast<int>(i);
    seen.push_back(label);
    return static_cast<int>(seen.size() - 1);
  }
};

}  // namespace detail

/// Builds a dataset from (label, features) rows, assigning class ids in
/// order of first appearance.
inline Dataset make_dataset(
    const std::vector<std::pair<double, std::vector<double>>>& rows) {
  detail::LabelTable table;
  std::vector<Sample> samples;
  samples.reserve(rows.size());
  for (const auto& [label, features] : rows)
    samples.push_back(Sample{features, table.id_of(label)});
  return Dataset(std::move(samples), std::move(table.seen));
}

/// Parses sparse "label index:value ..." rows (1-based feature indices,
/// strictly increasing within a row). The feature dimension is the largest
/// index seen anywhere; absent entries are 0. Blank lines are skipped.
inline Dataset parse_sparse(std::istream& in) {
  struct Row {
    double label;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t dim = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;

    std::istringstream fields(line);
    std::string tok;
    fields >> tok;
    Row row;
    if (!detail::parse_number(tok, row.label))
      throw parse_error(line_no, "bad label '" + tok + "'");

    std::size_t prev_index = 0;
    while (fields >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos)
        throw parse_error(line_no, "expected index:value, got '" + tok + "'");
      std::size_t index = 0;
      double value = 0.0;
      if (!detail::parse_index(std::string_view(tok).substr(0, colon), index) ||
          index == 0)
        throw parse_error(line_no, "bad feature index in '" + tok + "'");
      if (index <= prev_index)
        throw parse_error(line_no, "feature indices must increase");
      if (!detail::parse_number(std::string_view(tok).substr(colon + 1), value))
        throw parse_error(line_no, "bad feature value in '" + tok + "'");
      prev_index = index;
      row.entries.emplace_back(index, value);
      dim = std::max(dim, index);
    }
    rows.push_back(std::move(row));
  }

  if (rows.empty()) throw data_error("no data rows in input");
  if (dim == 0) throw data_error("input has no features");

  detail::LabelTable table;
  std::vector<Sample> samples;
  samples.reserve(rows.size());
  for (const Row& row : rows) {
    Sample s;
    s.features.assign(dim, 0.0);
    for (const auto& [index, value] : row.entries)
      s.features[index - 1] = value;
    s.label = table.id_of(row.label);
    samples.push_back(std::move(s));
  }
  return Dataset(std::move(samples), std::move(table.seen));
}

/// Parses comma-separated rows with the label in `label_column` (0-based).
/// A first row with any non-numeric cell is treated as a header. All rows
/// must have the same number of fields.
inline Dataset parse_csv(std::istream& in, std::size_t label_column = 0) {
  detail::LabelTable table;
  std::vector<Sample> samples;
  std::size_t n_fields = 0;

  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;

    std::vector<std::string_view> cells;
    std::string_view rest = line;
    while (true) {
      const std::size_t comma = rest.find(',');
      cells.push_back(detail::trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }

    if (first_content) {
      first_content = false;
      n_fields = cells.size();
      bool numeric = true;
      double ignored;
      for (std::string_view c : cells)
        numeric = numeric && detail::parse_number(c, ignored);
      if (!numeric) continue;  // header row
    } else if (cells.size() != n_fields) {
      throw parse_error(line_no, "expected " + std::to_string(n_fields) +
                                     " fields, got " +
                                     std::to_string(cells.size()));
    }

    if (label_column >= n_fields)
      throw data_error("label column " + std::to_string(label_column) +
                       " out of range for " + std::to_string(n_fields) +
                       " fields");
    if (n_fields < 2) throw data_error("need at least one feature column");

    double label = 0.0;
    if (!detail::parse_number(cells[label_column], label))
      throw parse_error(line_no, "bad label '" + std::string(cells[label_column]) + "'");

    Sample s;
    s.features.reserve(n_fields - 1);
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j == label_column) continue;
      double v = 0.0;
      if (!detail::parse_number(cells[j], v))
        throw parse_error(line_no, "bad feature value '" + std::string(cells[j]) + "'");
      s.features.push_back(v);
    }
    s.label = table.id_of(label);
    samples.push_back(std::move(s));
  }

  if (samples.empty()) throw data_error("no data rows in input");
  return Dataset(std::move(samples), std::move(table.seen));
}

/// Per-feature min/max over the dataset, with target range [lo, hi].
inline ScalingSpec fit_scaling(const Dataset& ds, double lo = 0.0,
                               double hi = 1.0) {
  if (!(lo < hi)) throw data_error("scaling range needs lo < hi");
  ScalingSpec spec;
  spec.lo = lo;
  spec.hi = hi;
  spec.feature_min.assign(ds.feature_dim(), 0.0);
  spec.feature_max.assign(ds.feature_dim(), 0.0);
  for (std::size_t j = 0; j < ds.feature_dim(); ++j) {
    double mn = ds[0].features[j];
    double mx = mn;
    for (std::size_t i = 1; i < ds.size(); ++i) {
      mn = std::min(mn, ds[i].features[j]);
      mx = std::max(mx, ds[i].features[j]);
    }
    spec.feature_min[j] = mn;
    spec.feature_max[j] = mx;
  }
  return spec;
}

/// Applies a fitted scaling to one point. Constant features map to the range
/// midpoint; values outside the fitted min/max extrapolate linearly.
inline void scale_point_inplace(std::vector<double>& x,
                                const ScalingSpec& spec) {
  if (x.size() != spec.dim())
    throw data_error("point dimension does not match scaling spec");
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double mn = spec.feature_min[j];
    const double mx = spec.feature_max[j];
    if (mx == mn) {
      x[j] = 0.5 * (spec.lo + spec.hi);
    } else {
      x[j] = spec.lo + (x[j] - mn) * (spec.hi - spec.lo) / (mx - mn);
    }
  }
}

inline std::vector<double> scale_point(PointView x, const ScalingSpec& spec) {
  std::vector<double> out(x.begin(), x.end());
  scale_point_inplace(out, spec);
  return out;
}

inline Dataset apply_scaling(const Dataset& ds, const ScalingSpec& spec) {
  if (ds.feature_dim() != spec.dim())
    throw data_error("dataset dimension does not match scaling spec");
  std::vector<Sample> scaled;
  scaled.reserve(ds.size());
  for (const Sample& s : ds.samples()) {
    Sample t = s;
    scale_point_inplace(t.features, spec);
    scaled.push_back(std::move(t));
  }
  return Dataset(std::move(scaled), ds.original_labels());
}

/// Seeded per-class split into (train, test). Each class contributes
/// round(test_fraction * size) samples to the test side, clamped so both
/// sides stay non-empty; every class therefore needs at least 2 samples.
/// Sample order within each side follows the original dataset order.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& ds,
                                                    double test_fraction,
                                                    std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw data_error("test fraction must lie in (0, 1)");

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (int c = 0; c < ds.n_classes(); ++c) {
    std::vector<std::size_t> members = ds.class_members(c);
    if (members.size() < 2)
      throw data_error("class " + std::to_string(c) +
                       " needs at least 2 samples to split");
    std::shuffle(members.begin(), members.end(), rng);
    auto n_test = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    test_idx.insert(test_idx.end(), members.begin(), members.begin() + n_test);
    train_idx.insert(train_idx.end(), members.begin() + n_test, members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

}  // namespace kernelgamma
