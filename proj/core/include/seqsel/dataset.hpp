#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace seqsel {

/// Per-feature normalization statistics (population standard deviation).
struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

/// A dense classification dataset: row-major feature matrix plus integer
/// labels in [0, n_classes).
struct Dataset {
  std::vector<double> features;  // rows * n_features, row-major
  std::vector<int> labels;
  int n_features = 0;
  int n_classes = 0;
  std::vector<std::string> feature_names;  // empty when unknown
  std::vector<std::string> class_names;    // original label text per class index
  std::optional<NormStats> norm_stats;

  std::size_t rows() const { return labels.size(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features)
        .subspan(i * static_cast<std::size_t>(n_features), n_features);
  }

  double at(std::size_t i, std::size_t j) const {
    return features[i * static_cast<std::size_t>(n_features) + j];
  }

  /// Throws std::invalid_argument when a structural invariant is broken.
  void validate() const;
};

/// Named, pairwise-disjoint groups of feature indices.
struct CategoryMap {
  struct Category {
    std::string name;
    std::vector<int> feature_indices;  // sorted, unique
  };
  std::vector<Category> categories;

  std::size_t coverage() const;  // number of distinct indices across categories
  void validate(int n_features) const;
};

/// Desk-scale synthetic task description.
struct SynthSpec {
  enum class Rule { Sign, XorSign };

  int n_features = 0;
  int n_classes = 2;  // 2 or 3
  std::vector<int> informative_indices;
  Rule rule = Rule::Sign;
  int n_samples = 0;
  double noise_std = 0.0;

  void validate() const;
};

/// Parse a CSV with one header row. The named label column is mapped to a
/// dense class index space; every other column must hold finite reals.
Dataset load_csv(const std::string& path, const std::string& label_column);

/// Write a dataset in the same CSV dialect load_csv reads.
void write_csv(const Dataset& data, const std::string& path);

/// Column means and population standard deviations. Deviations below 1e-12
/// are stored as 1.0 so constant features normalize to zero instead of
/// dividing by zero.
NormStats zscore_fit(const Dataset& data);

/// (value - mean) / std per cell; records the stats on the result.
Dataset zscore_apply(const Dataset& data, const NormStats& stats);

/// Deterministic train/test partition. With stratified=true the per-class
/// test count is round(class_count * test_fraction), adjusted so every class
/// keeps at least one training row.
std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction,
                                  std::uint64_t seed, bool stratified);

/// Generate a labeled dataset from a synthetic rule. Informative features are
/// uniform on [-1,-0.1] u [0.1,1] (margin keeps signs unambiguous), the rest
/// standard normal. Labels are computed before noise is added to the
/// informative columns.
Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

/// True label the rule assigns to a (noise-free) feature row.
int synth_rule_label(const SynthSpec& spec, std::span<const double> row);

/// Read a JSON object {"category name": [feature indices], ...}.
CategoryMap load_category_map(const std::string& path, int n_features);

}  // namespace seqsel
