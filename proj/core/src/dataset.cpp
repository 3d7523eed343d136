#include "seqsel/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "seqsel/rng.hpp"

namespace seqsel {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string& cell, double& out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_int(const std::string& cell, long long& out) {
  const std::string t = trim(cell);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

void Dataset::validate() const {
  if (n_features <= 0) throw std::invalid_argument("dataset: n_features must be positive");
  if (n_classes <= 0) throw std::invalid_argument("dataset: n_classes must be positive");
  if (features.size() != rows() * static_cast<std::size_t>(n_features))
    throw std::invalid_argument("dataset: feature matrix size does not match label count");
  for (int y : labels)
    if (y < 0 || y >= n_classes)
      throw std::invalid_argument("dataset: label out of [0, n_classes)");
  if (!feature_names.empty() && feature_names.size() != static_cast<std::size_t>(n_features))
    throw std::invalid_argument("dataset: feature_names length mismatch");
  if (norm_stats) {
    if (norm_stats->mean.size() != static_cast<std::size_t>(n_features) ||
        norm_stats->stddev.size() != static_cast<std::size_t>(n_features))
      throw std::invalid_argument("dataset: norm stats length mismatch");
    for (double s : norm_stats->stddev)
      if (!(s > 0.0)) throw std::invalid_argument("dataset: stored stddev must be positive");
  }
}

std::size_t CategoryMap::coverage() const {
  std::set<int> all;
  for (const auto& c : categories) all.insert(c.feature_indices.begin(), c.feature_indices.end());
  return all.size();
}

void CategoryMap::validate(int n_features) const {
  std::set<int> seen;
  for (const auto& c : categories) {
    if (c.feature_indices.empty())
      throw std::invalid_argument("category map: category '" + c.name + "' covers zero features");
    for (int idx : c.feature_indices) {
      if (idx < 0 || idx >= n_features)
        throw std::invalid_argument("category map: index " + std::to_string(idx) +
                                    " in '" + c.name + "' outside [0, n)");
      if (!seen.insert(idx).second)
        throw std::invalid_argument("category map: index " + std::to_string(idx) +
                                    " appears in more than one category");
    }
  }
}

void SynthSpec::validate() const {
  if (n_features <= 0) throw std::invalid_argument("synth spec: n_features must be positive");
  if (n_classes != 2 && n_classes != 3)
    throw std::invalid_argument("synth spec: n_classes must be 2 or 3");
  if (n_samples <= 0) throw std::invalid_argument("synth spec: n_samples must be positive");
  if (noise_std < 0.0) throw std::invalid_argument("synth spec: noise_std must be non-negative");
  const std::size_t arity = rule == Rule::Sign ? 1 : 2;
  if (informative_indices.size() != arity)
    throw std::invalid_argument("synth spec: rule expects " + std::to_string(arity) +
                                " informative indices");
  for (int idx : informative_indices)
    if (idx < 0 || idx >= n_features)
      throw std::invalid_argument("synth spec: informative index outside [0, n)");
  if (arity == 2 && informative_indices[0] == informative_indices[1])
    throw std::invalid_argument("synth spec: informative indices must be distinct");
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file: " + path);
  const auto header = split_line(line);

  int label_col = -1;
  std::vector<std::string> feature_names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const std::string name = trim(header[j]);
    if (name == label_column) {
      if (label_col >= 0)
        throw std::runtime_error("load_csv: duplicate label column '" + label_column + "'");
      label_col = static_cast<int>(j);
    } else {
      feature_names.push_back(name);
    }
  }
  if (label_col < 0)
    throw std::runtime_error("load_csv: label column '" + label_column + "' not found in header");
  const std::size_t n_cols = header.size();
  const int n_features = static_cast<int>(n_cols - 1);
  if (n_features == 0) throw std::runtime_error("load_csv: no feature columns");

  std::vector<double> features;
  std::vector<std::string> raw_labels;
  std::size_t data_row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    ++data_row;
    const auto cells = split_line(line);
    if (cells.size() != n_cols)
      throw std::runtime_error("load_csv: row " + std::to_string(data_row) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(n_cols));
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (static_cast<int>(j) == label_col) {
        raw_labels.push_back(trim(cells[j]));
        continue;
      }
      double v = 0.0;
      if (!parse_double(cells[j], v) || !std::isfinite(v))
        throw std::runtime_error("load_csv: non-numeric or non-finite cell at row " +
                                 std::to_string(data_row) + ", column '" + trim(header[j]) + "'");
      features.push_back(v);
    }
  }
  if (raw_labels.empty()) throw std::runtime_error("load_csv: no data rows in " + path);

  // Integer labels that already form a dense 0..k-1 range keep their values;
  // anything else is mapped densely in first-appearance order.
  std::vector<long long> as_int(raw_labels.size());
  bool all_int = true;
  long long max_label = -1;
  std::set<long long> distinct;
  for (std::size_t i = 0; i < raw_labels.size(); ++i) {
    if (!parse_int(raw_labels[i], as_int[i])) {
      all_int = false;
      break;
    }
    distinct.insert(as_int[i]);
    max_label = std::max(max_label, as_int[i]);
  }
  const bool dense_ints = all_int && !distinct.empty() && *distinct.begin() == 0 &&
                          max_label == static_cast<long long>(distinct.size()) - 1;

  Dataset out;
  out.n_features = n_features;
  out.feature_names = std::move(feature_names);
  out.features = std::move(features);
  if (dense_ints) {
    out.n_classes = static_cast<int>(distinct.size());
    out.labels.reserve(raw_labels.size());
    for (long long v : as_int) out.labels.push_back(static_cast<int>(v));
    for (int c = 0; c < out.n_classes; ++c) out.class_names.push_back(std::to_string(c));
  } else {
    std::unordered_map<std::string, int> index_of;
    out.labels.reserve(raw_labels.size());
    for (const auto& text : raw_labels) {
      auto [it, inserted] = index_of.emplace(text, static_cast<int>(out.class_names.size()));
      if (inserted) out.class_names.push_back(text);
      out.labels.push_back(it->second);
    }
    out.n_classes = static_cast<int>(out.class_names.size());
  }
  out.validate();
  return out;
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open file for writing: " + path);
  for (int j = 0; j < data.n_features; ++j) {
    if (data.feature_names.empty())
      out << 'f' << j;
    else
      out << data.feature_names[j];
    out << ',';
  }
  out << "label\n";
  char buf[64];
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (int j = 0; j < data.n_features; ++j) {
      std::snprintf(buf, sizeof(buf), "%.10g", data.at(i, j));
      out << buf << ',';
    }
    if (data.class_names.empty())
      out << data.labels[i];
    else
      out << data.class_names[data.labels[i]];
    out << '\n';
  }
  if (!out) throw std::runtime_error("write_csv: write failed: " + path);
}

NormStats zscore_fit(const Dataset& data) {
  if (data.rows() == 0) throw std::invalid_argument("zscore_fit: empty dataset");
  const std::size_t rows = data.rows();
  const int n = data.n_features;
  NormStats stats;
  stats.mean.assign(n, 0.0);
  stats.stddev.assign(n, 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (int j = 0; j < n; ++j) stats.mean[j] += data.at(i, j);
  for (int j = 0; j < n; ++j) stats.mean[j] /= static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = data.at(i, j) - stats.mean[j];
      stats.stddev[j] += d * d;
    }
  for (int j = 0; j < n; ++j) {
    double s = std::sqrt(stats.stddev[j] / static_cast<double>(rows));
    stats.stddev[j] = s < 1e-12 ? 1.0 : s;
  }
  return stats;
}

Dataset zscore_apply(const Dataset& data, const NormStats& stats) {
  if (stats.mean.size() != static_cast<std::size_t>(data.n_features) ||
      stats.stddev.size() != static_cast<std::size_t>(data.n_features))
    throw std::invalid_argument("zscore_apply: stats length does not match n_features");
  Dataset out = data;
  const int n = data.n_features;
  for (std::size_t i = 0; i < data.rows(); ++i)
    for (int j = 0; j < n; ++j)
      out.features[i * n + j] = (data.at(i, j) - stats.mean[j]) / stats.stddev[j];
  out.norm_stats = stats;
  return out;
}

namespace {

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.n_features = data.n_features;
  out.n_classes = data.n_classes;
  out.feature_names = data.feature_names;
  out.class_names = data.class_names;
  out.norm_stats = data.norm_stats;
  out.features.reserve(idx.size() * data.n_features);
  out.labels.reserve(idx.size());
  for (std::size_t i : idx) {
    const auto r = data.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

void fisher_yates(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = rng.uniform_index(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& data, double test_fraction,
                                  std::uint64_t seed, bool stratified) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw std::invalid_argument("split: test_fraction must lie in (0, 1)");
  if (data.rows() == 0) throw std::invalid_argument("split: empty dataset");

  Rng rng(Rng::mix(seed, 1));
  std::vector<std::size_t> test_idx, train_idx;

  if (stratified) {
    std::vector<std::vector<std::size_t>> by_class(data.n_classes);
    for (std::size_t i = 0; i < data.rows(); ++i) by_class[data.labels[i]].push_back(i);
    for (int c = 0; c < data.n_classes; ++c) {
      auto& members = by_class[c];
      if (members.size() < 2)
        throw std::invalid_argument("split: class " + std::to_string(c) +
                                    " has fewer than 2 samples; cannot stratify");
      fisher_yates(members, rng);
      auto n_test = static_cast<std::size_t>(
          std::llround(static_cast<double>(members.size()) * test_fraction));
      if (n_test >= members.size()) n_test = members.size() - 1;  // keep one training row
      test_idx.insert(test_idx.end(), members.begin(), members.begin() + n_test);
      train_idx.insert(train_idx.end(), members.begin() + n_test, members.end());
    }
  } else {
    std::vector<std::size_t> order(data.rows());
    std::iota(order.begin(), order.end(), 0);
    fisher_yates(order, rng);
    auto n_test =
        static_cast<std::size_t>(std::llround(static_cast<double>(order.size()) * test_fraction));
    if (n_test >= order.size()) n_test = order.size() - 1;
    test_idx.assign(order.begin(), order.begin() + n_test);
    train_idx.assign(order.begin() + n_test, order.end());
  }

  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {take_rows(data, train_idx), take_rows(data, test_idx)};
}

int synth_rule_label(const SynthSpec& spec, std::span<const double> row) {
  if (spec.rule == SynthSpec::Rule::Sign) return row[spec.informative_indices[0]] > 0.0 ? 1 : 0;
  const bool a = row[spec.informative_indices[0]] < 0.0;
  const bool b = row[spec.informative_indices[1]] < 0.0;
  return (a != b) ? 1 : 0;
}

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(Rng::mix(seed, 2));
  Dataset out;
  out.n_features = spec.n_features;
  out.n_classes = spec.n_classes;
  for (int j = 0; j < spec.n_features; ++j) out.feature_names.push_back("f" + std::to_string(j));
  for (int c = 0; c < spec.n_classes; ++c) out.class_names.push_back(std::to_string(c));

  std::vector<bool> informative(spec.n_features, false);
  for (int idx : spec.informative_indices) informative[idx] = true;

  out.features.resize(static_cast<std::size_t>(spec.n_samples) * spec.n_features);
  out.labels.resize(spec.n_samples);
  for (int i = 0; i < spec.n_samples; ++i) {
    double* row = out.features.data() + static_cast<std::size_t>(i) * spec.n_features;
    for (int j = 0; j < spec.n_features; ++j) {
      if (informative[j]) {
        // map u in [-1,1) onto [-1,-0.1) u [0.1,1): keeps |value| >= 0.1
        const double u = rng.uniform(-1.0, 1.0);
        row[j] = u < 0.0 ? -0.1 + 0.9 * u : 0.1 + 0.9 * u;
      } else {
        row[j] = rng.gaussian();
      }
    }
    out.labels[i] = synth_rule_label(spec, std::span<const double>(row, spec.n_features));
    if (spec.noise_std > 0.0)
      for (int idx : spec.informative_indices) row[idx] += spec.noise_std * rng.gaussian();
  }
  out.validate();
  return out;
}

CategoryMap load_category_map(const std::string& path, int n_features) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("category map: cannot open file: " + path);
  nlohmann::ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("category map: invalid JSON in " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw std::runtime_error("category map: top level must be an object");

  CategoryMap map;
  for (auto& [name, value] : doc.items()) {
    if (!value.is_array())
      throw std::runtime_error("category map: value of '" + name + "' must be an array");
    CategoryMap::Category cat;
    cat.name = name;
    for (const auto& v : value) {
      if (!v.is_number_integer())
        throw std::runtime_error("category map: non-integer index in '" + name + "'");
      cat.feature_indices.push_back(v.get<int>());
    }
    std::sort(cat.feature_indices.begin(), cat.feature_indices.end());
    cat.feature_indices.erase(
        std::unique(cat.feature_indices.begin(), cat.feature_indices.end()),
        cat.feature_indices.end());
    map.categories.push_back(std::move(cat));
  }
  map.validate(n_features);
  return map;
}

}  // namespace seqsel
