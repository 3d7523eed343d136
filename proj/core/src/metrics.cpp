#include "seqsel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace seqsel {

long long ConfusionMatrix::total() const {
  long long t = 0;
  for (long long c : counts) t += c;
  return t;
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, int k) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("confusion: predictions and labels differ in length");
  if (k <= 0) throw std::invalid_argument("confusion: k must be positive");
  ConfusionMatrix cm;
  cm.k = k;
  cm.counts.assign(static_cast<std::size_t>(k) * k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i];
    const int p = predictions[i];
    if (t < 0 || t >= k || p < 0 || p >= k)
      throw std::invalid_argument("confusion: class index out of [0, k) at position " +
                                  std::to_string(i));
    ++cm.counts[static_cast<std::size_t>(t) * k + p];
  }
  return cm;
}

MetricsReport summarize(const ConfusionMatrix& cm, std::span<const int> lengths, int n_features) {
  MetricsReport report;
  report.confusion = cm;
  report.n_features = n_features;
  report.n_samples = cm.total();

  const int k = cm.k;
  long long diag = 0;
  report.per_class.resize(k);
  for (int c = 0; c < k; ++c) {
    long long tp = cm.at(c, c);
    long long fp = 0, fn = 0, support = 0;
    for (int other = 0; other < k; ++other) {
      if (other != c) {
        fp += cm.at(other, c);
        fn += cm.at(c, other);
      }
      support += cm.at(c, other);
    }
    diag += tp;
    ClassMetrics& m = report.per_class[c];
    m.support = support;
    m.precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  report.accuracy =
      report.n_samples == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(report.n_samples);

  for (const auto& m : report.per_class) {
    report.macro.precision += m.precision / k;
    report.macro.recall += m.recall / k;
    report.macro.f1 += m.f1 / k;
    if (report.n_samples > 0) {
      const double w = static_cast<double>(m.support) / static_cast<double>(report.n_samples);
      report.weighted.precision += w * m.precision;
      report.weighted.recall += w * m.recall;
      report.weighted.f1 += w * m.f1;
    }
  }
  report.macro.support = report.n_samples;
  report.weighted.support = report.n_samples;

  if (!lengths.empty()) {
    double sum = 0.0;
    int lo = std::numeric_limits<int>::max(), hi = std::numeric_limits<int>::min();
    std::map<int, long long> hist;
    for (int len : lengths) {
      sum += len;
      lo = std::min(lo, len);
      hi = std::max(hi, len);
      ++hist[len];
    }
    report.mean_length = sum / static_cast<double>(lengths.size());
    double var = 0.0;
    for (int len : lengths) {
      const double d = len - report.mean_length;
      var += d * d;
    }
    report.std_length = std::sqrt(var / static_cast<double>(lengths.size()));
    report.min_length = lo;
    report.max_length = hi;
    report.length_histogram.assign(hist.begin(), hist.end());
    if (report.mean_length > 0.0)
      report.efficiency_ratio = static_cast<double>(n_features) / report.mean_length;
    else
      report.efficiency_ratio = std::numeric_limits<double>::infinity();
  }
  return report;
}

std::string metrics_to_json(const MetricsReport& report,
                            const std::vector<std::string>& class_names) {
  nlohmann::json j;
  j["accuracy"] = report.accuracy;
  j["n_samples"] = report.n_samples;
  j["n_features"] = report.n_features;

  auto class_json = [&](const ClassMetrics& m) {
    nlohmann::json c;
    c["precision"] = m.precision;
    c["recall"] = m.recall;
    c["f1"] = m.f1;
    c["support"] = m.support;
    return c;
  };
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    auto entry = class_json(report.per_class[c]);
    entry["class"] = c;
    if (c < class_names.size()) entry["name"] = class_names[c];
    per_class.push_back(std::move(entry));
  }
  j["per_class"] = std::move(per_class);
  j["macro"] = class_json(report.macro);
  j["weighted"] = class_json(report.weighted);

  nlohmann::json lengths;
  lengths["mean"] = report.mean_length;
  lengths["std"] = report.std_length;
  lengths["min"] = report.min_length;
  lengths["max"] = report.max_length;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [len, count] : report.length_histogram)
    hist.push_back(nlohmann::json::array({len, count}));
  lengths["histogram"] = std::move(hist);
  j["episode_length"] = std::move(lengths);

  if (std::isfinite(report.efficiency_ratio))
    j["efficiency_ratio"] = report.efficiency_ratio;
  else
    j["efficiency_ratio"] = nullptr;

  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < report.confusion.k; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (int p = 0; p < report.confusion.k; ++p) row.push_back(report.confusion.at(t, p));
    rows.push_back(std::move(row));
  }
  j["confusion"] = std::move(rows);
  return j.dump(2);
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names,
                         std::ostream& out) {
  auto name = [&](int c) {
    return c < static_cast<int>(class_names.size()) ? class_names[c] : std::to_string(c);
  };
  out << "true\\predicted";
  for (int p = 0; p < cm.k; ++p) out << ',' << name(p);
  out << '\n';
  for (int t = 0; t < cm.k; ++t) {
    out << name(t);
    for (int p = 0; p < cm.k; ++p) out << ',' << cm.at(t, p);
    out << '\n';
  }
}

void write_length_histogram_csv(const MetricsReport& report, std::ostream& out) {
  out << "length,count\n";
  for (const auto& [len, count] : report.length_histogram) out << len << ',' << count << '\n';
}

}  // namespace seqsel
