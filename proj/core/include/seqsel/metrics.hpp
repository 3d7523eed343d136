#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace seqsel {

/// k x k counts; rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  int k = 0;
  std::vector<long long> counts;  // row-major k*k

  long long at(int true_class, int predicted) const {
    return counts[static_cast<std::size_t>(true_class) * k + predicted];
  }
  long long total() const;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  std::vector<ClassMetrics> per_class;
  ClassMetrics macro;     // unweighted class mean (support left at total)
  ClassMetrics weighted;  // support-weighted mean
  double mean_length = 0.0;
  double std_length = 0.0;
  int min_length = 0;
  int max_length = 0;
  std::vector<std::pair<int, long long>> length_histogram;  // sorted by length
  double efficiency_ratio = 0.0;  // n_features / mean_length
  long long n_samples = 0;
  int n_features = 0;
  ConfusionMatrix confusion;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels, int k);

/// Accuracy, per-class precision/recall/F1 (0/0 -> 0), macro and weighted
/// aggregates, episode-length statistics and the feature-reduction ratio
/// n / mean(lengths).
MetricsReport summarize(const ConfusionMatrix& cm, std::span<const int> lengths, int n_features);

std::string metrics_to_json(const MetricsReport& report,
                            const std::vector<std::string>& class_names = {});

void write_confusion_csv(const ConfusionMatrix& cm, const std::vector<std::string>& class_names,
                         std::ostream& out);

void write_length_histogram_csv(const MetricsReport& report, std::ostream& out);

}  // namespace seqsel
