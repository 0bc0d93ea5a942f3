#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"

namespace fedsim {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<long long> counts;  // row-major C x C

  explicit ConfusionMatrix(int c)
      : num_classes(c), counts(static_cast<std::size_t>(c) * static_cast<std::size_t>(c), 0) {}

  long long& at(int t, int p) {
    return counts[static_cast<std::size_t>(t) * static_cast<std::size_t>(num_classes) +
                  static_cast<std::size_t>(p)];
  }
  long long at(int t, int p) const {
    return counts[static_cast<std::size_t>(t) * static_cast<std::size_t>(num_classes) +
                  static_cast<std::size_t>(p)];
  }
  long long total() const;

  // Elementwise addition; shards evaluated in parallel merge with this.
  void merge(const ConfusionMatrix& other);
};

struct MetricsReport {
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<long long> support;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
};

struct FunctionalCase {
  std::string text;
  std::string functionality;
  std::string gold;  // "hate" or "not-hate"
};

struct GroupResult {
  int cases = 0;
  int correct = 0;
  double accuracy = 0.0;
};

struct FunctionalReport {
  std::map<std::string, GroupResult> groups;
  int skipped_cases = 0;  // cases with an empty functionality tag
};

ConfusionMatrix confusion(const std::vector<int>& true_labels,
                          const std::vector<int>& predicted_labels, int num_classes);

// Zero-division policy: any ratio with a zero denominator is 0. Weighted
// aggregates are support-weighted over the true-label distribution.
MetricsReport weighted_metrics(const ConfusionMatrix& cm);

// Classifies each case with `predict_class` (returns a merged class name),
// maps the prediction to hate/not-hate and scores accuracy per functionality.
FunctionalReport functional_eval(const std::vector<FunctionalCase>& cases,
                                 const std::function<std::string(const std::string&)>& predict_class,
                                 const BinaryMapping& mapping);

// JSONL with keys text, functionality, gold.
std::vector<FunctionalCase> load_functional_suite(const std::string& path);

}  // namespace fedsim
