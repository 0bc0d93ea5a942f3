#include "fedsim/metrics.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fedsim/errors.hpp"

namespace fedsim {

using nlohmann::json;

long long ConfusionMatrix::total() const {
  long long t = 0;
  for (long long c : counts) t += c;
  return t;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes != num_classes) throw ConfigError("confusion merge: class count mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

ConfusionMatrix confusion(const std::vector<int>& true_labels,
                          const std::vector<int>& predicted_labels, int num_classes) {
  if (true_labels.size() != predicted_labels.size())
    throw ConfigError("confusion: label vectors differ in length");
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    int t = true_labels[i];
    int p = predicted_labels[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
      throw ConfigError("confusion: label out of range at index " + std::to_string(i));
    ++cm.at(t, p);
  }
  return cm;
}

MetricsReport weighted_metrics(const ConfusionMatrix& cm) {
  const int c = cm.num_classes;
  if (cm.total() == 0) throw ConfigError("weighted_metrics: empty confusion matrix");

  MetricsReport r;
  r.precision.assign(static_cast<std::size_t>(c), 0.0);
  r.recall.assign(static_cast<std::size_t>(c), 0.0);
  r.f1.assign(static_cast<std::size_t>(c), 0.0);
  r.support.assign(static_cast<std::size_t>(c), 0);

  for (int k = 0; k < c; ++k) {
    long long tp = cm.at(k, k);
    long long pred = 0, truth = 0;
    for (int j = 0; j < c; ++j) {
      pred += cm.at(j, k);
      truth += cm.at(k, j);
    }
    const std::size_t ki = static_cast<std::size_t>(k);
    r.support[ki] = truth;
    r.precision[ki] = pred > 0 ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
    r.recall[ki] = truth > 0 ? static_cast<double>(tp) / static_cast<double>(truth) : 0.0;
    double pr = r.precision[ki] + r.recall[ki];
    r.f1[ki] = pr > 0.0 ? 2.0 * r.precision[ki] * r.recall[ki] / pr : 0.0;
  }

  const double total = static_cast<double>(cm.total());
  for (int k = 0; k < c; ++k) {
    const std::size_t ki = static_cast<std::size_t>(k);
    const double w = static_cast<double>(r.support[ki]) / total;
    r.weighted_precision += w * r.precision[ki];
    r.weighted_recall += w * r.recall[ki];
    r.weighted_f1 += w * r.f1[ki];
  }
  return r;
}

FunctionalReport functional_eval(
    const std::vector<FunctionalCase>& cases,
    const std::function<std::string(const std::string&)>& predict_class,
    const BinaryMapping& mapping) {
  FunctionalReport report;
  for (const FunctionalCase& fc : cases) {
    if (fc.functionality.empty()) {
      ++report.skipped_cases;
      continue;
    }
    if (fc.gold != "hate" && fc.gold != "not-hate")
      throw DataError("functional case gold label must be 'hate' or 'not-hate', got '" + fc.gold +
                      "'");
    std::string cls = predict_class(fc.text);
    if (!mapping.hate_labels.count(cls) && !mapping.nothate_labels.count(cls))
      throw ConfigError("binary mapping does not cover predicted class '" + cls + "'");
    std::string binary = mapping.is_hate(cls) ? "hate" : "not-hate";
    GroupResult& g = report.groups[fc.functionality];
    ++g.cases;
    if (binary == fc.gold) ++g.correct;
  }
  for (auto& [name, g] : report.groups)
    g.accuracy = static_cast<double>(g.correct) / static_cast<double>(g.cases);
  return report;
}

std::vector<FunctionalCase> load_functional_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open functional suite: " + path);
  std::vector<FunctionalCase> cases;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      cases.push_back({j.at("text").get<std::string>(), j.at("functionality").get<std::string>(),
                       j.at("gold").get<std::string>()});
    } catch (const json::exception& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed case: " + e.what());
    }
  }
  return cases;
}

}  // namespace fedsim
