#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/fed.hpp"
#include "fedsim/model.hpp"

namespace fedsim {

struct DataConfig {
  std::vector<std::string> corpus_paths;
  CorpusFormat format = CorpusFormat::Jsonl;
  std::optional<std::string> schema_path;  // absent: identity schema from observed labels
  std::optional<double> length_percentile;
  double train_ratio = 0.70;
  double val_ratio = 0.10;
  double test_ratio = 0.20;
  int feature_dim = 1 << 18;
  bool allow_empty = false;
};

// Parsed experiment config plus the optional grid axes. Grid expansion is the
// Cartesian product of the provided lists; absent axes use the scalar values.
struct ExperimentFile {
  DataConfig data;
  ModelKind model_kind = ModelKind::LogisticRegression;
  int hidden_dim = 0;
  FedConfig fed;
  std::vector<std::string> grid_algorithm;
  std::vector<double> grid_client_fraction;
  std::vector<int> grid_local_epochs;
  std::vector<double> grid_mu;
  std::string output_dir = "out";

  static ExperimentFile load(const std::string& path);
  std::vector<FedConfig> expand_grid() const;
};

std::string cell_name(const FedConfig& cfg);

// Executes every grid cell, writing rounds.jsonl, summary.json and the saved
// model under output_dir/<cell>/, then prints a results table. `parallel`
// runs that many cells concurrently.
int run_grid(const ExperimentFile& exp, int parallel = 1);

// HateCheck-style evaluation of a saved model against a functional suite;
// writes predictions.jsonl and hatecheck.json into out_dir.
int run_eval(const std::string& model_path, const std::string& suite_path,
             const std::string& mapping_path, const std::string& out_dir);

}  // namespace fedsim
