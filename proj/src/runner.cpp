#include "fedsim/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/log.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/model_io.hpp"

namespace fedsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string format_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

json fed_config_to_json(const FedConfig& c) {
  json j;
  j["algorithm"] = to_string(c.algorithm);
  j["n_clients"] = c.n_clients;
  j["client_fraction"] = c.client_fraction;
  j["local_epochs"] = c.local_epochs;
  j["rounds"] = c.rounds;
  j["client_lr"] = c.client_lr;
  j["mu"] = c.mu;
  j["server_optimizer"] = to_string(c.server_optimizer);
  j["server_lr"] = c.server_lr;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["tau"] = c.tau;
  j["batch_size"] = c.batch_size;
  j["patience"] = c.patience;
  j["seed"] = c.seed;
  return j;
}

void parse_fed_section(const json& j, FedConfig& c) {
  if (j.contains("algorithm")) c.algorithm = algorithm_from_string(j["algorithm"].get<std::string>());
  c.n_clients = j.value("n_clients", c.n_clients);
  c.client_fraction = j.value("client_fraction", c.client_fraction);
  c.local_epochs = j.value("local_epochs", c.local_epochs);
  c.rounds = j.value("rounds", c.rounds);
  c.client_lr = j.value("client_lr", c.client_lr);
  c.mu = j.value("mu", c.mu);
  if (j.contains("server_optimizer"))
    c.server_optimizer = server_opt_from_string(j["server_optimizer"].get<std::string>());
  c.server_lr = j.value("server_lr", c.server_lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.tau = j.value("tau", c.tau);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
}

struct PreparedData {
  std::vector<std::string> class_order;
  std::vector<FeaturizedExample> train;
  std::vector<FeaturizedExample> val;
  std::vector<FeaturizedExample> test;
  std::vector<Document> train_docs;  // retained for partitioning by id
};

PreparedData prepare_data(const DataConfig& dc, std::uint64_t seed) {
  std::vector<Document> docs;
  for (const auto& path : dc.corpus_paths) {
    CorpusLoad load = load_corpus(path, dc.format);
    if (load.empty_text_warnings > 0)
      log::info("%s: skipped %d empty-text records", path.c_str(), load.empty_text_warnings);
    for (auto& d : load.docs) docs.push_back(std::move(d));
  }
  if (docs.empty()) throw DataError("no documents loaded");

  LabelSchema schema;
  if (dc.schema_path) {
    schema = LabelSchema::load(*dc.schema_path);
  } else {
    std::vector<std::string> labels;
    labels.reserve(docs.size());
    for (const auto& d : docs) labels.push_back(d.raw_label);
    schema = LabelSchema::identity(labels);
  }

  docs = apply_schema(docs, schema);
  if (dc.length_percentile) docs = filter_longest_percentile(docs, *dc.length_percentile);
  stratified_split(docs, dc.train_ratio, dc.val_ratio, dc.test_ratio, seed);

  PreparedData out;
  out.class_order = schema.class_order;
  std::vector<Document> val_docs, test_docs;
  for (auto& d : docs) {
    switch (*d.split) {
      case Split::Train: out.train_docs.push_back(std::move(d)); break;
      case Split::Val: val_docs.push_back(std::move(d)); break;
      case Split::Test: test_docs.push_back(std::move(d)); break;
    }
  }
  out.train = featurize(out.train_docs, dc.feature_dim, out.class_order, dc.allow_empty);
  out.val = featurize(val_docs, dc.feature_dim, out.class_order, dc.allow_empty);
  out.test = featurize(test_docs, dc.feature_dim, out.class_order, dc.allow_empty);
  log::info("data: %zu train / %zu val / %zu test, %zu classes", out.train.size(),
            out.val.size(), out.test.size(), out.class_order.size());
  return out;
}

std::vector<std::vector<FeaturizedExample>> build_partitions(const PreparedData& data,
                                                             int n_clients, std::uint64_t seed,
                                                             const DataConfig& dc) {
  std::vector<Partition> parts = partition_iid(data.train_docs, n_clients, seed);
  // id -> featurized example (train_docs and data.train are index-aligned)
  std::map<std::string, const FeaturizedExample*> by_id;
  for (std::size_t i = 0; i < data.train_docs.size(); ++i)
    by_id[data.train_docs[i].id] = &data.train[i];
  (void)dc;

  std::vector<std::vector<FeaturizedExample>> out(parts.size());
  for (const Partition& p : parts) {
    auto& bucket = out[static_cast<std::size_t>(p.client_id)];
    bucket.reserve(p.example_ids.size());
    for (const std::string& id : p.example_ids) bucket.push_back(*by_id.at(id));
  }
  return out;
}

void write_rounds_jsonl(const fs::path& path, const std::vector<RoundRecord>& rounds) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const RoundRecord& r : rounds) {
    json j;
    j["round"] = r.round;
    j["sampled_clients"] = r.sampled_clients;
    j["mean_train_loss"] = r.mean_train_loss;
    j["val_precision"] = r.val_precision;
    j["val_recall"] = r.val_recall;
    j["val_weighted_f1"] = r.val_weighted_f1;
    out << j.dump() << "\n";
  }
}

}  // namespace

std::string cell_name(const FedConfig& cfg) {
  return to_string(cfg.algorithm) + "_c" + format_num(cfg.client_fraction) + "_e" +
         std::to_string(cfg.local_epochs) + "_mu" + format_num(cfg.mu);
}

ExperimentFile ExperimentFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  ExperimentFile exp;
  try {
    const json& d = j.at("data");
    exp.data.corpus_paths = d.at("corpus").get<std::vector<std::string>>();
    std::string fmt = d.value("format", "jsonl");
    if (fmt == "csv") exp.data.format = CorpusFormat::Csv;
    else if (fmt == "jsonl") exp.data.format = CorpusFormat::Jsonl;
    else throw ConfigError("unknown corpus format: " + fmt);
    if (d.contains("schema") && !d["schema"].is_null())
      exp.data.schema_path = d["schema"].get<std::string>();
    if (d.contains("clean") && d["clean"].contains("length_percentile"))
      exp.data.length_percentile = d["clean"]["length_percentile"].get<double>();
    if (d.contains("split")) {
      auto s = d["split"].get<std::vector<double>>();
      if (s.size() != 3) throw ConfigError("split must be a 3-element array");
      exp.data.train_ratio = s[0];
      exp.data.val_ratio = s[1];
      exp.data.test_ratio = s[2];
    }
    exp.data.feature_dim = d.value("feature_dim", exp.data.feature_dim);
    exp.data.allow_empty = d.value("allow_empty", exp.data.allow_empty);

    if (j.contains("model")) {
      const json& m = j["model"];
      if (m.contains("kind")) exp.model_kind = model_kind_from_string(m["kind"].get<std::string>());
      exp.hidden_dim = m.value("hidden_dim", 0);
    }
    if (j.contains("fed")) parse_fed_section(j["fed"], exp.fed);

    if (j.contains("grid")) {
      const json& g = j["grid"];
      if (g.contains("algorithm")) exp.grid_algorithm = g["algorithm"].get<std::vector<std::string>>();
      if (g.contains("client_fraction"))
        exp.grid_client_fraction = g["client_fraction"].get<std::vector<double>>();
      if (g.contains("local_epochs")) exp.grid_local_epochs = g["local_epochs"].get<std::vector<int>>();
      if (g.contains("mu")) exp.grid_mu = g["mu"].get<std::vector<double>>();
    }
    exp.output_dir = j.value("output_dir", exp.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config error: ") + e.what());
  }
  return exp;
}

std::vector<FedConfig> ExperimentFile::expand_grid() const {
  std::vector<std::string> algs = grid_algorithm;
  if (algs.empty()) algs.push_back(to_string(fed.algorithm));
  std::vector<double> fracs = grid_client_fraction;
  if (fracs.empty()) fracs.push_back(fed.client_fraction);
  std::vector<int> epochs = grid_local_epochs;
  if (epochs.empty()) epochs.push_back(fed.local_epochs);
  std::vector<double> mus = grid_mu;
  if (mus.empty()) mus.push_back(fed.mu);

  std::vector<FedConfig> cells;
  for (const auto& a : algs) {
    for (double c : fracs) {
      for (int e : epochs) {
        for (double m : mus) {
          FedConfig cfg = fed;
          cfg.algorithm = algorithm_from_string(a);
          cfg.client_fraction = c;
          cfg.local_epochs = e;
          cfg.mu = cfg.algorithm == Algorithm::FedAvg ? 0.0 : m;
          cells.push_back(cfg);
        }
      }
    }
  }
  return cells;
}

int run_grid(const ExperimentFile& exp, int parallel) {
  if (parallel < 1) throw ConfigError("--parallel must be >= 1");
  for (const FedConfig& c : exp.expand_grid()) c.validate();

  ModelSpec spec;
  spec.kind = exp.model_kind;
  spec.feature_dim = exp.data.feature_dim;
  spec.hidden_dim = exp.hidden_dim;

  PreparedData data = prepare_data(exp.data, exp.fed.seed);
  spec.num_classes = static_cast<int>(data.class_order.size());
  spec.validate();

  std::vector<FedConfig> cells = exp.expand_grid();
  fs::create_directories(exp.output_dir);

  struct CellOutcome {
    std::string name;
    int best_round = 0;
    std::size_t rounds_run = 0;
    MetricsReport test;
  };
  std::vector<CellOutcome> outcomes(cells.size());
  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string first_error;

  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed.load()) return;
      const FedConfig& cfg = cells[i];
      try {
        auto partitions = build_partitions(data, cfg.n_clients, cfg.seed, exp.data);
        ExperimentResult res = run_experiment(cfg, spec, partitions, data.val, data.test);

        const std::string name = cell_name(cfg);
        fs::path dir = fs::path(exp.output_dir) / name;
        fs::create_directories(dir);
        write_rounds_jsonl(dir / "rounds.jsonl", res.rounds);

        json summary;
        summary["cell"] = name;
        summary["config"] = fed_config_to_json(cfg);
        summary["seed"] = cfg.seed;
        summary["best_round"] = res.best_round;
        summary["rounds_run"] = res.rounds.size();
        summary["test"] = {{"precision", res.test_metrics.weighted_precision},
                           {"recall", res.test_metrics.weighted_recall},
                           {"weighted_f1", res.test_metrics.weighted_f1}};
        summary["timestamp"] =
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
        std::ofstream sout(dir / "summary.json");
        sout << summary.dump(2) << "\n";

        save_model((dir / "model.json").string(),
                   SavedModel{spec, data.class_order, res.best_params});

        std::lock_guard<std::mutex> lock(io_mutex);
        outcomes[i] = {name, res.best_round, res.rounds.size(), res.test_metrics};
        log::info("cell %s: best round %d, test F1 %.4f", name.c_str(), res.best_round,
                  res.test_metrics.weighted_f1);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (!failed.exchange(true)) first_error = e.what();
        return;
      }
    }
  };

  if (parallel == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int t = 0; t < parallel; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failed.load()) throw DataError(first_error);

  std::printf("%-32s %10s %10s %10s %6s\n", "cell", "precision", "recall", "f1", "round");
  for (const CellOutcome& o : outcomes) {
    std::printf("%-32s %10.4f %10.4f %10.4f %6d\n", o.name.c_str(), o.test.weighted_precision,
                o.test.weighted_recall, o.test.weighted_f1, o.best_round);
  }
  return 0;
}

int run_eval(const std::string& model_path, const std::string& suite_path,
             const std::string& mapping_path, const std::string& out_dir) {
  SavedModel model = load_model(model_path);
  BinaryMapping mapping = BinaryMapping::load(mapping_path);
  mapping.validate_covers(model.class_order);
  std::vector<FunctionalCase> cases = load_functional_suite(suite_path);

  fs::create_directories(out_dir);
  std::ofstream pred_out(fs::path(out_dir) / "predictions.jsonl");
  if (!pred_out) throw DataError("cannot write predictions.jsonl");

  auto classify = [&](const std::string& text) {
    FeaturizedExample ex;
    ex.features = hash_features(text, model.spec.feature_dim);
    return model.class_order[static_cast<std::size_t>(predict(model.spec, model.params, ex))];
  };

  // Per-case predictions emitted before scoring so the accuracies can be
  // re-tallied independently from this file.
  FunctionalReport report = functional_eval(
      cases,
      [&](const std::string& text) {
        std::string cls = classify(text);
        return cls;
      },
      mapping);

  for (const FunctionalCase& fc : cases) {
    if (fc.functionality.empty()) continue;
    std::string cls = classify(fc.text);
    std::string binary = mapping.is_hate(cls) ? "hate" : "not-hate";
    json j;
    j["functionality"] = fc.functionality;
    j["gold"] = fc.gold;
    j["predicted_class"] = cls;
    j["predicted"] = binary;
    j["correct"] = binary == fc.gold;
    pred_out << j.dump() << "\n";
  }

  if (report.skipped_cases > 0)
    log::info("skipped %d cases with empty functionality", report.skipped_cases);

  json out;
  for (const auto& [name, g] : report.groups) {
    out[name] = {{"cases", g.cases}, {"correct", g.correct}, {"accuracy", g.accuracy}};
  }
  std::ofstream hout(fs::path(out_dir) / "hatecheck.json");
  hout << out.dump(2) << "\n";

  std::printf("%-24s %8s %8s %10s\n", "functionality", "cases", "correct", "accuracy");
  for (const auto& [name, g] : report.groups)
    std::printf("%-24s %8d %8d %9.1f%%\n", name.c_str(), g.cases, g.correct, 100.0 * g.accuracy);
  return 0;
}

}  // namespace fedsim
