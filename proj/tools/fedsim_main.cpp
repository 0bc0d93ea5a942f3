#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/runner.hpp"
#include "fedsim/synth.hpp"

namespace {

int dispatch(int argc, char** argv) {
  CLI::App app{"fedsim: federated text-classification simulator"};
  app.require_subcommand(1);

  std::string config_path;
  int parallel = 1;
  CLI::App* run = app.add_subcommand("run", "Run an experiment grid from a config file");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--parallel", parallel, "number of grid cells to run concurrently");

  std::string model_path, suite_path, mapping_path, eval_out = ".";
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a saved model on a functional suite");
  eval->add_option("--model", model_path, "model header (JSON)")->required();
  eval->add_option("--suite", suite_path, "functional suite (JSONL)")->required();
  eval->add_option("--mapping", mapping_path, "binary hate/not-hate mapping (JSON)")->required();
  eval->add_option("--out", eval_out, "output directory for predictions and report");

  std::string synth_out;
  fedsim::SynthConfig synth_cfg;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("--out", synth_out, "output corpus path (JSONL)")->required();
  synth->add_option("--docs", synth_cfg.n_docs, "number of documents");
  synth->add_option("--classes", synth_cfg.n_classes, "number of classes");
  synth->add_option("--vocab", synth_cfg.vocab_size, "vocabulary size");
  synth->add_option("--overlap", synth_cfg.overlap, "cross-class token overlap in [0,1]");
  synth->add_option("--seed", synth_cfg.seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    fedsim::ExperimentFile exp = fedsim::ExperimentFile::load(config_path);
    return fedsim::run_grid(exp, parallel);
  }
  if (eval->parsed()) return fedsim::run_eval(model_path, suite_path, mapping_path, eval_out);
  fedsim::make_synthetic(synth_out, synth_cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const fedsim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const fedsim::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const fedsim::NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
