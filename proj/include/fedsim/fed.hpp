#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/metrics.hpp"
#include "fedsim/model.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class Algorithm { FedAvg, FedProx, FedOpt };
enum class ServerOpt { Sgd, Adam, Adagrad };

Algorithm algorithm_from_string(const std::string& s);
std::string to_string(Algorithm a);
ServerOpt server_opt_from_string(const std::string& s);
std::string to_string(ServerOpt o);

struct FedConfig {
  Algorithm algorithm = Algorithm::FedAvg;
  int n_clients = 100;
  double client_fraction = 0.1;
  int local_epochs = 1;
  int rounds = 300;
  double client_lr = 0.1;
  double mu = 0.0;                         // fedprox proximal coefficient
  ServerOpt server_optimizer = ServerOpt::Adam;  // fedopt only
  double server_lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double tau = 1e-8;
  int batch_size = 32;
  int patience = 10;
  std::uint64_t seed = 0;

  void validate() const;
  int clients_per_round() const;  // ceil(fraction * n_clients)
};

struct ClientUpdate {
  int client_id = 0;
  ParamVector params;
  std::size_t n_samples = 0;
  double mean_train_loss = 0.0;  // mean per-step loss over local training
};

struct ServerState {
  ParamVector params;
  ParamVector momentum;       // m
  ParamVector second_moment;  // v
  int round = 0;
};

struct RoundRecord {
  int round = 0;
  std::vector<int> sampled_clients;
  double mean_train_loss = 0.0;
  double val_precision = 0.0;
  double val_recall = 0.0;
  double val_weighted_f1 = 0.0;
};

struct ExperimentResult {
  ParamVector best_params;
  int best_round = 0;
  std::vector<RoundRecord> rounds;
  MetricsReport test_metrics;
};

// ceil(fraction*n) distinct ids, uniform without replacement.
std::vector<int> sample_clients(int n_clients, double fraction, Rng& rng);

// Local training: start from `global`, run local_epochs of minibatch SGD on
// the proximal objective anchored at `global`; per-epoch order from client_rng.
ClientUpdate client_train(const ParamVector& global, const ModelSpec& spec,
                          const std::vector<FeaturizedExample>& examples, const FedConfig& cfg,
                          int client_id, std::uint64_t client_seed);

// Sample-count-weighted average, reduced in ascending client_id order.
ParamVector aggregate_weighted(const std::vector<ClientUpdate>& updates);

// Applies one server optimizer step on the pseudo-gradient
// delta = aggregate_weighted(updates) - state.params.
ServerState server_step_fedopt(const ServerState& state, const std::vector<ClientUpdate>& updates,
                               const FedConfig& cfg);

// Full protocol: sampling, local training, aggregation, validation and early
// stopping on weighted val F1 (strict improvement, ties keep the earlier round).
ExperimentResult run_experiment(const FedConfig& cfg, const ModelSpec& spec,
                                const std::vector<std::vector<FeaturizedExample>>& partitions,
                                const std::vector<FeaturizedExample>& val_set,
                                const std::vector<FeaturizedExample>& test_set);

// Argmax predictions + support-weighted metrics over a labeled set.
MetricsReport evaluate(const ModelSpec& spec, const ParamVector& params,
                       const std::vector<FeaturizedExample>& examples);

}  // namespace fedsim
