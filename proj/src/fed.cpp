#include "fedsim/fed.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/errors.hpp"

namespace fedsim {

namespace {
// Domain tags so the sampling and client streams never collide.
constexpr std::uint64_t kSampleTag = 0x53414d50ULL;  // "SAMP"
constexpr std::uint64_t kClientTag = 0x434c4e54ULL;  // "CLNT"
}  // namespace

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "fedavg") return Algorithm::FedAvg;
  if (s == "fedprox") return Algorithm::FedProx;
  if (s == "fedopt") return Algorithm::FedOpt;
  throw ConfigError("unknown algorithm: " + s);
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::FedAvg: return "fedavg";
    case Algorithm::FedProx: return "fedprox";
    default: return "fedopt";
  }
}

ServerOpt server_opt_from_string(const std::string& s) {
  if (s == "sgd") return ServerOpt::Sgd;
  if (s == "adam") return ServerOpt::Adam;
  if (s == "adagrad") return ServerOpt::Adagrad;
  throw ConfigError("unknown server optimizer: " + s);
}

std::string to_string(ServerOpt o) {
  switch (o) {
    case ServerOpt::Sgd: return "sgd";
    case ServerOpt::Adam: return "adam";
    default: return "adagrad";
  }
}

void FedConfig::validate() const {
  if (n_clients < 1) throw ConfigError("n_clients must be >= 1");
  if (!(client_fraction > 0.0 && client_fraction <= 1.0))
    throw ConfigError("client_fraction must be in (0, 1]");
  if (local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (client_lr < 0.0) throw ConfigError("client_lr must be non-negative");
  if (mu < 0.0) throw ConfigError("mu must be non-negative");
  if (algorithm == Algorithm::FedAvg && mu != 0.0)
    throw ConfigError("fedavg requires mu = 0 (use fedprox for mu > 0)");
  if (server_lr <= 0.0) throw ConfigError("server_lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("beta1/beta2 must be in [0, 1)");
  if (tau <= 0.0) throw ConfigError("tau must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (clients_per_round() < 1) throw ConfigError("client fraction selects zero clients");
}

int FedConfig::clients_per_round() const {
  return static_cast<int>(std::ceil(client_fraction * static_cast<double>(n_clients)));
}

std::vector<int> sample_clients(int n_clients, double fraction, Rng& rng) {
  const int k = static_cast<int>(std::ceil(fraction * static_cast<double>(n_clients)));
  std::vector<int> ids(static_cast<std::size_t>(n_clients));
  for (int i = 0; i < n_clients; ++i) ids[static_cast<std::size_t>(i)] = i;
  // Partial Fisher-Yates: the first k entries are the sample.
  for (int i = 0; i < k; ++i) {
    std::size_t j = static_cast<std::size_t>(i) +
                    static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n_clients - i)));
    std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
  }
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

ClientUpdate client_train(const ParamVector& global, const ModelSpec& spec,
                          const std::vector<FeaturizedExample>& examples, const FedConfig& cfg,
                          int client_id, std::uint64_t client_seed) {
  if (examples.empty()) throw DataError("client_train: empty partition");
  const double mu = cfg.algorithm == Algorithm::FedAvg ? 0.0 : cfg.mu;

  ParamVector local = global;
  Rng rng(client_seed);
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double loss_sum = 0.0;
  std::size_t steps = 0;
  std::vector<FeaturizedExample> batch;
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t end = std::min(start + bs, order.size());
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      auto [report, grad] = local_loss_grad(spec, local, batch, mu, global);
      if (!std::isfinite(report.loss))
        throw NumericError("client " + std::to_string(client_id) +
                           ": non-finite loss (learning rate too large?)");
      local = sgd_step(local, grad, cfg.client_lr);
      loss_sum += report.loss;
      ++steps;
    }
  }
  return ClientUpdate{client_id, std::move(local), examples.size(),
                      loss_sum / static_cast<double>(steps)};
}

ParamVector aggregate_weighted(const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw ConfigError("aggregate_weighted: no updates");
  std::vector<const ClientUpdate*> sorted;
  sorted.reserve(updates.size());
  for (const auto& u : updates) sorted.push_back(&u);
  std::sort(sorted.begin(), sorted.end(),
            [](const ClientUpdate* a, const ClientUpdate* b) { return a->client_id < b->client_id; });

  if (updates.size() == 1) return updates.front().params;  // bit-identical pass-through

  double total = 0.0;
  for (const auto* u : sorted) total += static_cast<double>(u->n_samples);

  ParamVector acc(sorted.front()->params.size());
  for (const auto* u : sorted) {
    if (!u->params.same_layout(acc)) throw ConfigError("aggregate_weighted: layout mismatch");
    acc.add_scaled(u->params, static_cast<double>(u->n_samples) / total);
  }
  return acc;
}

ServerState server_step_fedopt(const ServerState& state, const std::vector<ClientUpdate>& updates,
                               const FedConfig& cfg) {
  ParamVector target = aggregate_weighted(updates);
  if (!target.same_layout(state.params)) throw ConfigError("server step: layout mismatch");

  ServerState next = state;
  next.round = state.round + 1;
  const std::size_t n = target.size();

  switch (cfg.server_optimizer) {
    case ServerOpt::Sgd:
      // (1-lr)*params + lr*target == params + lr*delta, and reduces exactly
      // to the aggregate when lr == 1.
      for (std::size_t i = 0; i < n; ++i)
        next.params[i] = (1.0 - cfg.server_lr) * state.params[i] + cfg.server_lr * target[i];
      break;
    case ServerOpt::Adam:
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = target[i] - state.params[i];
        next.momentum[i] = cfg.beta1 * state.momentum[i] + (1.0 - cfg.beta1) * delta;
        next.second_moment[i] =
            cfg.beta2 * state.second_moment[i] + (1.0 - cfg.beta2) * delta * delta;
        next.params[i] = state.params[i] +
                         cfg.server_lr * next.momentum[i] /
                             (std::sqrt(next.second_moment[i]) + cfg.tau);
      }
      break;
    case ServerOpt::Adagrad:
      for (std::size_t i = 0; i < n; ++i) {
        const double delta = target[i] - state.params[i];
        next.second_moment[i] = state.second_moment[i] + delta * delta;
        next.params[i] =
            state.params[i] + cfg.server_lr * delta / (std::sqrt(next.second_moment[i]) + cfg.tau);
      }
      break;
  }
  if (!next.params.all_finite()) throw NumericError("server step produced non-finite parameters");
  return next;
}

MetricsReport evaluate(const ModelSpec& spec, const ParamVector& params,
                       const std::vector<FeaturizedExample>& examples) {
  std::vector<int> truth, pred;
  truth.reserve(examples.size());
  pred.reserve(examples.size());
  for (const auto& ex : examples) {
    truth.push_back(ex.label);
    pred.push_back(predict(spec, params, ex));
  }
  return weighted_metrics(confusion(truth, pred, spec.num_classes));
}

ExperimentResult run_experiment(const FedConfig& cfg, const ModelSpec& spec,
                                const std::vector<std::vector<FeaturizedExample>>& partitions,
                                const std::vector<FeaturizedExample>& val_set,
                                const std::vector<FeaturizedExample>& test_set) {
  cfg.validate();
  spec.validate();
  if (partitions.size() != static_cast<std::size_t>(cfg.n_clients))
    throw ConfigError("partition count does not match n_clients");

  ServerState state;
  state.params = init_params(spec, cfg.seed);
  state.momentum = ParamVector(state.params.size());
  state.second_moment = ParamVector(state.params.size());

  ExperimentResult result;
  double best_f1 = -1.0;
  int stall = 0;

  for (int round = 1; round <= cfg.rounds; ++round) {
    Rng sample_rng(mix_seed({cfg.seed, static_cast<std::uint64_t>(round), kSampleTag}));
    std::vector<int> sampled = sample_clients(cfg.n_clients, cfg.client_fraction, sample_rng);
    std::sort(sampled.begin(), sampled.end());

    std::vector<ClientUpdate> updates;
    updates.reserve(sampled.size());
    double loss_sum = 0.0;
    for (int cid : sampled) {
      std::uint64_t cseed = mix_seed({cfg.seed, static_cast<std::uint64_t>(round),
                                      static_cast<std::uint64_t>(cid), kClientTag});
      updates.push_back(client_train(state.params, spec,
                                     partitions[static_cast<std::size_t>(cid)], cfg, cid, cseed));
      loss_sum += updates.back().mean_train_loss;
    }

    if (cfg.algorithm == Algorithm::FedOpt) {
      state = server_step_fedopt(state, updates, cfg);
    } else {
      state.params = aggregate_weighted(updates);
      ++state.round;
    }

    MetricsReport val = evaluate(spec, state.params, val_set);
    RoundRecord rec;
    rec.round = round;
    rec.sampled_clients = sampled;
    rec.mean_train_loss = loss_sum / static_cast<double>(updates.size());
    rec.val_precision = val.weighted_precision;
    rec.val_recall = val.weighted_recall;
    rec.val_weighted_f1 = val.weighted_f1;
    result.rounds.push_back(std::move(rec));

    if (val.weighted_f1 > best_f1) {
      best_f1 = val.weighted_f1;
      result.best_params = state.params;
      result.best_round = round;
      stall = 0;
    } else if (++stall >= cfg.patience) {
      break;
    }
  }

  result.test_metrics = evaluate(spec, result.best_params, test_set);
  return result;
}

}  // namespace fedsim
