#include "fedsim/model.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "logistic_regression" || s == "logreg") return ModelKind::LogisticRegression;
  if (s == "mlp") return ModelKind::Mlp;
  throw ConfigError("unknown model kind: " + s);
}

std::string to_string(ModelKind k) {
  return k == ModelKind::LogisticRegression ? "logistic_regression" : "mlp";
}

void ModelSpec::validate() const {
  if (feature_dim <= 0) throw ConfigError("feature_dim must be positive");
  if (num_classes <= 0) throw ConfigError("num_classes must be positive");
  if (kind == ModelKind::Mlp && hidden_dim <= 0)
    throw ConfigError("hidden_dim must be positive for mlp");
}

std::size_t ModelSpec::param_count() const {
  const std::size_t d = static_cast<std::size_t>(feature_dim);
  const std::size_t c = static_cast<std::size_t>(num_classes);
  if (kind == ModelKind::LogisticRegression) return c * d + c;
  const std::size_t h = static_cast<std::size_t>(hidden_dim);
  return h * d + h + c * h + c;
}

std::size_t ModelSpec::offset_b() const {
  const std::size_t d = static_cast<std::size_t>(feature_dim);
  if (kind == ModelKind::LogisticRegression)
    return static_cast<std::size_t>(num_classes) * d;
  return static_cast<std::size_t>(hidden_dim) * d;
}

std::size_t ModelSpec::offset_w2() const {
  return offset_b() + static_cast<std::size_t>(hidden_dim);
}

std::size_t ModelSpec::offset_b2() const {
  return offset_w2() +
         static_cast<std::size_t>(num_classes) * static_cast<std::size_t>(hidden_dim);
}

namespace {

void check_layout(const ModelSpec& spec, const ParamVector& params) {
  if (params.size() != spec.param_count())
    throw ConfigError("parameter vector length does not match model spec");
}

double counter_uniform(std::uint64_t seed, std::uint64_t counter, double lo, double hi) {
  double u = static_cast<double>(scramble(seed, counter) >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

void softmax_inplace(std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

// Hidden pre-activations for the mlp.
std::vector<double> mlp_hidden(const ModelSpec& spec, const ParamVector& p,
                               const FeaturizedExample& x) {
  const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
  std::vector<double> a(static_cast<std::size_t>(spec.hidden_dim));
  const std::size_t b1 = spec.offset_b();
  for (std::size_t h = 0; h < a.size(); ++h) {
    double s = p[b1 + h];
    for (const auto& [idx, cnt] : x.features) s += p[h * d + idx] * cnt;
    a[h] = s;
  }
  return a;
}

std::vector<double> logits_of(const ModelSpec& spec, const ParamVector& p,
                              const FeaturizedExample& x, std::vector<double>* hidden_out) {
  const std::size_t c = static_cast<std::size_t>(spec.num_classes);
  std::vector<double> logits(c);
  if (spec.kind == ModelKind::LogisticRegression) {
    const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
    const std::size_t b = spec.offset_b();
    for (std::size_t k = 0; k < c; ++k) {
      double s = p[b + k];
      for (const auto& [idx, cnt] : x.features) s += p[k * d + idx] * cnt;
      logits[k] = s;
    }
    return logits;
  }
  const std::size_t h = static_cast<std::size_t>(spec.hidden_dim);
  std::vector<double> a = mlp_hidden(spec, p, x);
  std::vector<double> act(h);
  for (std::size_t j = 0; j < h; ++j) act[j] = a[j] > 0.0 ? a[j] : 0.0;
  const std::size_t w2 = spec.offset_w2();
  const std::size_t b2 = spec.offset_b2();
  for (std::size_t k = 0; k < c; ++k) {
    double s = p[b2 + k];
    for (std::size_t j = 0; j < h; ++j) s += p[w2 + k * h + j] * act[j];
    logits[k] = s;
  }
  if (hidden_out) *hidden_out = std::move(act);
  return logits;
}

}  // namespace

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParamVector p(spec.param_count());
  // Weight segments get uniform(-0.05, 0.05); bias segments stay zero.
  auto fill = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) p[i] = counter_uniform(seed, i, -0.05, 0.05);
  };
  if (spec.kind == ModelKind::LogisticRegression) {
    fill(0, spec.offset_b());
  } else {
    fill(0, spec.offset_b());
    fill(spec.offset_w2(), spec.offset_b2());
  }
  return p;
}

std::vector<double> forward(const ModelSpec& spec, const ParamVector& params,
                            const FeaturizedExample& x) {
  check_layout(spec, params);
  std::vector<double> logits = logits_of(spec, params, x, nullptr);
  softmax_inplace(logits);
  return logits;
}

int predict(const ModelSpec& spec, const ParamVector& params, const FeaturizedExample& x) {
  std::vector<double> probs = forward(spec, params, x);
  int best = 0;
  for (int k = 1; k < spec.num_classes; ++k) {
    if (probs[static_cast<std::size_t>(k)] > probs[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

std::pair<LossReport, ParamVector> local_loss_grad(const ModelSpec& spec,
                                                   const ParamVector& params,
                                                   std::span<const FeaturizedExample> batch,
                                                   double mu, const ParamVector& anchor) {
  check_layout(spec, params);
  if (batch.empty()) throw DataError("local_loss_grad: empty batch");
  if (!params.same_layout(anchor)) throw ConfigError("anchor layout mismatch");

  const std::size_t d = static_cast<std::size_t>(spec.feature_dim);
  const std::size_t c = static_cast<std::size_t>(spec.num_classes);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  ParamVector grad(params.size());
  double ce = 0.0;

  for (const FeaturizedExample& x : batch) {
    std::vector<double> hidden;
    std::vector<double> probs = logits_of(spec, params, x, &hidden);
    // log-softmax via the max trick for the loss term
    double mx = *std::max_element(probs.begin(), probs.end());
    double lse = 0.0;
    for (double v : probs) lse += std::exp(v - mx);
    ce += (mx + std::log(lse) - probs[static_cast<std::size_t>(x.label)]) * inv_n;
    softmax_inplace(probs);
    probs[static_cast<std::size_t>(x.label)] -= 1.0;  // dL/dlogits

    if (spec.kind == ModelKind::LogisticRegression) {
      const std::size_t b = spec.offset_b();
      for (std::size_t k = 0; k < c; ++k) {
        const double g = probs[k] * inv_n;
        grad[b + k] += g;
        for (const auto& [idx, cnt] : x.features) grad[k * d + idx] += g * cnt;
      }
    } else {
      const std::size_t h = static_cast<std::size_t>(spec.hidden_dim);
      const std::size_t w2 = spec.offset_w2();
      const std::size_t b2 = spec.offset_b2();
      const std::size_t b1 = spec.offset_b();
      std::vector<double> dhidden(h, 0.0);
      for (std::size_t k = 0; k < c; ++k) {
        const double g = probs[k] * inv_n;
        grad[b2 + k] += g;
        for (std::size_t j = 0; j < h; ++j) {
          grad[w2 + k * h + j] += g * hidden[j];
          dhidden[j] += probs[k] * params[w2 + k * h + j];
        }
      }
      for (std::size_t j = 0; j < h; ++j) {
        if (hidden[j] <= 0.0) continue;  // ReLU gate
        const double g = dhidden[j] * inv_n;
        grad[b1 + j] += g;
        for (const auto& [idx, cnt] : x.features) grad[j * d + idx] += g * cnt;
      }
    }
  }

  LossReport report;
  if (mu != 0.0) {
    report.proximal_component = 0.5 * mu * params.squared_distance(anchor);
    for (std::size_t i = 0; i < grad.size(); ++i)
      grad[i] += mu * (params[i] - anchor[i]);
  }
  report.loss = ce + report.proximal_component;
  return {report, std::move(grad)};
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& gradient, double lr) {
  if (!params.same_layout(gradient)) throw ConfigError("sgd_step layout mismatch");
  if (!gradient.all_finite()) throw NumericError("sgd_step: non-finite gradient");
  ParamVector out = params;
  out.add_scaled(gradient, -lr);
  return out;
}

}  // namespace fedsim
