#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedsim/param_vector.hpp"

namespace fedsim {

enum class ModelKind { LogisticRegression, Mlp };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

// Shape of a classifier; the parameter layout is a pure function of this.
struct ModelSpec {
  ModelKind kind = ModelKind::LogisticRegression;
  int feature_dim = 0;   // D
  int num_classes = 0;   // C
  int hidden_dim = 0;    // H, mlp only

  void validate() const;
  std::size_t param_count() const;

  // Segment offsets into the flat vector.
  // logreg: W [C x D] then b [C].
  // mlp:    W1 [H x D], b1 [H], W2 [C x H], b2 [C].
  std::size_t offset_w() const { return 0; }
  std::size_t offset_b() const;
  std::size_t offset_w2() const;
  std::size_t offset_b2() const;
};

// Sparse bag-of-hashed-words example. Feature pairs are (index, count),
// sorted by index, indices < D, counts > 0.
struct FeaturizedExample {
  std::vector<std::pair<std::uint32_t, double>> features;
  int label = 0;
};

struct LossReport {
  double loss = 0.0;                // mean cross-entropy + proximal component
  double proximal_component = 0.0;  // (mu/2) * ||params - anchor||^2
};

// Weights uniform(-0.05, 0.05) via counter-based hashing of (seed, index);
// biases zero. Bit-identical for identical (spec, seed).
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Class probabilities; softmax output, mlp uses a ReLU hidden layer.
std::vector<double> forward(const ModelSpec& spec, const ParamVector& params,
                            const FeaturizedExample& x);

// Mean cross-entropy over the batch plus the proximal penalty
// (mu/2)*||params - anchor||^2; gradient includes mu*(params - anchor).
std::pair<LossReport, ParamVector> local_loss_grad(const ModelSpec& spec,
                                                   const ParamVector& params,
                                                   std::span<const FeaturizedExample> batch,
                                                   double mu, const ParamVector& anchor);

// params - lr * gradient. Throws NumericError on non-finite gradient entries.
ParamVector sgd_step(const ParamVector& params, const ParamVector& gradient, double lr);

// Argmax class, ties broken by lowest index.
int predict(const ModelSpec& spec, const ParamVector& params, const FeaturizedExample& x);

}  // namespace fedsim
