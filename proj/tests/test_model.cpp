#include <doctest.h>

#include <cmath>

#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;

namespace {

ModelSpec logreg(int d, int c) { return ModelSpec{ModelKind::LogisticRegression, d, c, 0}; }
ModelSpec mlp(int d, int c, int h) { return ModelSpec{ModelKind::Mlp, d, c, h}; }

FeaturizedExample ex(std::vector<std::pair<std::uint32_t, double>> f, int label) {
  return FeaturizedExample{std::move(f), label};
}

std::vector<FeaturizedExample> random_batch(Rng& rng, int d, int c, int n) {
  std::vector<FeaturizedExample> batch;
  for (int i = 0; i < n; ++i) {
    FeaturizedExample e;
    for (int j = 0; j < d; ++j) {
      if (rng.next_double() < 0.6)
        e.features.emplace_back(static_cast<std::uint32_t>(j), 1.0 + rng.below(3));
    }
    if (e.features.empty()) e.features.emplace_back(0u, 1.0);
    e.label = static_cast<int>(rng.below(static_cast<std::uint64_t>(c)));
    batch.push_back(std::move(e));
  }
  return batch;
}

ParamVector random_params(Rng& rng, const ModelSpec& spec) {
  ParamVector p(spec.param_count());
  for (auto& v : p.values) v = rng.uniform(-0.5, 0.5);
  return p;
}

// Central finite differences on the scalar loss; the independent gradient oracle.
ParamVector fd_gradient(const ModelSpec& spec, const ParamVector& params,
                        const std::vector<FeaturizedExample>& batch, double mu,
                        const ParamVector& anchor, double h = 1e-5) {
  ParamVector g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamVector plus = params, minus = params;
    plus[i] += h;
    minus[i] -= h;
    double lp = local_loss_grad(spec, plus, batch, mu, anchor).first.loss;
    double lm = local_loss_grad(spec, minus, batch, mu, anchor).first.loss;
    g[i] = (lp - lm) / (2.0 * h);
  }
  return g;
}

double max_rel_error(const ParamVector& a, const ParamVector& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-8});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("init_params: length, zero biases, determinism") {
  auto spec = logreg(4, 2);
  ParamVector p = init_params(spec, 7);
  CHECK(p.size() == 10);
  CHECK(p[8] == 0.0);
  CHECK(p[9] == 0.0);
  CHECK(init_params(spec, 7) == p);
  CHECK_FALSE(init_params(spec, 8) == p);

  auto m = mlp(4, 2, 3);
  CHECK(init_params(m, 1).size() == 4 * 3 + 3 + 2 * 3 + 2);

  for (double v : p.values) {
    CHECK(v >= -0.05);
    CHECK(v < 0.05);
  }
}

TEST_CASE("forward: softmax basics") {
  auto spec = logreg(2, 2);
  ParamVector zero(spec.param_count());
  auto probs = forward(spec, zero, ex({{0, 1.0}}, 0));
  CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(probs[1] == doctest::Approx(0.5).epsilon(1e-12));

  // W = [[1,0],[0,1]], b = 0, x = {0:1} -> softmax([1,0])
  ParamVector p(spec.param_count());
  p[0] = 1.0;  // W[0][0]
  p[3] = 1.0;  // W[1][1]
  probs = forward(spec, p, ex({{0, 1.0}}, 0));
  CHECK(probs[0] == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(probs[1] == doctest::Approx(0.2689).epsilon(1e-4));

  // dominant row wins the argmax
  ParamVector q(spec.param_count());
  q[2] = 5.0;  // W[1][0]
  CHECK(predict(spec, q, ex({{0, 3.0}}, 0)) == 1);
}

TEST_CASE("forward: probabilities sum to 1 for random inputs") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    int d = 1 + static_cast<int>(rng.below(5));
    int c = 2 + static_cast<int>(rng.below(3));
    auto spec = trial % 2 == 0 ? logreg(d, c) : mlp(d, c, 1 + static_cast<int>(rng.below(4)));
    ParamVector p = random_params(rng, spec);
    auto batch = random_batch(rng, d, c, 1);
    auto probs = forward(spec, p, batch[0]);
    double sum = 0.0;
    for (double v : probs) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("forward: layout mismatch rejected") {
  auto spec = logreg(2, 2);
  ParamVector wrong(5);
  CHECK_THROWS_AS(forward(spec, wrong, ex({{0, 1.0}}, 0)), ConfigError);
}

TEST_CASE("local_loss_grad: mu = 0 degenerate and proximal identity") {
  Rng rng(3);
  auto spec = logreg(3, 2);
  ParamVector p = random_params(rng, spec);
  auto batch = random_batch(rng, 3, 2, 4);

  auto [rep0, g0] = local_loss_grad(spec, p, batch, 0.0, p);
  CHECK(rep0.proximal_component == 0.0);

  // params == anchor: mu contributes nothing, exactly
  auto [rep1, g1] = local_loss_grad(spec, p, batch, 0.7, p);
  CHECK(rep1.loss == rep0.loss);
  CHECK(rep1.proximal_component == 0.0);
  CHECK(g1 == g0);
}

TEST_CASE("local_loss_grad: proximal component value") {
  auto spec = logreg(2, 2);
  ParamVector p(spec.param_count());
  ParamVector anchor(spec.param_count());
  p[0] = 3.0;  // squared distance 9
  auto batch = std::vector<FeaturizedExample>{ex({{0, 1.0}}, 0)};
  double mu = 0.5;
  auto [rep, grad] = local_loss_grad(spec, p, batch, mu, anchor);
  CHECK(rep.proximal_component == doctest::Approx(0.5 * mu * 9.0).epsilon(1e-12));
}

TEST_CASE("local_loss_grad: finite-difference oracle (logreg and mlp)") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    int d = 2 + static_cast<int>(rng.below(4));  // up to 5
    int c = 2 + static_cast<int>(rng.below(2));  // up to 3
    auto spec = trial % 2 == 0 ? logreg(d, c) : mlp(d, c, 2);
    ParamVector p = random_params(rng, spec);
    ParamVector anchor = random_params(rng, spec);
    auto batch = random_batch(rng, d, c, 2);
    double mu = trial % 3 == 0 ? 0.1 : 0.0;
    auto [rep, analytic] = local_loss_grad(spec, p, batch, mu, anchor);
    ParamVector fd = fd_gradient(spec, p, batch, mu, anchor);
    CHECK(max_rel_error(analytic, fd) < 1e-4);
  }
}

TEST_CASE("local_loss_grad: empty batch rejected") {
  auto spec = logreg(2, 2);
  ParamVector p(spec.param_count());
  std::vector<FeaturizedExample> empty;
  CHECK_THROWS_AS(local_loss_grad(spec, p, empty, 0.0, p), DataError);
}

TEST_CASE("sgd_step: arithmetic and error paths") {
  ParamVector p(2);
  p[0] = 1.0;
  p[1] = 1.0;
  ParamVector g(2);
  g[0] = 2.0;
  g[1] = -2.0;
  ParamVector out = sgd_step(p, g, 0.5);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 2.0);

  ParamVector zero(2);
  CHECK(sgd_step(p, zero, 0.5) == p);

  ParamVector bad(2);
  bad[0] = std::nan("");
  CHECK_THROWS_AS(sgd_step(p, bad, 0.5), NumericError);
}

TEST_CASE("sgd: monotone loss decrease on a separable set") {
  auto spec = logreg(4, 2);
  std::vector<FeaturizedExample> data;
  for (int i = 0; i < 5; ++i) {
    data.push_back(ex({{0, 2.0}, {1, 1.0}}, 0));
    data.push_back(ex({{2, 2.0}, {3, 1.0}}, 1));
  }
  ParamVector p(spec.param_count());
  double prev = local_loss_grad(spec, p, data, 0.0, p).first.loss;
  for (int step = 0; step < 50; ++step) {
    auto [rep, grad] = local_loss_grad(spec, p, data, 0.0, p);
    p = sgd_step(p, grad, 0.01);
    double cur = local_loss_grad(spec, p, data, 0.0, p).first.loss;
    CHECK(cur < prev);
    prev = cur;
  }
}
