#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "smsvm/objective.hpp"
#include "smsvm/rng.hpp"

namespace smsvm {

enum class SgdOptimizer { nesterov, adadelta, adam };

inline const char* to_string(SgdOptimizer o) {
  switch (o) {
    case SgdOptimizer::nesterov: return "nesterov";
    case SgdOptimizer::adadelta: return "adadelta";
    case SgdOptimizer::adam: return "adam";
  }
  return "?";
}

struct SgdConfig {
  SgdOptimizer optimizer = SgdOptimizer::nesterov;
  double learning_rate = 0.001;  // Nesterov and Adam
  double rho = 0.9;              // Nesterov momentum decay / AdaDelta gradient decay
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.8;
  double epsilon = 1e-8;
  Index batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("learning rate must be > 0");
    if (!(rho >= 0 && rho < 1)) throw std::invalid_argument("rho must be in [0,1)");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw std::invalid_argument("adam-beta1 must be in [0,1)");
    if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw std::invalid_argument("adam-beta2 must be in [0,1)");
    if (!(epsilon > 0)) throw std::invalid_argument("epsilon must be > 0");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  }
};

// Fixed subgradient selection for f = lambda/2 ||w||^2 + mean hinge + mu ||w||_1:
// the hinge indicator is 1[u > 0] (zero at the kink) and sign(0) = 0.
inline Vector subgradient(const Vector& w, const Dataset& d, const std::vector<Index>& batch,
                          const Hyperparams& h) {
  if (batch.empty()) throw std::invalid_argument("subgradient: empty batch");
  Vector g = h.lambda * w;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (Index i : batch) {
    const double u = 1.0 - d.y[i] * d.X.row(i).dot(w);
    if (u > 0) g.noalias() -= inv_b * d.y[i] * d.X.row(i).transpose();
  }
  for (Index j = 0; j < w.size(); ++j) {
    g[j] += h.mu * (w[j] > 0 ? 1.0 : (w[j] < 0 ? -1.0 : 0.0));
  }
  return g;
}

inline Vector subgradient(const Vector& w, const Dataset& d, const Hyperparams& h) {
  std::vector<Index> all(static_cast<std::size_t>(d.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  return subgradient(w, d, all, h);
}

// Minibatch subgradient descent with the chosen update rule. Minibatches are
// a fresh deterministic shuffle per epoch; everything is a pure function of
// (data, h, cfg).
inline Vector sgd_train(const Dataset& d, const Hyperparams& h, const SgdConfig& cfg) {
  cfg.validate();
  const Index n = d.rows(), m = d.cols();
  Vector w = Vector::Zero(m);

  Vector velocity = Vector::Zero(m);     // Nesterov
  Vector grad_sq = Vector::Zero(m);      // AdaDelta E[g^2], Adam second moment
  Vector delta_sq = Vector::Zero(m);     // AdaDelta E[dw^2]
  Vector first_moment = Vector::Zero(m); // Adam
  long t = 0;

  Xoshiro256pp rng(cfg.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    deterministic_shuffle(order, rng);
    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index stop = std::min(n, start + cfg.batch_size);
      std::vector<Index> batch(order.begin() + start, order.begin() + stop);
      ++t;

      switch (cfg.optimizer) {
        case SgdOptimizer::nesterov: {
          // lookahead gradient at w + rho * v
          const Vector g = subgradient(w + cfg.rho * velocity, d, batch, h);
          velocity = cfg.rho * velocity - cfg.learning_rate * g;
          w += velocity;
          break;
        }
        case SgdOptimizer::adadelta: {
          const Vector g = subgradient(w, d, batch, h);
          grad_sq = cfg.rho * grad_sq + (1.0 - cfg.rho) * g.cwiseProduct(g);
          const Vector step = -((delta_sq.array() + cfg.epsilon).sqrt() /
                                (grad_sq.array() + cfg.epsilon).sqrt() * g.array())
                                  .matrix();
          delta_sq = cfg.rho * delta_sq + (1.0 - cfg.rho) * step.cwiseProduct(step);
          w += step;
          break;
        }
        case SgdOptimizer::adam: {
          const Vector g = subgradient(w, d, batch, h);
          first_moment = cfg.adam_beta1 * first_moment + (1.0 - cfg.adam_beta1) * g;
          grad_sq = cfg.adam_beta2 * grad_sq + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
          const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
          const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
          w.array() -= cfg.learning_rate * (first_moment.array() / bc1) /
                       ((grad_sq.array() / bc2).sqrt() + cfg.epsilon);
          break;
        }
      }
      if (!w.allFinite()) {
        throw std::runtime_error("sgd: non-finite update (learning rate too large?)");
      }
    }
  }
  return w;
}

}  // namespace smsvm
