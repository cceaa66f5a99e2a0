#include "geonet/nn/adam.hpp"

#include <cmath>
#include <string>

namespace geonet::nn {

AdamState::AdamState(AdamConfig config, std::span<const std::size_t> block_sizes) : config_(config) {
  if (!(config.lr > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 ||
      config.beta2 >= 1.0 || !(config.eps > 0.0)) {
    throw GeoError(ErrorCode::InvalidConfig, "invalid Adam hyperparameters");
  }
  for (std::size_t s : block_sizes) {
    m_.emplace_back(s, 0.0);
    v_.emplace_back(s, 0.0);
  }
}

AdamState::AdamState(const Network& net, AdamConfig config)
    : AdamState(config, net.parameter_shapes()) {}

void AdamState::update(std::span<const std::span<double>> params, const Gradients& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw GeoError(ErrorCode::ShapeMismatch, "Adam: expected " + std::to_string(m_.size()) + " parameter blocks");
  }
  for (std::size_t b = 0; b < m_.size(); ++b) {
    if (params[b].size() != m_[b].size() || grads[b].size() != m_[b].size()) {
      throw GeoError(ErrorCode::ShapeMismatch, "Adam: block " + std::to_string(b) + " size mismatch");
    }
  }

  ++step_;
  const double t = static_cast<double>(step_);
  const double bc1 = 1.0 - std::pow(config_.beta1, t);
  const double bc2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t b = 0; b < m_.size(); ++b) {
    auto& m = m_[b];
    auto& v = v_[b];
    const auto& g = grads[b];
    auto p = params[b];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace geonet::nn
