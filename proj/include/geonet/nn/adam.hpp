#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geonet/nn/network.hpp"

namespace geonet::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators shaped like the parameter blocks.
class AdamState {
 public:
  AdamState(AdamConfig config, std::span<const std::size_t> block_sizes);
  explicit AdamState(const Network& net, AdamConfig config = {});

  const AdamConfig& config() const noexcept { return config_; }
  std::uint64_t step() const noexcept { return step_; }
  const std::vector<std::vector<double>>& first_moment() const noexcept { return m_; }
  const std::vector<std::vector<double>>& second_moment() const noexcept { return v_; }

  /// One bias-corrected Adam update of `params` in place.
  void update(std::span<const std::span<double>> params, const Gradients& grads);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

inline void adam_step(AdamState& state, std::span<const std::span<double>> params, const Gradients& grads) {
  state.update(params, grads);
}

}  // namespace geonet::nn
