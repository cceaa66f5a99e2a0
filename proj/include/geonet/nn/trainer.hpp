#pragma once

#include <span>

#include "geonet/nn/adam.hpp"
#include "geonet/nn/loss.hpp"
#include "geonet/nn/network.hpp"

namespace geonet::nn {

struct Example {
  std::span<const double> input;
  LossSpec loss;
};

struct BatchResult {
  double mean_loss = 0.0;
  double max_unit_norm_residual = 0.0;
  double max_tangency_residual = 0.0;
};

/// Loss and parameter gradient averaged over the batch. Samples are
/// accumulated in index order, so the result does not depend on scheduling.
BatchResult batch_gradient(const Network& net, std::span<const Example> batch, Gradients& grads);

/// batch_gradient followed by one Adam update.
BatchResult train_batch(Network& net, AdamState& adam, std::span<const Example> batch);

}  // namespace geonet::nn
