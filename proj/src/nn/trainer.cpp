#include "geonet/nn/trainer.hpp"

#include <algorithm>

namespace geonet::nn {

BatchResult batch_gradient(const Network& net, std::span<const Example> batch, Gradients& grads) {
  if (batch.empty()) throw GeoError(ErrorCode::InvalidConfig, "empty batch");
  grads = net.zero_gradients();
  const double scale = 1.0 / static_cast<double>(batch.size());
  BatchResult result;
  for (const Example& ex : batch) {
    const ForwardPass fp = net.run(ex.input);
    const LossValue lv = loss_and_grad(ex.loss, fp.output());
    net.backward_into(fp, lv.grad, grads, scale);
    result.mean_loss += lv.loss * scale;
    result.max_unit_norm_residual = std::max(result.max_unit_norm_residual, fp.max_unit_norm_residual);
    result.max_tangency_residual = std::max(result.max_tangency_residual, fp.max_tangency_residual);
  }
  return result;
}

BatchResult train_batch(Network& net, AdamState& adam, std::span<const Example> batch) {
  Gradients grads;
  const BatchResult result = batch_gradient(net, batch, grads);
  const auto params = net.parameter_blocks();
  adam.update(params, grads);
  return result;
}

}  // namespace geonet::nn
