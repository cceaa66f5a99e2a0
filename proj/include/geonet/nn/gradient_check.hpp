#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "geonet/nn/loss.hpp"
#include "geonet/nn/network.hpp"

namespace geonet::nn {

struct GradientCheckOptions {
  double h = 1e-6;
  double tol = 1e-4;
  /// Test hook: doubles this entry of the analytic gradient (flat index)
  /// before comparison, to prove the checker notices a wrong gradient.
  std::optional<std::size_t> corrupt_index;
};

struct GradientCheckReport {
  /// |a - b| / max(|a|, |b|, 1e-8) per flat parameter index.
  std::vector<double> rel_errors;
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
  std::size_t worst_index = 0;
  /// Flat indices whose relative error exceeds the tolerance.
  std::vector<std::size_t> flagged;

  bool passed() const noexcept { return flagged.empty(); }
};

GradientCheckReport compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                      double tol);

/// Central differences over every network parameter against backprop of
/// loss_and_grad(spec, net(x)).
GradientCheckReport gradient_check(Network& net, const LossSpec& spec, std::span<const double> x,
                                   const GradientCheckOptions& options = {});

/// Central differences of the loss with respect to its input vector.
GradientCheckReport check_loss_gradient(const LossSpec& spec, std::span<const double> output,
                                        const GradientCheckOptions& options = {});

}  // namespace geonet::nn
