#include "geonet/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>

namespace geonet::nn {

namespace {

void require_step(const GradientCheckOptions& options) {
  if (!(options.h >= 1e-8 && options.h <= 1e-4)) {
    throw GeoError(ErrorCode::InvalidConfig, "finite-difference step must lie in [1e-8, 1e-4]");
  }
}

void plant_fault(std::vector<double>& analytic, const GradientCheckOptions& options) {
  if (options.corrupt_index && *options.corrupt_index < analytic.size()) {
    analytic[*options.corrupt_index] *= 2.0;
  }
}

}  // namespace

GradientCheckReport compare_gradients(std::span<const double> analytic, std::span<const double> numeric,
                                      double tol) {
  if (analytic.size() != numeric.size()) throw GeoError(ErrorCode::ShapeMismatch, "gradient lengths differ");
  GradientCheckReport r;
  r.analytic.assign(analytic.begin(), analytic.end());
  r.numeric.assign(numeric.begin(), numeric.end());
  r.rel_errors.resize(analytic.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double b = numeric[i];
    const double rel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
    r.rel_errors[i] = rel;
    sum += rel;
    if (rel > r.max_rel_error) {
      r.max_rel_error = rel;
      r.worst_index = i;
    }
    if (rel > tol) r.flagged.push_back(i);
  }
  if (!analytic.empty()) r.mean_rel_error = sum / static_cast<double>(analytic.size());
  return r;
}

GradientCheckReport gradient_check(Network& net, const LossSpec& spec, std::span<const double> x,
                                   const GradientCheckOptions& options) {
  require_step(options);
  const ForwardPass fp = net.run(x);
  const LossValue lv = loss_and_grad(spec, fp.output());
  std::vector<double> analytic;
  for (const auto& block : net.backward(fp, lv.grad)) analytic.insert(analytic.end(), block.begin(), block.end());
  plant_fault(analytic, options);

  auto loss_at = [&] { return loss_and_grad(spec, net.run(x).output()).loss; };
  std::vector<double> numeric;
  numeric.reserve(analytic.size());
  for (std::span<double> block : net.parameter_blocks()) {
    for (double& p : block) {
      const double saved = p;
      p = saved + options.h;
      const double plus = loss_at();
      p = saved - options.h;
      const double minus = loss_at();
      p = saved;
      numeric.push_back((plus - minus) / (2.0 * options.h));
    }
  }
  return compare_gradients(analytic, numeric, options.tol);
}

GradientCheckReport check_loss_gradient(const LossSpec& spec, std::span<const double> output,
                                        const GradientCheckOptions& options) {
  require_step(options);
  std::vector<double> analytic = loss_and_grad(spec, output).grad;
  plant_fault(analytic, options);
  std::vector<double> probe(output.begin(), output.end());
  std::vector<double> numeric(probe.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + options.h;
    const double plus = loss_and_grad(spec, probe).loss;
    probe[i] = saved - options.h;
    const double minus = loss_and_grad(spec, probe).loss;
    probe[i] = saved;
    numeric[i] = (plus - minus) / (2.0 * options.h);
  }
  return compare_gradients(analytic, numeric, options.tol);
}

}  // namespace geonet::nn
