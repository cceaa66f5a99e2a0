#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

#include "geonet/numkernel.hpp"
#include "geonet/sphere.hpp"

namespace geonet::nn {

/// Bound on |norm - 1| for SphereNormalize outputs and on |u^T y| for
/// TangentProject outputs; violating it during a forward pass is an error.
inline constexpr double kConstraintTol = 1e-12;

/// y = W x + b, W stored out x in.
struct Dense {
  Matrix weights;
  std::vector<double> bias;

  std::size_t in() const noexcept { return weights.cols(); }
  std::size_t out() const noexcept { return weights.rows(); }
};

struct ReLU {};

/// y = o / |o|
struct SphereNormalize {};

/// y = (I - u u^T) o
struct TangentProject {
  sphere::UnitVector pole;
};

using Layer = std::variant<Dense, ReLU, SphereNormalize, TangentProject>;

/// One gradient buffer per parameter block, in Network::parameter_blocks() order.
using Gradients = std::vector<std::vector<double>>;

/// Activations of one forward pass: activations[0] is the input and
/// activations[i + 1] the output of layer i.
struct ForwardPass {
  std::vector<std::vector<double>> activations;
  double max_unit_norm_residual = 0.0;
  double max_tangency_residual = 0.0;

  std::span<const double> output() const { return activations.back(); }
};

class Network {
 public:
  Network(std::size_t input_dim, std::uint64_t seed);

  /// Appends a Dense layer with He-uniform weights drawn from the seeded stream
  /// and zero bias.
  Network& add_dense(std::size_t out);
  Network& add_dense(Matrix weights, std::vector<double> bias);
  Network& add_relu();
  Network& add_sphere_normalize();
  Network& add_tangent_project(sphere::UnitVector pole);

  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t output_dim() const noexcept { return output_dim_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  /// Stateless forward pass.
  ForwardPass run(std::span<const double> x) const;
  /// Parameter gradients given dLoss/dOutput for the pass `fp`.
  Gradients backward(const ForwardPass& fp, std::span<const double> grad_out) const;
  /// grads += scale * backward(fp, grad_out), without temporaries.
  void backward_into(const ForwardPass& fp, std::span<const double> grad_out, Gradients& grads,
                     double scale) const;

  /// Forward pass that caches its activations for backward(grad_out).
  std::vector<double> forward(std::span<const double> x);
  /// Uses the cached pass; throws StaleCache if there is none or parameters
  /// were handed out for mutation since.
  Gradients backward(std::span<const double> grad_out) const;
  const std::optional<ForwardPass>& cached_pass() const noexcept { return cache_; }

  /// Mutable views of every weight matrix and bias vector. Invalidates the cache.
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::size_t> parameter_shapes() const;
  std::size_t parameter_count() const;
  Gradients zero_gradients() const;

 private:
  std::size_t input_dim_;
  std::size_t output_dim_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  std::vector<Layer> layers_;
  std::optional<ForwardPass> cache_;
};

/// Input -> [Dense -> ReLU] per hidden width -> Dense(output_dim).
Network make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
                 std::uint64_t seed);

void accumulate(Gradients& into, const Gradients& g, double scale = 1.0);

}  // namespace geonet::nn
