#include "geonet/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "geonet/vector_ops.hpp"

namespace geonet::nn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<double> project_out(std::span<const double> pole, std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  const double along = dot(pole, out);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= along * pole[i];
  return out;
}

}  // namespace

Network::Network(std::size_t input_dim, std::uint64_t seed)
    : input_dim_(input_dim), output_dim_(input_dim), seed_(seed), rng_(seed) {
  if (input_dim == 0) throw GeoError(ErrorCode::DimensionMismatch, "network input dim must be positive");
}

Network& Network::add_dense(std::size_t out) {
  if (out == 0) throw GeoError(ErrorCode::DimensionMismatch, "dense layer width must be positive");
  const std::size_t in = output_dim_;
  const double limit = std::sqrt(6.0 / static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(out, in);
  for (double& x : w.data()) x = dist(rng_);
  return add_dense(std::move(w), std::vector<double>(out, 0.0));
}

Network& Network::add_dense(Matrix weights, std::vector<double> bias) {
  if (weights.cols() != output_dim_ || weights.rows() != bias.size() || bias.empty()) {
    throw GeoError(ErrorCode::DimensionMismatch,
                   "dense layer " + std::to_string(weights.rows()) + "x" + std::to_string(weights.cols()) +
                       " does not follow a layer of width " + std::to_string(output_dim_));
  }
  output_dim_ = weights.rows();
  layers_.emplace_back(Dense{std::move(weights), std::move(bias)});
  cache_.reset();
  return *this;
}

Network& Network::add_relu() {
  layers_.emplace_back(ReLU{});
  return *this;
}

Network& Network::add_sphere_normalize() {
  layers_.emplace_back(SphereNormalize{});
  return *this;
}

Network& Network::add_tangent_project(sphere::UnitVector pole) {
  require_same_length(pole.dim(), output_dim_, "add_tangent_project");
  layers_.emplace_back(TangentProject{std::move(pole)});
  return *this;
}

ForwardPass Network::run(std::span<const double> x) const {
  require_same_length(x.size(), input_dim_, "Network::run");
  ForwardPass fp;
  fp.activations.reserve(layers_.size() + 1);
  fp.activations.emplace_back(x.begin(), x.end());
  for (const Layer& layer : layers_) {
    const std::vector<double>& in = fp.activations.back();
    std::vector<double> out = std::visit(
        overloaded{
            [&](const Dense& l) {
              std::vector<double> y(l.bias);
              for (std::size_t r = 0; r < l.out(); ++r) {
                auto wr = l.weights.row(r);
                double s = 0.0;
                for (std::size_t c = 0; c < in.size(); ++c) s += wr[c] * in[c];
                y[r] += s;
              }
              return y;
            },
            [&](const ReLU&) {
              std::vector<double> y(in);
              for (double& v : y) v = v > 0.0 ? v : 0.0;
              return y;
            },
            [&](const SphereNormalize&) {
              const double n = norm2(in);
              if (!(n > 0.0) || !std::isfinite(n)) {
                throw GeoError(ErrorCode::ConstraintViolated, "cannot normalize output of norm " + std::to_string(n));
              }
              std::vector<double> y(in);
              for (double& v : y) v /= n;
              const double resid = std::abs(norm2(y) - 1.0);
              if (resid > kConstraintTol) {
                throw GeoError(ErrorCode::ConstraintViolated, "normalized output off the sphere by " + std::to_string(resid));
              }
              fp.max_unit_norm_residual = std::max(fp.max_unit_norm_residual, resid);
              return y;
            },
            [&](const TangentProject& l) {
              std::vector<double> y = project_out(l.pole.coords(), in);
              y = project_out(l.pole.coords(), y);
              const double resid = std::abs(dot(l.pole.coords(), y));
              if (resid > kConstraintTol) {
                throw GeoError(ErrorCode::ConstraintViolated, "projected output has pole component " + std::to_string(resid));
              }
              fp.max_tangency_residual = std::max(fp.max_tangency_residual, resid);
              return y;
            },
        },
        layer);
    fp.activations.push_back(std::move(out));
  }
  return fp;
}

Gradients Network::backward(const ForwardPass& fp, std::span<const double> grad_out) const {
  Gradients grads = zero_gradients();
  backward_into(fp, grad_out, grads, 1.0);
  return grads;
}

void Network::backward_into(const ForwardPass& fp, std::span<const double> grad_out, Gradients& grads,
                            double scale) const {
  if (fp.activations.size() != layers_.size() + 1) {
    throw GeoError(ErrorCode::StaleCache, "forward pass does not match this network");
  }
  require_same_length(grad_out.size(), output_dim_, "Network::backward");
  const auto shapes = parameter_shapes();
  if (grads.size() != shapes.size()) throw GeoError(ErrorCode::ShapeMismatch, "gradient block count");
  for (std::size_t b = 0; b < shapes.size(); ++b) {
    if (grads[b].size() != shapes[b]) throw GeoError(ErrorCode::ShapeMismatch, "gradient block size");
  }

  std::size_t block = grads.size();
  std::vector<double> g(grad_out.begin(), grad_out.end());
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const std::vector<double>& in = fp.activations[li];
    const std::vector<double>& out = fp.activations[li + 1];
    std::visit(
        overloaded{
            [&](const Dense& l) {
              block -= 2;
              std::vector<double>& dw = grads[block];
              std::vector<double>& db = grads[block + 1];
              std::vector<double> gin(l.in(), 0.0);
              for (std::size_t r = 0; r < l.out(); ++r) {
                const double gr = g[r];
                if (gr == 0.0) continue;
                const double sgr = scale * gr;
                db[r] += sgr;
                auto wr = l.weights.row(r);
                double* dwr = dw.data() + r * l.in();
                for (std::size_t c = 0; c < l.in(); ++c) {
                  dwr[c] += sgr * in[c];
                  gin[c] += wr[c] * gr;
                }
              }
              g = std::move(gin);
            },
            [&](const ReLU&) {
              for (std::size_t i = 0; i < g.size(); ++i)
                if (!(in[i] > 0.0)) g[i] = 0.0;
            },
            [&](const SphereNormalize&) {
              // J^T v = (v - (y^T v) y) / |o|
              const double n = norm2(in);
              const double yv = dot(out, g);
              for (std::size_t i = 0; i < g.size(); ++i) g[i] = (g[i] - yv * out[i]) / n;
            },
            [&](const TangentProject& l) { g = project_out(l.pole.coords(), g); },
        },
        layers_[li]);
  }
}

std::vector<double> Network::forward(std::span<const double> x) {
  cache_ = run(x);
  return cache_->activations.back();
}

Gradients Network::backward(std::span<const double> grad_out) const {
  if (!cache_) throw GeoError(ErrorCode::StaleCache, "backward called without a preceding forward");
  return backward(*cache_, grad_out);
}

std::vector<std::span<double>> Network::parameter_blocks() {
  cache_.reset();
  std::vector<std::span<double>> blocks;
  for (Layer& layer : layers_) {
    if (auto* d = std::get_if<Dense>(&layer)) {
      blocks.emplace_back(d->weights.data());
      blocks.emplace_back(d->bias);
    }
  }
  return blocks;
}

std::vector<std::size_t> Network::parameter_shapes() const {
  std::vector<std::size_t> shapes;
  for (const Layer& layer : layers_) {
    if (const auto* d = std::get_if<Dense>(&layer)) {
      shapes.push_back(d->weights.size());
      shapes.push_back(d->bias.size());
    }
  }
  return shapes;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t s : parameter_shapes()) n += s;
  return n;
}

Gradients Network::zero_gradients() const {
  Gradients g;
  for (std::size_t s : parameter_shapes()) g.emplace_back(s, 0.0);
  return g;
}

Network make_mlp(std::size_t input_dim, std::span<const std::size_t> hidden, std::size_t output_dim,
                 std::uint64_t seed) {
  Network net(input_dim, seed);
  for (std::size_t width : hidden) net.add_dense(width).add_relu();
  net.add_dense(output_dim);
  return net;
}

void accumulate(Gradients& into, const Gradients& g, double scale) {
  if (into.size() != g.size()) throw GeoError(ErrorCode::ShapeMismatch, "gradient block count");
  for (std::size_t b = 0; b < g.size(); ++b) {
    if (into[b].size() != g[b].size()) throw GeoError(ErrorCode::ShapeMismatch, "gradient block size");
    for (std::size_t i = 0; i < g[b].size(); ++i) into[b][i] += scale * g[b][i];
  }
}

}  // namespace geonet::nn
