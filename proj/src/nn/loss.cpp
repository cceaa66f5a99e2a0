#include "geonet/nn/loss.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "geonet/vector_ops.hpp"

namespace geonet::nn {

namespace {

template <class T>
const T& target_as(const LossSpec& spec) {
  const T* t = std::get_if<T>(&spec.target);
  if (!t) {
    throw GeoError(ErrorCode::ShapeMismatch, std::string("wrong target type for loss ") +
                                                 std::string(loss_name(spec.kind)));
  }
  return *t;
}

void require_output_size(std::size_t expected, std::size_t got, LossKind kind) {
  if (expected != got) {
    throw GeoError(ErrorCode::ShapeMismatch, std::string(loss_name(kind)) + ": output length " +
                                                 std::to_string(got) + ", target length " +
                                                 std::to_string(expected));
  }
}

LossValue cross_entropy(std::span<const double> p, std::span<const double> o) {
  const double mx = *std::max_element(o.begin(), o.end());
  double z = 0.0;
  for (double v : o) z += std::exp(v - mx);
  const double lse = mx + std::log(z);
  LossValue out{0.0, std::vector<double>(o.size())};
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double softmax = std::exp(o[i] - lse);
    out.loss -= p[i] * (o[i] - lse);
    out.grad[i] = softmax - p[i];
  }
  return out;
}

// Losses of y = o/|o|: gradient dL/dy pulled back through the normalization.
LossValue through_normalization(std::span<const double> o, double loss, std::vector<double> dl_dy,
                                const std::vector<double>& y) {
  const double n = norm2(o);
  const double ydl = dot(y, dl_dy);
  for (std::size_t i = 0; i < dl_dy.size(); ++i) dl_dy[i] = (dl_dy[i] - ydl * y[i]) / n;
  return {loss, std::move(dl_dy)};
}

std::vector<double> normalized(std::span<const double> o) {
  const double n = norm2(o);
  if (!(n > 0.0)) throw GeoError(ErrorCode::NonFiniteLoss, "cannot normalize a zero output");
  std::vector<double> y(o.begin(), o.end());
  for (double& v : y) v /= n;
  return y;
}

LossValue squared_error(std::span<const double> target, std::span<const double> o) {
  LossValue out{0.0, std::vector<double>(o.size())};
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double r = o[i] - target[i];
    out.loss += r * r;
    out.grad[i] = 2.0 * r;
  }
  return out;
}

}  // namespace

std::string_view loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::CrossEntropy: return "ce";
    case LossKind::SEuc: return "seuc";
    case LossKind::SGeo: return "sgeo";
    case LossKind::TEuc: return "teuc";
    case LossKind::TOrth: return "torth";
    case LossKind::TProj: return "tproj";
    case LossKind::BaselineU: return "baseline_u";
    case LossKind::GrassmannA: return "grassmann_a";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (LossKind k : kAllLossKinds) {
    if (loss_name(k) == lower) return k;
  }
  throw GeoError(ErrorCode::ConfigError, "unknown loss kind '" + std::string(name) + "'");
}

LossValue loss_and_grad(const LossSpec& spec, std::span<const double> o) {
  if (!(spec.lambda >= 0.0)) throw GeoError(ErrorCode::InvalidConfig, "lambda must be >= 0");
  for (double v : o) {
    if (!std::isfinite(v)) throw GeoError(ErrorCode::NonFiniteLoss, "non-finite network output");
  }

  LossValue out;
  switch (spec.kind) {
    case LossKind::CrossEntropy: {
      const auto& p = target_as<sphere::ProbabilityDistribution>(spec);
      require_output_size(p.size(), o.size(), spec.kind);
      out = cross_entropy(p.probs(), o);
      break;
    }
    case LossKind::SEuc: {
      const auto& c = target_as<sphere::UnitVector>(spec);
      require_output_size(c.dim(), o.size(), spec.kind);
      const std::vector<double> y = normalized(o);
      LossValue e = squared_error(c.coords(), y);
      out = through_normalization(o, e.loss, std::move(e.grad), y);
      break;
    }
    case LossKind::SGeo: {
      const auto& c = target_as<sphere::UnitVector>(spec);
      require_output_size(c.dim(), o.size(), spec.kind);
      const std::vector<double> y = normalized(o);
      std::vector<double> dl_dy(c.coords().begin(), c.coords().end());
      for (double& v : dl_dy) v = -v;
      out = through_normalization(o, 1.0 - dot(c.coords(), y), std::move(dl_dy), y);
      break;
    }
    case LossKind::TEuc:
    case LossKind::TOrth: {
      const auto& xi = target_as<sphere::SphereTangent>(spec);
      require_output_size(xi.coords.size(), o.size(), spec.kind);
      out = squared_error(xi.coords, o);
      if (spec.kind == LossKind::TOrth) {
        const auto u = xi.pole.coords();
        const double ou = dot(o, u);
        out.loss += spec.lambda * ou * ou;
        for (std::size_t i = 0; i < o.size(); ++i) out.grad[i] += 2.0 * spec.lambda * ou * u[i];
      }
      break;
    }
    case LossKind::TProj: {
      const auto& xi = target_as<sphere::SphereTangent>(spec);
      require_output_size(xi.coords.size(), o.size(), spec.kind);
      const auto u = xi.pole.coords();
      std::vector<double> po(o.begin(), o.end());
      const double ou = dot(u, po);
      for (std::size_t i = 0; i < po.size(); ++i) po[i] -= ou * u[i];
      out = squared_error(xi.coords, po);
      // d/do |xi - P o|^2 = 2 P (P o - xi), P symmetric
      const double gu = dot(u, out.grad);
      for (std::size_t i = 0; i < o.size(); ++i) out.grad[i] -= gu * u[i];
      break;
    }
    case LossKind::BaselineU:
    case LossKind::GrassmannA: {
      const auto& m = target_as<Matrix>(spec);
      require_output_size(m.size(), o.size(), spec.kind);
      out = squared_error(m.data(), o);
      break;
    }
  }

  if (!std::isfinite(out.loss)) {
    throw GeoError(ErrorCode::NonFiniteLoss, std::string(loss_name(spec.kind)) + " produced a non-finite loss");
  }
  for (double g : out.grad) {
    if (!std::isfinite(g)) throw GeoError(ErrorCode::NonFiniteLoss, "non-finite loss gradient");
  }
  return out;
}

}  // namespace geonet::nn
