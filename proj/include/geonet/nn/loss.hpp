#pragma once

#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "geonet/numkernel.hpp"
#include "geonet/sphere.hpp"

namespace geonet::nn {

enum class LossKind {
  CrossEntropy,  // softmax + cross-entropy against a distribution
  SEuc,          // |c - o/|o||^2
  SGeo,          // 1 - <c, o/|o|>
  TEuc,          // |xi - o|^2
  TOrth,         // |xi - o|^2 + lambda (o^T u)^2
  TProj,         // |xi - (I - u u^T) o|^2
  BaselineU,     // |U - U_hat|_F^2 on a flattened basis
  GrassmannA,    // |A - A_hat|_F^2 on flattened tangent coordinates
};

inline constexpr LossKind kAllLossKinds[] = {
    LossKind::CrossEntropy, LossKind::SEuc,  LossKind::SGeo,      LossKind::TEuc,
    LossKind::TOrth,        LossKind::TProj, LossKind::BaselineU, LossKind::GrassmannA,
};

std::string_view loss_name(LossKind kind);
/// Accepts the names produced by loss_name (case-insensitive).
LossKind parse_loss_kind(std::string_view name);

/// Target carried by each loss family:
///   CrossEntropy          -> ProbabilityDistribution
///   SEuc, SGeo            -> UnitVector
///   TEuc, TOrth, TProj    -> SphereTangent (its pole is u)
///   BaselineU, GrassmannA -> Matrix, compared against the row-major output
using LossTarget =
    std::variant<sphere::ProbabilityDistribution, sphere::UnitVector, sphere::SphereTangent, Matrix>;

struct LossSpec {
  LossKind kind;
  LossTarget target;
  double lambda = 1.0;
};

struct LossValue {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d output
};

LossValue loss_and_grad(const LossSpec& spec, std::span<const double> output);

}  // namespace geonet::nn
