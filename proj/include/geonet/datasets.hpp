#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "geonet/grassmann.hpp"
#include "geonet/nn/loss.hpp"

namespace geonet::datasets {

// ---------------------------------------------------------------------------
// Synthetic subspace regression (face -> illumination subspace analogue)
// ---------------------------------------------------------------------------

/// Each subject owns a d-dimensional subspace of R^n. Subspaces are
/// orthonormalized Gaussian perturbations of one shared base subspace,
/// driven by a low-dimensional per-subject latent code, so all of them sit
/// in one tangent chart. Every subject is observed through the same L
/// coefficient vectors (jittered per subject), and the basis handed to the
/// baseline is corrupted by a per-subject sign flip and column permutation.
struct F2isParams {
  std::uint64_t seed = 0;
  std::size_t subjects = 60;
  std::size_t train_subjects = 48;
  std::size_t n = 64;
  std::size_t d = 5;
  std::size_t samples_per_subject = 16;
  double noise = 0.05;
  std::size_t latent_dim = 3;
  /// Scale of the latent perturbation around the base subspace.
  double spread = 0.15;
  /// Per-subject jitter of the shared coefficient vectors.
  double coeff_jitter = 0.1;
};

struct SubjectRecord {
  std::size_t id = 0;
  grassmann::Subspace true_subspace;
  /// true_subspace.basis() * S * Pi for a random sign diagonal S and permutation Pi.
  Matrix presented_basis;
  std::vector<std::vector<double>> inputs;
};

struct SubspaceRegressionSet {
  F2isParams params;
  std::vector<SubjectRecord> subjects;  // subjects[i].id == i
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;

  std::size_t n() const noexcept { return params.n; }
  std::size_t d() const noexcept { return params.d; }
};

SubspaceRegressionSet generate_f2is(const F2isParams& params);

/// Tangent coordinates of every subject's subspace at `pole`, index-aligned
/// with set.subjects. Depends only on the subspaces, never on presented_basis.
std::vector<grassmann::GrassTangent> encode_targets(const SubspaceRegressionSet& set,
                                                    const grassmann::GrassPole& pole);

/// Text container, first line "GEONET-F2IS v1"; numbers are written as C99
/// hex floats so a save/load cycle is exact.
void save_f2is(const SubspaceRegressionSet& set, std::ostream& out);
SubspaceRegressionSet load_f2is(std::istream& in);
void save_f2is(const SubspaceRegressionSet& set, const std::filesystem::path& path);
SubspaceRegressionSet load_f2is(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Classification data
// ---------------------------------------------------------------------------

enum class DataSource { IdxFiles, SyntheticGaussian };

struct ClassificationSet {
  std::vector<std::vector<double>> inputs;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;
  DataSource source = DataSource::SyntheticGaussian;

  std::size_t size() const noexcept { return inputs.size(); }
  std::size_t dim() const noexcept { return inputs.empty() ? 0 : inputs.front().size(); }
};

inline constexpr std::uint32_t kIdxImageMagic = 2051;
inline constexpr std::uint32_t kIdxLabelMagic = 2049;

/// Big-endian IDX image/label pair. Pixels are scaled to [0, 1]; `limit`
/// keeps only the first `limit` records when nonzero.
ClassificationSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                           std::size_t limit = 0);

/// Writes inputs as rows x cols unsigned-byte images (value * 255, rounded).
void write_idx(const ClassificationSet& set, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

enum class TargetFramework { Pdf, Sphere, Tangent };

/// Pdf: one-hot distribution. Sphere: its square-root embedding (a basis
/// vector). Tangent: sphere_log of that basis vector at the uniform pole.
std::vector<nn::LossTarget> make_classification_targets(std::span<const std::size_t> labels,
                                                        std::size_t classes, TargetFramework framework);

struct GaussianClassesParams {
  std::uint64_t seed = 0;
  std::size_t classes = 10;
  std::size_t dim = 32;
  std::size_t per_class = 200;
  double spread = 0.15;
};

/// Isotropic Gaussian clusters around random unit-norm means.
ClassificationSet synthetic_gaussian_classes(const GaussianClassesParams& params);

/// Train and test sets drawn around the same means: `params.per_class`
/// training points and `test_per_class` test points per class.
std::pair<ClassificationSet, ClassificationSet> synthetic_gaussian_split(const GaussianClassesParams& params,
                                                                         std::size_t test_per_class);

}  // namespace geonet::datasets
