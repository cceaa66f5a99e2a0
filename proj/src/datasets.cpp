#include "geonet/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "geonet/sphere.hpp"

namespace geonet::datasets {

namespace {

constexpr const char* kF2isHeader = "GEONET-F2IS v1";

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& x : m.data()) x = scale * normal(rng);
  return m;
}

void validate(const F2isParams& p) {
  auto fail = [](const std::string& why) { throw GeoError(ErrorCode::InvalidConfig, why); };
  if (p.subjects < 10) fail("need at least 10 subjects");
  if (p.train_subjects == 0 || p.train_subjects >= p.subjects) fail("train_subjects must be in [1, subjects)");
  if (p.d == 0 || p.d >= p.n) fail("need 0 < d < n");
  if (p.samples_per_subject < p.d + 2) fail("samples_per_subject must be at least d + 2");
  if (!(p.noise >= 0.0)) fail("noise must be >= 0");
  if (p.latent_dim == 0) fail("latent_dim must be positive");
  if (!(p.spread >= 0.0)) fail("spread must be >= 0");
  if (!(p.coeff_jitter >= 0.0)) fail("coeff_jitter must be >= 0");
}

// --- text container helpers ------------------------------------------------

void write_values(std::ostream& out, std::span<const double> v) {
  out << std::hexfloat;
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  out << std::defaultfloat << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(std::string_view expected_tag) {
    std::string line;
    if (!std::getline(in_, line)) {
      throw GeoError(ErrorCode::TruncatedFile, "missing '" + std::string(expected_tag) + "' record");
    }
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag != expected_tag) {
      throw GeoError(ErrorCode::BadMagic, "expected '" + std::string(expected_tag) + "', found '" + tag + "'");
    }
    return ss;
  }

 private:
  std::istream& in_;
};

// libstdc++ cannot parse hex floats through operator>>, so tokens go through strtod.
std::vector<double> read_values(std::istringstream& ss, std::size_t count) {
  std::vector<double> v;
  v.reserve(count);
  std::string tok;
  while (v.size() < count && ss >> tok) {
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw GeoError(ErrorCode::TruncatedFile, "bad number '" + tok + "'");
    v.push_back(x);
  }
  if (v.size() != count) throw GeoError(ErrorCode::TruncatedFile, "short numeric record");
  return v;
}

template <class T>
T read_scalar(std::istringstream& ss, const char* what) {
  T x{};
  if (!(ss >> x)) throw GeoError(ErrorCode::TruncatedFile, std::string("missing ") + what);
  return x;
}

// --- IDX helpers -------------------------------------------------------------

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GeoError(ErrorCode::DatasetUnavailable, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) throw GeoError(ErrorCode::TruncatedFile, path.string() + ": header truncated");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
  out.write(b, 4);
}

struct ClusterModel {
  std::vector<std::vector<double>> means;
};

ClusterModel draw_means(const GaussianClassesParams& p, std::mt19937_64& rng) {
  if (p.classes < 2) throw GeoError(ErrorCode::InvalidConfig, "need at least 2 classes");
  if (p.dim == 0 || p.per_class == 0) throw GeoError(ErrorCode::InvalidConfig, "dim and per_class must be positive");
  if (!(p.spread >= 0.0)) throw GeoError(ErrorCode::InvalidConfig, "spread must be >= 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  ClusterModel model;
  for (std::size_t c = 0; c < p.classes; ++c) {
    std::vector<double> mu(p.dim);
    double nrm = 0.0;
    for (double& x : mu) {
      x = normal(rng);
      nrm += x * x;
    }
    nrm = std::sqrt(nrm);
    for (double& x : mu) x /= nrm;
    model.means.push_back(std::move(mu));
  }
  return model;
}

ClassificationSet draw_points(const GaussianClassesParams& p, const ClusterModel& model, std::size_t per_class,
                              std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ClassificationSet set;
  set.classes = p.classes;
  set.source = DataSource::SyntheticGaussian;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (std::size_t c = 0; c < p.classes; ++c) {
      std::vector<double> x(model.means[c]);
      for (double& v : x) v += p.spread * normal(rng);
      set.inputs.push_back(std::move(x));
      set.labels.push_back(c);
    }
  }
  return set;
}

}  // namespace

SubspaceRegressionSet generate_f2is(const F2isParams& p) {
  validate(p);
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double col_scale = 1.0 / std::sqrt(static_cast<double>(p.n));

  const Matrix base = qr_thin(gaussian_matrix(p.n, p.d, 1.0, rng)).q;
  std::vector<Matrix> directions;
  for (std::size_t k = 0; k < p.latent_dim; ++k) directions.push_back(gaussian_matrix(p.n, p.d, col_scale, rng));

  std::vector<std::vector<double>> coeffs(p.samples_per_subject, std::vector<double>(p.d));
  for (auto& c : coeffs)
    for (double& x : c) x = normal(rng);

  SubspaceRegressionSet set;
  set.params = p;
  set.subjects.reserve(p.subjects);
  for (std::size_t id = 0; id < p.subjects; ++id) {
    Matrix span = base;
    for (const Matrix& g : directions) span += g * (p.spread * normal(rng));
    grassmann::Subspace truth = grassmann::subspace_from_span(span);
    const Matrix& u = truth.basis();

    std::vector<double> signs(p.d);
    for (double& s : signs) s = (rng() & 1u) ? -1.0 : 1.0;
    std::vector<std::size_t> perm(p.d);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix presented(p.n, p.d);
    for (std::size_t c = 0; c < p.d; ++c)
      for (std::size_t r = 0; r < p.n; ++r) presented(r, c) = signs[perm[c]] * u(r, perm[c]);

    std::vector<std::vector<double>> inputs;
    inputs.reserve(p.samples_per_subject);
    for (const auto& shared : coeffs) {
      std::vector<double> c(shared);
      for (double& x : c) x += p.coeff_jitter * normal(rng);
      std::vector<double> x(p.n, 0.0);
      for (std::size_t r = 0; r < p.n; ++r) {
        for (std::size_t k = 0; k < p.d; ++k) x[r] += u(r, k) * c[k];
      }
      if (p.noise > 0.0) {
        for (double& v : x) v += p.noise * normal(rng);
      }
      inputs.push_back(std::move(x));
    }
    set.subjects.push_back(SubjectRecord{id, std::move(truth), std::move(presented), std::move(inputs)});
  }

  std::vector<std::size_t> ids(p.subjects);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  set.train_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(p.train_subjects));
  set.test_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(p.train_subjects), ids.end());
  std::sort(set.train_ids.begin(), set.train_ids.end());
  std::sort(set.test_ids.begin(), set.test_ids.end());
  return set;
}

std::vector<grassmann::GrassTangent> encode_targets(const SubspaceRegressionSet& set,
                                                    const grassmann::GrassPole& pole) {
  std::vector<grassmann::GrassTangent> out;
  out.reserve(set.subjects.size());
  for (const SubjectRecord& s : set.subjects) out.push_back(grassmann::grassmann_log(pole, s.true_subspace));
  return out;
}

void save_f2is(const SubspaceRegressionSet& set, std::ostream& out) {
  const F2isParams& p = set.params;
  out << kF2isHeader << '\n';
  out << "params " << p.seed << ' ' << p.subjects << ' ' << p.train_subjects << ' ' << p.n << ' ' << p.d << ' '
      << p.samples_per_subject << ' ' << p.latent_dim << '\n';
  const double reals[] = {p.noise, p.spread, p.coeff_jitter};
  out << "scales ";
  write_values(out, reals);
  auto write_ids = [&](const char* tag, const std::vector<std::size_t>& ids) {
    out << tag << ' ' << ids.size();
    for (std::size_t id : ids) out << ' ' << id;
    out << '\n';
  };
  write_ids("train", set.train_ids);
  write_ids("test", set.test_ids);
  for (const SubjectRecord& s : set.subjects) {
    out << "subject " << s.id << '\n';
    out << "true ";
    write_values(out, s.true_subspace.basis().data());
    out << "presented ";
    write_values(out, s.presented_basis.data());
    for (const auto& x : s.inputs) {
      out << "input ";
      write_values(out, x);
    }
  }
}

SubspaceRegressionSet load_f2is(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw GeoError(ErrorCode::TruncatedFile, "empty dataset file");
  if (header != kF2isHeader) throw GeoError(ErrorCode::BadMagic, "unsupported dataset header '" + header + "'");
  LineReader lines(in);

  SubspaceRegressionSet set;
  F2isParams& p = set.params;
  {
    auto ss = lines.next("params");
    p.seed = read_scalar<std::uint64_t>(ss, "seed");
    p.subjects = read_scalar<std::size_t>(ss, "subjects");
    p.train_subjects = read_scalar<std::size_t>(ss, "train_subjects");
    p.n = read_scalar<std::size_t>(ss, "n");
    p.d = read_scalar<std::size_t>(ss, "d");
    p.samples_per_subject = read_scalar<std::size_t>(ss, "samples_per_subject");
    p.latent_dim = read_scalar<std::size_t>(ss, "latent_dim");
  }
  {
    auto ss = lines.next("scales");
    const auto v = read_values(ss, 3);
    p.noise = v[0];
    p.spread = v[1];
    p.coeff_jitter = v[2];
  }
  validate(p);
  auto read_ids = [&](const char* tag) {
    auto ss = lines.next(tag);
    const auto count = read_scalar<std::size_t>(ss, "id count");
    std::vector<std::size_t> ids(count);
    for (auto& id : ids) id = read_scalar<std::size_t>(ss, "subject id");
    return ids;
  };
  set.train_ids = read_ids("train");
  set.test_ids = read_ids("test");

  const std::size_t nd = p.n * p.d;
  for (std::size_t i = 0; i < p.subjects; ++i) {
    auto head = lines.next("subject");
    const auto id = read_scalar<std::size_t>(head, "subject id");
    if (id != i) throw GeoError(ErrorCode::CountMismatch, "subjects out of order");
    auto ts = lines.next("true");
    auto truth = grassmann::Subspace::from_basis(Matrix(p.n, p.d, read_values(ts, nd)));
    auto ps = lines.next("presented");
    Matrix presented(p.n, p.d, read_values(ps, nd));
    std::vector<std::vector<double>> inputs;
    for (std::size_t j = 0; j < p.samples_per_subject; ++j) {
      auto xs = lines.next("input");
      inputs.push_back(read_values(xs, p.n));
    }
    set.subjects.push_back(SubjectRecord{id, std::move(truth), std::move(presented), std::move(inputs)});
  }
  return set;
}

void save_f2is(const SubspaceRegressionSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw GeoError(ErrorCode::ConfigError, "cannot write " + path.string());
  save_f2is(set, out);
}

SubspaceRegressionSet load_f2is(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GeoError(ErrorCode::DatasetUnavailable, "cannot open " + path.string());
  return load_f2is(in);
}

ClassificationSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                           std::size_t limit) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  const std::uint32_t img_magic = read_be32(img, 0, images_path);
  if (img_magic != kIdxImageMagic) {
    throw GeoError(ErrorCode::BadMagic, images_path.string() + ": magic " + std::to_string(img_magic));
  }
  const std::uint32_t lab_magic = read_be32(lab, 0, labels_path);
  if (lab_magic != kIdxLabelMagic) {
    throw GeoError(ErrorCode::BadMagic, labels_path.string() + ": magic " + std::to_string(lab_magic));
  }
  const std::size_t n_img = read_be32(img, 4, images_path);
  const std::size_t rows = read_be32(img, 8, images_path);
  const std::size_t cols = read_be32(img, 12, images_path);
  const std::size_t n_lab = read_be32(lab, 4, labels_path);
  if (n_img != n_lab) {
    throw GeoError(ErrorCode::CountMismatch,
                   std::to_string(n_img) + " images but " + std::to_string(n_lab) + " labels");
  }
  const std::size_t pixels = rows * cols;
  if (img.size() < 16 + n_img * pixels) throw GeoError(ErrorCode::TruncatedFile, images_path.string());
  if (lab.size() < 8 + n_lab) throw GeoError(ErrorCode::TruncatedFile, labels_path.string());

  const std::size_t count = limit == 0 ? n_img : std::min(limit, n_img);
  ClassificationSet set;
  set.source = DataSource::IdxFiles;
  set.inputs.reserve(count);
  set.labels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> x(pixels);
    const unsigned char* src = img.data() + 16 + i * pixels;
    for (std::size_t k = 0; k < pixels; ++k) x[k] = static_cast<double>(src[k]) / 255.0;
    set.inputs.push_back(std::move(x));
    set.labels.push_back(lab[8 + i]);
    set.classes = std::max(set.classes, std::size_t{lab[8 + i]} + 1);
  }
  return set;
}

void write_idx(const ClassificationSet& set, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  if (set.labels.size() != set.inputs.size()) throw GeoError(ErrorCode::CountMismatch, "labels vs inputs");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw GeoError(ErrorCode::ConfigError, "cannot write IDX files");
  write_be32(img, kIdxImageMagic);
  write_be32(img, static_cast<std::uint32_t>(set.size()));
  write_be32(img, static_cast<std::uint32_t>(rows));
  write_be32(img, static_cast<std::uint32_t>(cols));
  write_be32(lab, kIdxLabelMagic);
  write_be32(lab, static_cast<std::uint32_t>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.inputs[i].size() != rows * cols) throw GeoError(ErrorCode::DimensionMismatch, "image size");
    if (set.labels[i] > 255) throw GeoError(ErrorCode::LabelOutOfRange, "IDX labels are single bytes");
    for (double v : set.inputs[i]) {
      const double q = std::round(std::clamp(v, 0.0, 1.0) * 255.0);
      img.put(static_cast<char>(static_cast<unsigned char>(q)));
    }
    lab.put(static_cast<char>(static_cast<unsigned char>(set.labels[i])));
  }
}

std::vector<nn::LossTarget> make_classification_targets(std::span<const std::size_t> labels,
                                                        std::size_t classes, TargetFramework framework) {
  if (classes < 2) throw GeoError(ErrorCode::InvalidConfig, "need at least 2 classes");
  const sphere::UnitVector pole = sphere::uniform_pole(classes);
  std::vector<nn::LossTarget> per_class;
  for (std::size_t c = 0; c < classes; ++c) {
    const auto pdf = sphere::ProbabilityDistribution::one_hot(classes, c);
    switch (framework) {
      case TargetFramework::Pdf: per_class.emplace_back(pdf); break;
      case TargetFramework::Sphere: per_class.emplace_back(sphere::sqrt_param(pdf)); break;
      case TargetFramework::Tangent:
        per_class.emplace_back(sphere::sphere_log(pole, sphere::sqrt_param(pdf)));
        break;
    }
  }
  std::vector<nn::LossTarget> out;
  out.reserve(labels.size());
  for (std::size_t label : labels) {
    if (label >= classes) {
      throw GeoError(ErrorCode::LabelOutOfRange, "label " + std::to_string(label) + " with " +
                                                     std::to_string(classes) + " classes");
    }
    out.push_back(per_class[label]);
  }
  return out;
}

ClassificationSet synthetic_gaussian_classes(const GaussianClassesParams& params) {
  std::mt19937_64 rng(params.seed);
  const ClusterModel model = draw_means(params, rng);
  return draw_points(params, model, params.per_class, rng);
}

std::pair<ClassificationSet, ClassificationSet> synthetic_gaussian_split(const GaussianClassesParams& params,
                                                                         std::size_t test_per_class) {
  if (test_per_class == 0) throw GeoError(ErrorCode::InvalidConfig, "test_per_class must be positive");
  std::mt19937_64 rng(params.seed);
  const ClusterModel model = draw_means(params, rng);
  ClassificationSet train = draw_points(params, model, params.per_class, rng);
  ClassificationSet test = draw_points(params, model, test_per_class, rng);
  return {std::move(train), std::move(test)};
}

}  // namespace geonet::datasets
