#include "geonet/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "geonet/grassmann.hpp"
#include "geonet/nn/gradient_check.hpp"
#include "geonet/nn/trainer.hpp"
#include "geonet/sphere.hpp"

namespace geonet::experiment {

namespace {

// --- config plumbing ---------------------------------------------------------

[[noreturn]] void config_error(std::string_view key, std::string_view value, std::string_view why) {
  throw GeoError(ErrorCode::ConfigError,
                 "config key '" + std::string(key) + "' = '" + std::string(value) + "': " + std::string(why));
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <class T>
T parse_integer(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) config_error(key, v, "expected a nonnegative integer");
  return out;
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    config_error(key, v, "expected a finite number");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  config_error(key, v, "expected true or false");
}

std::vector<std::size_t> parse_widths(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  if (v.empty() || v == "default") return out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const std::string_view item = trim(v.substr(0, comma));
    const auto w = parse_integer<std::size_t>(key, item);
    if (w == 0) config_error(key, item, "layer widths must be positive");
    out.push_back(w);
    v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
  }
  return out;
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format_widths(const std::vector<std::size_t>& w) {
  if (w.empty()) return "default";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

std::string format_bool(bool b) { return b ? "true" : "false"; }

std::string require_choice(std::string_view key, std::string_view v, std::initializer_list<std::string_view> options) {
  for (std::string_view o : options) {
    if (o == v) return std::string(v);
  }
  std::string all;
  for (std::string_view o : options) all += (all.empty() ? "" : "|") + std::string(o);
  config_error(key, v, "expected one of " + all);
}

struct Key {
  const char* name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define GEONET_SIZE_KEY(NAME, FIELD)                                                                       \
  Key {                                                                                                    \
    NAME, [](ExperimentConfig& c, std::string_view v) { c.FIELD = parse_integer<std::size_t>(NAME, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                                  \
  }
#define GEONET_REAL_KEY(NAME, FIELD)                                                          \
  Key {                                                                                       \
    NAME, [](ExperimentConfig& c, std::string_view v) { c.FIELD = parse_real(NAME, v); },    \
        [](const ExperimentConfig& c) { return format_real(c.FIELD); }                        \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"experiment", [](ExperimentConfig& c, std::string_view v) { c.experiment = parse_experiment_kind(v); },
       [](const ExperimentConfig& c) { return std::string(experiment_name(c.experiment)); }},
      {"seed", [](ExperimentConfig& c, std::string_view v) { c.seed = parse_integer<std::uint64_t>("seed", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      {"deterministic",
       [](ExperimentConfig& c, std::string_view v) { c.deterministic = parse_bool("deterministic", v); },
       [](const ExperimentConfig& c) { return format_bool(c.deterministic); }},
      GEONET_REAL_KEY("lr", lr),
      GEONET_SIZE_KEY("batch", batch),
      GEONET_SIZE_KEY("iterations", iterations),
      {"hidden", [](ExperimentConfig& c, std::string_view v) { c.hidden = parse_widths("hidden", v); },
       [](const ExperimentConfig& c) { return format_widths(c.hidden); }},
      GEONET_SIZE_KEY("curve_every", curve_every),
      GEONET_SIZE_KEY("f2is.subjects", f2is.subjects),
      GEONET_SIZE_KEY("f2is.train_subjects", f2is.train_subjects),
      GEONET_SIZE_KEY("f2is.n", f2is.n),
      GEONET_SIZE_KEY("f2is.d", f2is.d),
      GEONET_SIZE_KEY("f2is.samples_per_subject", f2is.samples_per_subject),
      GEONET_REAL_KEY("f2is.noise", f2is.noise),
      GEONET_SIZE_KEY("f2is.latent_dim", f2is.latent_dim),
      GEONET_REAL_KEY("f2is.spread", f2is.spread),
      GEONET_REAL_KEY("f2is.coeff_jitter", f2is.coeff_jitter),
      {"pole", [](ExperimentConfig& c, std::string_view v) { c.pole = require_choice("pole", v, {"train_pca", "frechet"}); },
       [](const ExperimentConfig& c) { return c.pole; }},
      {"framework",
       [](ExperimentConfig& c, std::string_view v) {
         c.framework = require_choice("framework", v, {"baseline", "tangent"});
       },
       [](const ExperimentConfig& c) { return c.framework; }},
      {"loss",
       [](ExperimentConfig& c, std::string_view v) {
         c.loss = require_choice("loss", v, {"ce", "seuc", "sgeo", "teuc", "torth", "tproj"});
       },
       [](const ExperimentConfig& c) { return c.loss; }},
      GEONET_REAL_KEY("lambda", lambda),
      GEONET_SIZE_KEY("classify.train_limit", train_limit),
      GEONET_SIZE_KEY("classify.test_limit", test_limit),
      {"classify.data_dir", [](ExperimentConfig& c, std::string_view v) { c.data_dir = std::string(v); },
       [](const ExperimentConfig& c) { return c.data_dir; }},
      GEONET_SIZE_KEY("synthetic.classes", synthetic.classes),
      GEONET_SIZE_KEY("synthetic.dim", synthetic.dim),
      GEONET_SIZE_KEY("synthetic.per_class", synthetic.per_class),
      GEONET_SIZE_KEY("synthetic.test_per_class", synthetic_test_per_class),
      GEONET_REAL_KEY("synthetic.spread", synthetic.spread),
      {"geomcheck.plant_fault",
       [](ExperimentConfig& c, std::string_view v) { c.plant_fault = parse_bool("geomcheck.plant_fault", v); },
       [](const ExperimentConfig& c) { return format_bool(c.plant_fault); }},
  };
  return table;
}

#undef GEONET_SIZE_KEY
#undef GEONET_REAL_KEY

// --- shared training helpers -------------------------------------------------

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Independent streams for data, weights and minibatch order.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (std::uint64_t{words[0]} << 32) | words[1];
}

constexpr std::uint64_t kWeightStream = 1;
constexpr std::uint64_t kBatchStream = 2;
constexpr std::uint64_t kCheckStream = 3;

void validate_training(const ExperimentConfig& c) {
  if (!(c.lr > 0.0)) throw GeoError(ErrorCode::ConfigError, "lr must be positive");
  if (c.curve_every == 0) throw GeoError(ErrorCode::ConfigError, "curve_every must be positive");
  if (!(c.lambda >= 0.0)) throw GeoError(ErrorCode::ConfigError, "lambda must be >= 0");
}

/// Cycles through a shuffled index set, reshuffling after each pass.
class EpochSampler {
 public:
  EpochSampler(std::size_t count, std::uint64_t seed) : order_(count), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::size_t next() {
    if (pos_ == order_.size()) {
      std::shuffle(order_.begin(), order_.end(), rng_);
      pos_ = 0;
    }
    return order_[pos_++];
  }

 private:
  std::vector<std::size_t> order_;
  std::mt19937_64 rng_;
  std::size_t pos_ = 0;
};

struct TrainStats {
  std::vector<std::pair<std::size_t, double>> curve;
  double final_loss = 0.0;
  double max_unit_norm_residual = 0.0;
  double max_tangency_residual = 0.0;
};

/// Runs `iterations` Adam steps on minibatches of examples picked by `sampler`.
TrainStats train(nn::Network& net, const ExperimentConfig& config, const std::vector<nn::Example>& pool,
                 EpochSampler& sampler) {
  nn::AdamConfig adam_config;
  adam_config.lr = config.lr;
  nn::AdamState adam(net, adam_config);
  const std::size_t iterations = config.effective_iterations();
  const std::size_t batch_size = config.effective_batch();

  TrainStats stats;
  std::vector<nn::Example> batch;
  batch.reserve(batch_size);
  for (std::size_t it = 0; it < iterations; ++it) {
    batch.clear();
    for (std::size_t b = 0; b < batch_size; ++b) batch.push_back(pool[sampler.next()]);
    const nn::BatchResult r = nn::train_batch(net, adam, batch);
    stats.max_unit_norm_residual = std::max(stats.max_unit_norm_residual, r.max_unit_norm_residual);
    stats.max_tangency_residual = std::max(stats.max_tangency_residual, r.max_tangency_residual);
    if (it % config.curve_every == 0 || it + 1 == iterations) stats.curve.emplace_back(it, r.mean_loss);
    stats.final_loss = r.mean_loss;
  }
  return stats;
}

// --- f2is --------------------------------------------------------------------

grassmann::GrassPole training_pca_pole(const datasets::SubspaceRegressionSet& set) {
  std::size_t rows = 0;
  for (std::size_t id : set.train_ids) rows += set.subjects[id].inputs.size();
  Matrix pooled(rows, set.n());
  std::size_t r = 0;
  for (std::size_t id : set.train_ids) {
    for (const auto& x : set.subjects[id].inputs) {
      std::copy(x.begin(), x.end(), pooled.row(r++).begin());
    }
  }
  const SvdResult svd = svd_thin(pooled);
  Matrix basis(set.n(), set.d());
  for (std::size_t j = 0; j < set.d(); ++j)
    for (std::size_t i = 0; i < set.n(); ++i) basis(i, j) = svd.vt(j, i);
  return grassmann::GrassPole(grassmann::subspace_from_span(basis));
}

// --- classify ----------------------------------------------------------------

struct ClassifyData {
  datasets::ClassificationSet train;
  datasets::ClassificationSet test;
};

ClassifyData load_classification_data(const ExperimentConfig& config) {
  std::string dir = config.data_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("DATA_DIR")) dir = env;
  }
  if (dir.empty()) {
    datasets::GaussianClassesParams params = config.synthetic;
    params.seed = config.seed;
    auto [train, test] = datasets::synthetic_gaussian_split(params, config.synthetic_test_per_class);
    return {std::move(train), std::move(test)};
  }
  const std::filesystem::path root(dir);
  ClassifyData data{
      datasets::load_idx(root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte", config.train_limit),
      datasets::load_idx(root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte", config.test_limit)};
  if (data.train.dim() != data.test.dim()) {
    throw GeoError(ErrorCode::DimensionMismatch, "train and test images differ in size");
  }
  const std::size_t classes = std::max(data.train.classes, data.test.classes);
  data.train.classes = data.test.classes = classes;
  return data;
}

datasets::TargetFramework framework_for(nn::LossKind kind) {
  switch (kind) {
    case nn::LossKind::CrossEntropy: return datasets::TargetFramework::Pdf;
    case nn::LossKind::SEuc:
    case nn::LossKind::SGeo: return datasets::TargetFramework::Sphere;
    default: return datasets::TargetFramework::Tangent;
  }
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Predicted label for one raw network output.
std::size_t predict(nn::LossKind kind, const sphere::UnitVector& pole, std::span<const double> out) {
  switch (kind) {
    case nn::LossKind::CrossEntropy: return argmax(out);
    case nn::LossKind::SEuc:
    case nn::LossKind::SGeo: {
      const auto pdf = sphere::sphere_to_pdf(sphere::UnitVector::normalize(out));
      return argmax(pdf.probs());
    }
    default: {
      const auto xi = sphere::project_to_tangent(pole, out);
      const auto pdf = sphere::sphere_to_pdf(sphere::sphere_exp(pole, xi));
      return argmax(pdf.probs());
    }
  }
}

// --- geomcheck ---------------------------------------------------------------

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (double& x : m.data()) x = normal(rng);
  return m;
}

grassmann::Subspace random_subspace(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  return grassmann::subspace_from_span(gaussian(n, d, rng));
}

/// Point at geodesic distance exactly `dist` from the pole in a random direction.
grassmann::Subspace grassmann_step(const grassmann::GrassPole& pole, double dist, std::mt19937_64& rng) {
  Matrix a = gaussian(pole.n() - pole.d(), pole.d(), rng);
  a *= dist / a.frobenius();
  return grassmann::grassmann_exp(pole, grassmann::GrassTangent{pole, std::move(a)});
}

SuiteResult finish(std::string name, std::size_t cases, double max_residual, double tolerance) {
  return {std::move(name), cases, max_residual, tolerance, max_residual <= tolerance};
}

SuiteResult sphere_roundtrip_suite(std::mt19937_64& rng) {
  constexpr std::size_t kCases = 1000;
  std::uniform_real_distribution<double> angle(0.0, 3.0);
  std::uniform_int_distribution<std::size_t> dim(2, 12);
  double worst = 0.0;
  for (std::size_t i = 0; i < kCases; ++i) {
    const std::size_t c = dim(rng);
    const Matrix g = gaussian(2, c, rng);
    const auto pole = sphere::UnitVector::normalize(g.row(0));
    auto dir = sphere::project_to_tangent(pole, g.row(1));
    const double scale = angle(rng) / dir.norm();
    for (double& v : dir.coords) v *= scale;
    const auto y = sphere::sphere_exp(pole, dir);
    const auto back = sphere::sphere_exp(pole, sphere::sphere_log(pole, y));
    worst = std::max(worst, sphere::sphere_distance(back, y));
  }
  return finish("sphere_roundtrip", kCases, worst, 1e-9);
}

std::vector<SuiteResult> grassmann_suites(std::mt19937_64& rng) {
  constexpr std::size_t kCases = 200;
  std::uniform_real_distribution<double> dist(0.0, 1.2);
  double roundtrip = 0.0;
  double isometry = 0.0;
  double invariance = 0.0;
  for (std::size_t i = 0; i < kCases; ++i) {
    const grassmann::GrassPole pole(random_subspace(20, 3, rng));
    const grassmann::Subspace y = grassmann_step(pole, dist(rng), rng);
    const grassmann::GrassTangent t = grassmann::grassmann_log(pole, y);
    roundtrip = std::max(roundtrip, grassmann::geodesic_distance(grassmann::grassmann_exp(pole, t), y));
    isometry = std::max(isometry, std::abs(t.norm() - grassmann::geodesic_distance(pole.subspace(), y)));

    const Matrix q = qr_thin(gaussian(3, 3, rng)).q;
    const auto rotated = grassmann::Subspace::from_basis(y.basis() * q);
    invariance = std::max(invariance, (grassmann::grassmann_log(pole, rotated).a - t.a).max_abs());
  }
  return {finish("grassmann_roundtrip", kCases, roundtrip, 1e-8), finish("grassmann_isometry", kCases, isometry, 1e-8),
          finish("grassmann_basis_invariance", kCases, invariance, 1e-8)};
}

SuiteResult distance_bound_suite() {
  double worst = 0.0;
  for (std::size_t d : {3u, 4u, 5u}) {
    const Matrix eye = Matrix::identity(2 * d);
    const auto a = grassmann::Subspace::from_basis(eye.cols_range(0, d));
    const auto b = grassmann::Subspace::from_basis(eye.cols_range(d, d));
    const double expected = std::numbers::pi * std::sqrt(static_cast<double>(d)) / 2.0;
    worst = std::max(worst, std::abs(grassmann::geodesic_distance(a, b) - expected));
  }
  return finish("distance_bound", 3, worst, 1e-6);
}

std::vector<SuiteResult> frechet_suites(std::mt19937_64& rng) {
  constexpr std::size_t kCases = 10;
  double midpoint = 0.0;
  double stationarity = 0.0;
  double permutation = 0.0;
  for (std::size_t i = 0; i < kCases; ++i) {
    const grassmann::GrassPole base(random_subspace(12, 3, rng));
    const std::vector<grassmann::Subspace> pair = {base.subspace(), grassmann_step(base, 0.9, rng)};
    const auto mid = grassmann::frechet_mean(pair).mean;
    midpoint = std::max(midpoint, std::abs(grassmann::geodesic_distance(mid.subspace(), pair[0]) -
                                           grassmann::geodesic_distance(mid.subspace(), pair[1])));

    std::vector<grassmann::Subspace> cloud;
    for (int k = 0; k < 7; ++k) cloud.push_back(grassmann_step(base, 0.5, rng));
    const auto fm = grassmann::frechet_mean(cloud);
    Matrix mean_log(fm.mean.n() - fm.mean.d(), fm.mean.d());
    for (const auto& s : cloud) mean_log += grassmann::grassmann_log(fm.mean, s).a;
    mean_log *= 1.0 / static_cast<double>(cloud.size());
    stationarity = std::max(stationarity, mean_log.frobenius());

    std::vector<grassmann::Subspace> shuffled = cloud;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto fm2 = grassmann::frechet_mean(shuffled);
    permutation = std::max(permutation, grassmann::geodesic_distance(fm.mean.subspace(), fm2.mean.subspace()));
  }
  return {finish("frechet_midpoint", kCases, midpoint, 1e-6), finish("frechet_stationarity", kCases, stationarity, 1e-6),
          finish("frechet_permutation", kCases, permutation, 1e-7)};
}

SuiteResult procrustes_suite(std::mt19937_64& rng) {
  constexpr std::size_t kCases = 100;
  double worst = -1.0;
  for (std::size_t i = 0; i < kCases; ++i) {
    const auto r = random_subspace(10, 3, rng);
    const auto ref = random_subspace(10, 3, rng);
    const double before = (r.basis() - ref.basis()).frobenius();
    const double after = (grassmann::procrustes_align(r, ref) - ref.basis()).frobenius();
    worst = std::max(worst, after - before);
  }
  return finish("procrustes_no_increase", kCases, worst, 1e-12);
}

/// Two-layer ReLU network whose head matches `kind`, plus a random target.
struct Probe {
  nn::Network net;
  nn::LossSpec spec;
};

Probe make_probe(nn::LossKind kind, std::uint64_t seed, std::mt19937_64& rng) {
  constexpr std::size_t kIn = 5;
  constexpr std::size_t kHidden = 8;
  constexpr std::size_t kClasses = 4;
  std::size_t out = kClasses;
  if (kind == nn::LossKind::BaselineU) out = 6 * 2;
  if (kind == nn::LossKind::GrassmannA) out = 4 * 2;

  // Random biases keep probes generic: with zero biases and a single live
  // hidden unit, SGeo is exactly scale invariant and the true gradient is 0.
  auto random_dense = [&](std::size_t rows, std::size_t cols) {
    Matrix b = gaussian(1, rows, rng);
    return std::pair{gaussian(rows, cols, rng), std::vector<double>(b.data().begin(), b.data().end())};
  };
  auto [w1, b1] = random_dense(kHidden, kIn);
  auto [w2, b2] = random_dense(out, kHidden);
  nn::Network net(kIn, seed);
  net.add_dense(std::move(w1), std::move(b1)).add_relu().add_dense(std::move(w2), std::move(b2));
  const auto pole = sphere::uniform_pole(kClasses);
  if (kind == nn::LossKind::SEuc || kind == nn::LossKind::SGeo) net.add_sphere_normalize();
  if (kind == nn::LossKind::TProj) net.add_tangent_project(pole);

  std::uniform_real_distribution<double> unif(0.05, 1.0);
  const Matrix g = gaussian(1, out, rng);
  nn::LossTarget target = Matrix(out / 2, 2, std::vector<double>(g.data().begin(), g.data().end()));
  switch (kind) {
    case nn::LossKind::CrossEntropy: {
      std::vector<double> p(kClasses);
      for (double& v : p) v = unif(rng);
      const double s = std::accumulate(p.begin(), p.end(), 0.0);
      for (double& v : p) v /= s;
      // from_probs checks the sum to 1e-12, so absorb rounding in the last entry
      p.back() = 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0);
      target = sphere::ProbabilityDistribution::from_probs(std::move(p));
      break;
    }
    case nn::LossKind::SEuc:
    case nn::LossKind::SGeo: target = sphere::UnitVector::normalize(g.data()); break;
    case nn::LossKind::TEuc:
    case nn::LossKind::TOrth:
    case nn::LossKind::TProj: target = sphere::project_to_tangent(pole, g.data()); break;
    default: break;
  }
  return {std::move(net), nn::LossSpec{kind, std::move(target), 0.7}};
}

/// Input whose hidden pre-activations all stay at least `margin` away from the ReLU kink.
std::vector<double> kink_free_input(const nn::Network& net, std::mt19937_64& rng, double margin) {
  std::normal_distribution<double> normal;
  for (;;) {
    std::vector<double> x(net.input_dim());
    for (double& v : x) v = normal(rng);
    const nn::ForwardPass fp = net.run(x);
    const auto& pre = fp.activations[1];
    if (std::all_of(pre.begin(), pre.end(), [&](double z) { return std::abs(z) > margin; })) {
      return x;
    }
  }
}

SuiteResult gradient_suite(std::uint64_t seed, std::mt19937_64& rng, bool plant_fault) {
  constexpr std::size_t kProbes = 20;
  double worst = 0.0;
  std::size_t cases = 0;
  for (nn::LossKind kind : nn::kAllLossKinds) {
    for (std::size_t p = 0; p < kProbes; ++p) {
      Probe probe = make_probe(kind, seed + cases, rng);
      const auto x = kink_free_input(probe.net, rng, 1e-3);
      nn::GradientCheckOptions opts;
      // the output bias gradient equals dL/d(output) and is generically nonzero
      if (plant_fault) opts.corrupt_index = probe.net.parameter_count() - probe.net.output_dim();
      const auto report = nn::gradient_check(probe.net, probe.spec, x, opts);
      worst = std::max(worst, report.max_rel_error);
      ++cases;
    }
  }
  return finish(plant_fault ? "gradient_check (planted fault)" : "gradient_check", cases, worst, 1e-4);
}

SuiteResult constraint_suite(std::mt19937_64& rng) {
  constexpr std::size_t kCases = 500;
  const auto pole = sphere::uniform_pole(10);
  nn::Network sphere_net(6, rng());
  sphere_net.add_dense(16).add_relu().add_dense(10).add_sphere_normalize();
  nn::Network tangent_net(6, rng());
  tangent_net.add_dense(16).add_relu().add_dense(10).add_tangent_project(pole);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (std::size_t i = 0; i < kCases; ++i) {
    std::vector<double> x(6);
    for (double& v : x) v = 10.0 * normal(rng);
    worst = std::max(worst, sphere_net.run(x).max_unit_norm_residual);
    worst = std::max(worst, tangent_net.run(x).max_tangency_residual);
  }
  return finish("constraint_layers", 2 * kCases, worst, 1e-12);
}

}  // namespace

// --- config API --------------------------------------------------------------

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::F2is: return "f2is";
    case ExperimentKind::Classify: return "classify";
    case ExperimentKind::Geomcheck: return "geomcheck";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::F2is, ExperimentKind::Classify, ExperimentKind::Geomcheck}) {
    if (experiment_name(k) == name) return k;
  }
  throw GeoError(ErrorCode::ConfigError, "unknown experiment '" + std::string(name) + "'");
}

std::size_t ExperimentConfig::effective_batch() const {
  if (batch != 0) return batch;
  return experiment == ExperimentKind::Classify ? kClassifyDefaultBatch : kF2isDefaultBatch;
}

std::size_t ExperimentConfig::effective_iterations() const {
  if (iterations != 0) return iterations;
  return experiment == ExperimentKind::Classify ? kClassifyDefaultIterations : kF2isDefaultIterations;
}

std::vector<std::size_t> ExperimentConfig::effective_hidden() const {
  if (!hidden.empty()) return hidden;
  if (experiment == ExperimentKind::Classify) return {64};
  return {128, 128};
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  for (const Key& k : keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw GeoError(ErrorCode::ConfigError, "unknown config key '" + std::string(key) + "'");
}

void apply_override(ExperimentConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw GeoError(ErrorCode::ConfigError, "expected key=value, got '" + std::string(assignment) + "'");
  }
  apply_setting(config, assignment.substr(0, eq), assignment.substr(eq + 1));
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (const auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = trim(v);
    if (v.empty()) continue;
    if (v.find('=') == std::string_view::npos) {
      throw GeoError(ErrorCode::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    apply_override(base, v);
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw GeoError(ErrorCode::ConfigError, "cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Key& k : keys()) out.emplace_back(k.name, k.get(config));
  return out;
}

std::optional<double> MetricsRecord::scalar(std::string_view name) const {
  for (const auto& [k, v] : scalars) {
    if (k == name) return v;
  }
  return std::nullopt;
}

// --- experiments -------------------------------------------------------------

MetricsRecord run_f2is(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_training(config);
  datasets::F2isParams params = config.f2is;
  params.seed = config.seed;
  const datasets::SubspaceRegressionSet data = datasets::generate_f2is(params);
  const std::size_t n = data.n();
  const std::size_t d = data.d();
  const bool tangent = config.framework == "tangent";

  std::optional<grassmann::GrassPole> pole;
  double frechet_iterations = 0.0;
  if (tangent) {
    if (config.pole == "frechet") {
      std::vector<grassmann::Subspace> train_subspaces;
      for (std::size_t id : data.train_ids) train_subspaces.push_back(data.subjects[id].true_subspace);
      const auto fm = grassmann::frechet_mean(train_subspaces);
      frechet_iterations = fm.iterations;
      pole = fm.mean;
    } else {
      pole = training_pca_pole(data);
    }
  }

  // One target per training subject, shared by all of its samples.
  std::vector<nn::LossSpec> subject_targets(data.subjects.size(), nn::LossSpec{nn::LossKind::BaselineU, Matrix{}});
  double max_target_norm = 0.0;
  for (std::size_t id : data.train_ids) {
    const auto& s = data.subjects[id];
    if (tangent) {
      grassmann::GrassTangent t = grassmann::grassmann_log(*pole, s.true_subspace);
      max_target_norm = std::max(max_target_norm, t.norm());
      subject_targets[id] = nn::LossSpec{nn::LossKind::GrassmannA, std::move(t.a)};
    } else {
      subject_targets[id] = nn::LossSpec{nn::LossKind::BaselineU, s.presented_basis};
    }
  }
  std::vector<nn::Example> pool;
  for (std::size_t id : data.train_ids) {
    for (const auto& x : data.subjects[id].inputs) pool.push_back(nn::Example{x, subject_targets[id]});
  }

  const std::size_t out_dim = tangent ? (n - d) * d : n * d;
  const auto hidden = config.effective_hidden();
  nn::Network net = nn::make_mlp(n, hidden, out_dim, stream_seed(config.seed, kWeightStream));
  EpochSampler sampler(pool.size(), stream_seed(config.seed, kBatchStream));
  const TrainStats stats = train(net, config, pool, sampler);

  MetricsRecord rec;
  rec.per_sample_columns = {"subject", "sample", "geodesic_distance"};
  double sum = 0.0;
  double worst = 0.0;
  for (std::size_t id : data.test_ids) {
    const auto& s = data.subjects[id];
    for (std::size_t j = 0; j < s.inputs.size(); ++j) {
      const std::vector<double> out = net.run(s.inputs[j]).activations.back();
      const grassmann::Subspace predicted =
          tangent ? grassmann::grassmann_exp(*pole, grassmann::GrassTangent{*pole, Matrix(n - d, d, out)})
                  : grassmann::subspace_from_span(Matrix(n, d, out));
      const double dg = grassmann::geodesic_distance(predicted, s.true_subspace);
      sum += dg;
      worst = std::max(worst, dg);
      rec.per_sample.push_back({static_cast<double>(id), static_cast<double>(j), dg});
    }
  }

  rec.experiment = "f2is";
  rec.seed = config.seed;
  rec.config = config_entries(config);
  rec.loss_curve = stats.curve;
  rec.scalars = {
      {"mean_test_geodesic_distance", sum / static_cast<double>(rec.per_sample.size())},
      {"max_test_geodesic_distance", worst},
      {"max_possible_geodesic_distance", grassmann::max_geodesic_distance(d)},
      {"final_train_loss", stats.final_loss},
      {"test_samples", static_cast<double>(rec.per_sample.size())},
      {"parameters", static_cast<double>(net.parameter_count())},
  };
  if (tangent) {
    rec.scalars.emplace_back("max_train_target_norm", max_target_norm);
    if (config.pole == "frechet") rec.scalars.emplace_back("frechet_iterations", frechet_iterations);
  }
  rec.wall_clock_seconds = seconds_since(start);
  return rec;
}

MetricsRecord run_classify(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  validate_training(config);
  const ClassifyData data = load_classification_data(config);
  if (data.train.size() == 0 || data.test.size() == 0) {
    throw GeoError(ErrorCode::DatasetUnavailable, "empty classification dataset");
  }
  const nn::LossKind kind = nn::parse_loss_kind(config.loss);
  const std::size_t classes = data.train.classes;
  const auto pole = sphere::uniform_pole(classes);

  nn::Network net = nn::make_mlp(data.train.dim(), config.effective_hidden(), classes,
                                 stream_seed(config.seed, kWeightStream));
  if (kind == nn::LossKind::SEuc || kind == nn::LossKind::SGeo) net.add_sphere_normalize();
  if (kind == nn::LossKind::TProj) net.add_tangent_project(pole);

  const auto targets = datasets::make_classification_targets(data.train.labels, classes, framework_for(kind));
  std::vector<nn::Example> pool;
  pool.reserve(data.train.size());
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    pool.push_back(nn::Example{data.train.inputs[i], nn::LossSpec{kind, targets[i], config.lambda}});
  }
  EpochSampler sampler(pool.size(), stream_seed(config.seed, kBatchStream));
  const TrainStats stats = train(net, config, pool, sampler);

  MetricsRecord rec;
  rec.per_sample_columns = {"index", "label", "predicted", "correct"};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    const std::vector<double> out = net.run(data.test.inputs[i]).activations.back();
    const std::size_t label = data.test.labels[i];
    const std::size_t guess = predict(kind, pole, out);
    correct += guess == label;
    rec.per_sample.push_back(
        {static_cast<double>(i), static_cast<double>(label), static_cast<double>(guess), guess == label ? 1.0 : 0.0});
  }
  std::size_t train_correct = 0;
  for (std::size_t i = 0; i < data.train.size(); ++i) {
    train_correct += predict(kind, pole, net.run(data.train.inputs[i]).activations.back()) == data.train.labels[i];
  }

  rec.experiment = "classify";
  rec.seed = config.seed;
  rec.config = config_entries(config);
  rec.config.emplace_back("data_source", data.train.source == datasets::DataSource::IdxFiles ? "idx" : "synthetic");
  rec.loss_curve = stats.curve;
  rec.scalars = {
      {"test_accuracy", static_cast<double>(correct) / static_cast<double>(data.test.size())},
      {"train_accuracy", static_cast<double>(train_correct) / static_cast<double>(data.train.size())},
      {"final_train_loss", stats.final_loss},
      {"max_unit_norm_residual", stats.max_unit_norm_residual},
      {"max_tangency_residual", stats.max_tangency_residual},
      {"train_samples", static_cast<double>(data.train.size())},
      {"test_samples", static_cast<double>(data.test.size())},
  };
  rec.wall_clock_seconds = seconds_since(start);
  return rec;
}

MetricsRecord run_geomcheck(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(stream_seed(config.seed, kCheckStream));

  MetricsRecord rec;
  rec.experiment = "geomcheck";
  rec.seed = config.seed;
  rec.config = config_entries(config);
  rec.suites.push_back(sphere_roundtrip_suite(rng));
  for (auto& s : grassmann_suites(rng)) rec.suites.push_back(std::move(s));
  rec.suites.push_back(distance_bound_suite());
  for (auto& s : frechet_suites(rng)) rec.suites.push_back(std::move(s));
  rec.suites.push_back(procrustes_suite(rng));
  rec.suites.push_back(gradient_suite(config.seed, rng, config.plant_fault));
  rec.suites.push_back(constraint_suite(rng));

  rec.per_sample_columns = {"suite", "cases", "max_residual", "tolerance", "passed"};
  for (std::size_t i = 0; i < rec.suites.size(); ++i) {
    const SuiteResult& s = rec.suites[i];
    rec.per_sample.push_back(
        {static_cast<double>(i), static_cast<double>(s.cases), s.max_residual, s.tolerance, s.passed ? 1.0 : 0.0});
    rec.scalars.emplace_back(s.name + ".max_residual", s.max_residual);
    rec.passed = rec.passed && s.passed;
  }
  rec.wall_clock_seconds = seconds_since(start);
  return rec;
}

MetricsRecord run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::F2is: return run_f2is(config);
    case ExperimentKind::Classify: return run_classify(config);
    case ExperimentKind::Geomcheck: return run_geomcheck(config);
  }
  throw GeoError(ErrorCode::ConfigError, "unknown experiment");
}

// --- output ------------------------------------------------------------------

std::string metrics_to_json(const MetricsRecord& record) {
  nlohmann::ordered_json j;
  j["experiment"] = record.experiment;
  j["seed"] = record.seed;
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : record.config) j["config"][k] = v;
  j["scalars"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : record.scalars) j["scalars"][k] = v;
  j["loss_curve"] = nlohmann::ordered_json::array();
  for (const auto& [it, loss] : record.loss_curve) j["loss_curve"].push_back({it, loss});
  j["suites"] = nlohmann::ordered_json::array();
  for (const SuiteResult& s : record.suites) {
    j["suites"].push_back({{"name", s.name},
                           {"cases", s.cases},
                           {"max_residual", s.max_residual},
                           {"tolerance", s.tolerance},
                           {"passed", s.passed}});
  }
  j["passed"] = record.passed;
  j["timing"] = {{"wall_clock_seconds", record.wall_clock_seconds}};
  return j.dump(2);
}

std::string per_sample_csv(const MetricsRecord& record) {
  std::ostringstream out;
  for (std::size_t i = 0; i < record.per_sample_columns.size(); ++i) {
    out << (i ? "," : "") << record.per_sample_columns[i];
  }
  out << '\n';
  const bool suites = !record.suites.empty();
  for (const auto& row : record.per_sample) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (suites && i == 0) {
        out << record.suites[static_cast<std::size_t>(row[0])].name;
      } else {
        out << format_real(row[i]);
      }
    }
    out << '\n';
  }
  return out.str();
}

void write_outputs(const MetricsRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& text) {
    std::ofstream out(dir / name);
    if (!out) throw GeoError(ErrorCode::ConfigError, "cannot write " + (dir / name).string());
    out << text;
  };
  write("metrics.json", metrics_to_json(record) + "\n");
  write("per_sample.csv", per_sample_csv(record));
}

}  // namespace geonet::experiment
