// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "geonet/experiment.hpp"
#include "geonet/grassmann.hpp"
#include "geonet/numkernel.hpp"
#include "geonet/sphere.hpp"

using namespace geonet;
using experiment::ExperimentConfig;
using experiment::ExperimentKind;
using experiment::MetricsRecord;

namespace {

// Pinned tolerances and budgets.
constexpr double kSphereRoundtripTol = 1e-9;
constexpr double kSphereBudgetSeconds = 1.0;
constexpr double kGrassTol = 1e-8;
constexpr double kGrassBudgetSeconds = 10.0;
constexpr double kBoundTol = 1e-6;
constexpr double kGradientTol = 1e-4;
constexpr double kGradientBudgetSeconds = 30.0;
constexpr double kMidpointTol = 1e-6;
constexpr double kStationarityTol = 1e-6;
constexpr double kPermutationTol = 1e-7;
constexpr double kF2isRatio = 0.7;
constexpr double kF2isAbsolute = 1.0;
constexpr double kF2isBudgetSeconds = 300.0;
constexpr double kAccuracyIdx = 0.90;
constexpr double kAccuracySynthetic = 0.95;
constexpr double kAccuracyGap = 0.02;
constexpr double kClassifyBudgetSeconds = 600.0;
constexpr double kConstraintTol = 1e-12;
constexpr double kProcrustesSlack = 1e-12;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double timed(const std::function<void()>& body) {
  const auto start = std::chrono::steady_clock::now();
  body();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix gaussian(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (double& x : m.data()) x = normal(rng);
  return m;
}

grassmann::Subspace random_subspace(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  return grassmann::subspace_from_span(gaussian(n, d, rng));
}

grassmann::Subspace at_distance(const grassmann::GrassPole& pole, double dist, std::mt19937_64& rng) {
  Matrix a = gaussian(pole.n() - pole.d(), pole.d(), rng);
  a *= dist / a.frobenius();
  return grassmann::grassmann_exp(pole, grassmann::GrassTangent{pole, std::move(a)});
}

void criterion1() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> angle(0.0, 3.0);
  double worst = 0.0;
  const double secs = timed([&] {
    for (int i = 0; i < 1000; ++i) {
      const Matrix g = gaussian(2, 10, rng);
      const auto pole = sphere::UnitVector::normalize(g.row(0));
      auto dir = sphere::project_to_tangent(pole, g.row(1));
      const double s = angle(rng) / dir.norm();
      for (double& v : dir.coords) v *= s;
      const auto y = sphere::sphere_exp(pole, dir);
      worst = std::max(worst, sphere::sphere_distance(sphere::sphere_exp(pole, sphere::sphere_log(pole, y)), y));
    }
  });
  report(1, worst <= kSphereRoundtripTol && secs < kSphereBudgetSeconds,
         fmt("sphere roundtrip over 1000 pairs, max D = %.3e (tol %.0e), %.3f s (< %.0f s)", worst,
             kSphereRoundtripTol, secs, kSphereBudgetSeconds));
}

void criterion2() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> dist(0.0, 1.2);
  double roundtrip = 0.0;
  double isometry = 0.0;
  const double secs = timed([&] {
    for (int i = 0; i < 200; ++i) {
      const grassmann::GrassPole pole(random_subspace(20, 3, rng));
      const auto y = at_distance(pole, dist(rng), rng);
      const auto t = grassmann::grassmann_log(pole, y);
      roundtrip = std::max(roundtrip, grassmann::geodesic_distance(grassmann::grassmann_exp(pole, t), y));
      isometry = std::max(isometry, std::abs(t.a.frobenius() - grassmann::geodesic_distance(pole.subspace(), y)));
    }
  });
  report(2, roundtrip <= kGrassTol && isometry <= kGrassTol && secs < kGrassBudgetSeconds,
         fmt("G(20,3) over 200 pairs, roundtrip %.3e, isometry %.3e (tol %.0e), %.3f s (< %.0f s)", roundtrip,
             isometry, kGrassTol, secs, kGrassBudgetSeconds));
}

void criterion3() {
  const double expected[] = {2.7207, 3.1416, 3.5124};
  bool ok = true;
  std::string detail = "orthogonal subspaces:";
  for (std::size_t d = 3; d <= 5; ++d) {
    const Matrix eye = Matrix::identity(2 * d);
    const auto a = grassmann::Subspace::from_basis(eye.cols_range(0, d));
    const auto b = grassmann::Subspace::from_basis(eye.cols_range(d, d));
    const double dg = grassmann::geodesic_distance(a, b);
    // the stated values are rounded to 4 places, so compare the exact bound too
    const double exact = std::numbers::pi * std::sqrt(static_cast<double>(d)) / 2.0;
    ok = ok && std::abs(dg - exact) <= kBoundTol && std::abs(dg - expected[d - 3]) <= 5e-5;
    detail += fmt(" d=%zu D_G=%.7f", d, dg);
  }
  report(3, ok, detail + fmt(" (tol %.0e)", kBoundTol));
}

void criterion4() {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Geomcheck;
  MetricsRecord rec;
  const double secs = timed([&] { rec = experiment::run_geomcheck(c); });
  const auto it = std::find_if(rec.suites.begin(), rec.suites.end(),
                               [](const auto& s) { return s.name == "gradient_check"; });
  if (it == rec.suites.end()) {
    report(4, false, "gradient_check suite missing");
    return;
  }
  report(4, it->max_residual < kGradientTol && it->cases == 160 && secs < kGradientBudgetSeconds,
         fmt("8 loss kinds x 20 probes, max rel error %.3e (< %.0e), %.3f s (< %.0f s)", it->max_residual,
             kGradientTol, secs, kGradientBudgetSeconds));
}

void criterion5() {
  std::mt19937_64 rng(505);
  double midpoint = 0.0;
  double stationarity = 0.0;
  double permutation = 0.0;
  for (int i = 0; i < 10; ++i) {
    const grassmann::GrassPole base(random_subspace(15, 4, rng));
    const std::vector<grassmann::Subspace> pair = {base.subspace(), at_distance(base, 1.0, rng)};
    const auto mid = grassmann::frechet_mean(pair).mean.subspace();
    midpoint = std::max(midpoint, std::abs(grassmann::geodesic_distance(mid, pair[0]) -
                                           grassmann::geodesic_distance(mid, pair[1])));

    std::vector<grassmann::Subspace> cloud;
    for (int k = 0; k < 9; ++k) cloud.push_back(at_distance(base, 0.6, rng));
    const auto fm = grassmann::frechet_mean(cloud).mean;
    Matrix sum(fm.n() - fm.d(), fm.d());
    for (const auto& s : cloud) sum += grassmann::grassmann_log(fm, s).a;
    sum *= 1.0 / static_cast<double>(cloud.size());
    stationarity = std::max(stationarity, sum.frobenius());

    std::reverse(cloud.begin(), cloud.end());
    std::rotate(cloud.begin(), cloud.begin() + 4, cloud.end());
    const auto fm2 = grassmann::frechet_mean(cloud).mean;
    permutation = std::max(permutation, grassmann::geodesic_distance(fm.subspace(), fm2.subspace()));
  }
  report(5, midpoint <= kMidpointTol && stationarity < kStationarityTol && permutation <= kPermutationTol,
         fmt("midpoint gap %.3e (tol %.0e), mean-log norm %.3e (tol %.0e), permutation shift %.3e (tol %.0e)",
             midpoint, kMidpointTol, stationarity, kStationarityTol, permutation, kPermutationTol));
}

MetricsRecord f2is_run(const std::string& framework) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::F2is;
  c.seed = 0;
  c.deterministic = true;
  c.framework = framework;
  return experiment::run_f2is(c);
}

MetricsRecord classify_run(const std::string& loss) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::Classify;
  c.seed = 0;
  c.deterministic = true;
  c.loss = loss;
  return experiment::run_classify(c);
}

bool is_idx(const MetricsRecord& r) {
  for (const auto& [k, v] : r.config)
    if (k == "data_source") return v == "idx";
  return false;
}

void criterion6(MetricsRecord& tangent_out) {
  MetricsRecord baseline;
  MetricsRecord tangent;
  const double secs = timed([&] {
    baseline = f2is_run("baseline");
    tangent = f2is_run("tangent");
  });
  const double b = *baseline.scalar("mean_test_geodesic_distance");
  const double t = *tangent.scalar("mean_test_geodesic_distance");
  report(6, t <= kF2isRatio * b && t <= kF2isAbsolute && secs < kF2isBudgetSeconds,
         fmt("mean test D_G tangent %.4f vs baseline %.4f (ratio %.3f <= %.1f, abs <= %.1f), %.1f s (< %.0f s)", t,
             b, t / b, kF2isRatio, kF2isAbsolute, secs, kF2isBudgetSeconds));
  tangent_out = std::move(tangent);
}

void criterion7_8(std::vector<MetricsRecord>& runs) {
  const double secs = timed([&] {
    for (const char* loss : {"ce", "seuc", "sgeo", "teuc", "torth", "tproj"}) runs.push_back(classify_run(loss));
  });
  const MetricsRecord& ce = runs[0];
  const MetricsRecord& sgeo = runs[2];
  const bool idx = is_idx(ce);
  const double floor = idx ? kAccuracyIdx : kAccuracySynthetic;
  const double a_ce = *ce.scalar("test_accuracy");
  const double a_sg = *sgeo.scalar("test_accuracy");
  report(7, a_ce >= floor && a_sg >= floor && std::abs(a_ce - a_sg) <= kAccuracyGap && secs < kClassifyBudgetSeconds,
         fmt("%s data: ce %.2f%%, sgeo %.2f%% (>= %.0f%%), gap %.2f points (<= %.0f), %.1f s (< %.0f s)",
             idx ? "idx" : "synthetic", 100 * a_ce, 100 * a_sg, 100 * floor, 100 * std::abs(a_ce - a_sg),
             100 * kAccuracyGap, secs, kClassifyBudgetSeconds));

  double unit = 0.0;
  double tangency = 0.0;
  for (const auto& r : runs) {
    unit = std::max(unit, *r.scalar("max_unit_norm_residual"));
    tangency = std::max(tangency, *r.scalar("max_tangency_residual"));
  }
  std::mt19937_64 rng(808);
  double procrustes = -1.0;
  for (int i = 0; i < 100; ++i) {
    const auto r = random_subspace(12, 4, rng);
    const auto ref = random_subspace(12, 4, rng);
    const double before = (r.basis() - ref.basis()).frobenius();
    const double after = (grassmann::procrustes_align(r, ref) - ref.basis()).frobenius();
    procrustes = std::max(procrustes, after - before);
  }
  report(8, unit <= kConstraintTol && tangency <= kConstraintTol && procrustes <= kProcrustesSlack,
         fmt("training unit-norm residual %.3e, tangency residual %.3e (tol %.0e), Procrustes max increase %.3e "
             "over 100 pairs (slack %.0e)",
             unit, tangency, kConstraintTol, procrustes, kProcrustesSlack));
}

std::string scalar_json(const MetricsRecord& r) {
  return nlohmann::json::parse(experiment::metrics_to_json(r))["scalars"].dump();
}

void criterion9(const MetricsRecord& f2is_first, const MetricsRecord& classify_first) {
  ExperimentConfig g;
  g.experiment = ExperimentKind::Geomcheck;
  g.deterministic = true;
  const bool f2is_same = scalar_json(f2is_run("tangent")) == scalar_json(f2is_first);
  const bool classify_same = scalar_json(classify_run("ce")) == scalar_json(classify_first);
  const bool geom_same = scalar_json(experiment::run_geomcheck(g)) == scalar_json(experiment::run_geomcheck(g));
  report(9, f2is_same && classify_same && geom_same,
         fmt("repeat runs at seed 0 give identical scalars: f2is %s, classify %s, geomcheck %s",
             f2is_same ? "yes" : "no", classify_same ? "yes" : "no", geom_same ? "yes" : "no"));
}

void guarded(std::initializer_list<int> ids, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    for (int id : ids) report(id, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  guarded({1}, criterion1);
  guarded({2}, criterion2);
  guarded({3}, criterion3);
  guarded({4}, criterion4);
  guarded({5}, criterion5);
  MetricsRecord f2is_tangent;
  guarded({6}, [&] { criterion6(f2is_tangent); });
  std::vector<MetricsRecord> classify_runs;
  guarded({7, 8}, [&] { criterion7_8(classify_runs); });
  guarded({9}, [&] {
    if (f2is_tangent.scalars.empty() || classify_runs.empty()) throw std::runtime_error("earlier runs missing");
    criterion9(f2is_tangent, classify_runs[0]);
  });
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED", failures);
  return failures == 0 ? 0 : 1;
}
