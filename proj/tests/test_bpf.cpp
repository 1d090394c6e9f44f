#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "igpr/bpf.hpp"
#include "oracles.hpp"

using namespace igpr;

namespace {

Dataset sphere_dataset(const std::vector<double>& ts, const std::vector<Eigen::Vector3d>& ys) {
  Dataset d;
  d.t.resize(static_cast<int>(ts.size()));
  d.X.resize(static_cast<int>(ts.size()), 1);
  for (size_t i = 0; i < ts.size(); ++i) {
    d.t(static_cast<int>(i)) = ts[i];
    d.X(static_cast<int>(i), 0) = ts[i];
    d.Y.push_back(ManifoldPoint::sphere(ys[i]));
  }
  return d;
}

}  // namespace

TEST_CASE("geodesic curve evaluates the closed form") {
  ManifoldPoint p = ManifoldPoint::sphere(Eigen::Vector3d(1, 0, 0));
  TangentVector v(p, Eigen::Vector3d(0, M_PI / 2, 0));
  BasepointCurve c = BasepointCurve::geodesic(p, v);
  CHECK((c.eval(0.0).vec() - Eigen::Vector3d(1, 0, 0)).norm() <= 1e-14);
  CHECK((c.eval(1.0).vec() - Eigen::Vector3d(0, 1, 0)).norm() <= 1e-12);
  double s = std::sqrt(0.5);
  CHECK((c.eval(0.5).vec() - Eigen::Vector3d(s, s, 0)).norm() <= 1e-12);
  // constant speed: distance from the anchor is linear in t
  for (double t : {0.2, 0.4, 0.9})
    CHECK(distance(p, c.eval(t)) == doctest::Approx(t * M_PI / 2).epsilon(1e-10));
}

TEST_CASE("geodesic curve requires the velocity at its anchor") {
  ManifoldPoint p = ManifoldPoint::sphere(Eigen::Vector3d(1, 0, 0));
  ManifoldPoint q = ManifoldPoint::sphere(Eigen::Vector3d(0, 1, 0));
  TangentVector v(q, Eigen::Vector3d(1, 0, 0));
  CHECK_THROWS_AS(BasepointCurve::geodesic(p, v), DimensionError);
}

TEST_CASE("piecewise curve interpolates its nodes and clamps outside") {
  std::mt19937_64 rng(41);
  std::vector<double> ts = {0.0, 0.4, 1.0};
  std::vector<ManifoldPoint> ps;
  for (int k = 0; k < 3; ++k) ps.push_back(ManifoldPoint::spd(oracle::random_spd(rng, 2, 0.4)));
  BasepointCurve c = BasepointCurve::piecewise(ts, ps);
  for (int k = 0; k < 3; ++k) CHECK((c.eval(ts[k]).value() - ps[k].value()).norm() <= 1e-12);
  // between nodes: geodesic interpolation
  ManifoldPoint mid = exp_map(ps[0], log_map(ps[0], ps[1]) * 0.5);
  CHECK((c.eval(0.2).value() - mid.value()).norm() <= 1e-10);
  // outside the grid: clamped to the end nodes
  CHECK((c.eval(-0.5).value() - ps[0].value()).norm() <= 1e-12);
  CHECK((c.eval(2.0).value() - ps[2].value()).norm() <= 1e-12);
}

TEST_CASE("piecewise construction validates the grid") {
  ManifoldPoint a = ManifoldPoint::spd(Eigen::Matrix2d::Identity());
  CHECK_THROWS_AS(BasepointCurve::piecewise({0.0}, {a}), DimensionError);
  CHECK_THROWS_AS(BasepointCurve::piecewise({0.0, 0.0}, {a, a}), DimensionError);
  CHECK_THROWS_AS(BasepointCurve::piecewise({1.0, 0.0}, {a, a}), DimensionError);
  CHECK_THROWS_AS(BasepointCurve::piecewise({0.0, 1.0}, {a}), DimensionError);
}

TEST_CASE("transport along a geodesic matches direct transport") {
  std::mt19937_64 rng(42);
  ManifoldPoint p = ManifoldPoint::spd(oracle::random_spd(rng, 3, 0.4));
  TangentVector vel(p, oracle::random_tangent_spd(rng, p.value(), 0.8));
  BasepointCurve c = BasepointCurve::geodesic(p, vel);
  TangentVector w(p, oracle::random_tangent_spd(rng, p.value(), 1.0));
  TangentVector along = c.transport_along(0.0, 0.7, w);
  TangentVector direct = parallel_transport(w, c.eval(0.7));
  CHECK((along.value() - direct.value()).norm() <= 1e-10);
}

TEST_CASE("transport along a piecewise curve composes exactly") {
  std::mt19937_64 rng(43);
  std::vector<double> ts = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<ManifoldPoint> ps;
  for (size_t k = 0; k < ts.size(); ++k)
    ps.push_back(ManifoldPoint::spd(oracle::random_spd(rng, 2, 0.5)));
  BasepointCurve c = BasepointCurve::piecewise(ts, ps);
  TangentVector w(ps[0], oracle::random_tangent_spd(rng, ps[0].value(), 1.0));

  // chaining through an intermediate index equals the one-shot transport
  TangentVector direct = c.transport_along(0.0, 1.0, w);
  TangentVector chained = c.transport_along(0.6, 1.0, c.transport_along(0.0, 0.6, w));
  CHECK((direct.value() - chained.value()).norm() <= 1e-10);

  // and transporting forward then back restores the vector
  TangentVector back = c.transport_along(1.0, 0.0, direct);
  CHECK((back.value() - w.value()).norm() <= 1e-10);

  // isometry along the curve
  CHECK(norm(direct) == doctest::Approx(norm(w)).epsilon(1e-9));
}

TEST_CASE("geodesic regression recovers noiseless geodesic data") {
  std::mt19937_64 rng(44);
  ManifoldPoint p0 = ManifoldPoint::sphere(oracle::random_unit(rng, 3));
  TangentVector v0(p0, oracle::random_tangent_sphere(rng, p0.vec(), 0.9));
  BasepointCurve truth = BasepointCurve::geodesic(p0, v0);

  Dataset data;
  const int n = 12;
  data.t.resize(n);
  data.X.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / (n - 1);
    data.t(i) = t;
    data.X(i, 0) = t;
    data.Y.push_back(truth.eval(t));
  }
  GeodesicFitResult res = fit_geodesic_regression(data);
  CHECK(res.objective <= 1e-10);
  for (double t : {0.0, 0.3, 0.8, 1.0})
    CHECK(distance(res.curve.eval(t), truth.eval(t)) <= 1e-4);
}

TEST_CASE("geodesic regression handles noisy SPD data sensibly") {
  std::mt19937_64 rng(45);
  ManifoldPoint p0 = ManifoldPoint::spd(Eigen::Matrix2d::Identity());
  Eigen::Matrix2d vel;
  vel << 0.6, 0.2, 0.2, -0.3;
  BasepointCurve truth = BasepointCurve::geodesic(p0, TangentVector(p0, vel));

  Dataset data;
  const int n = 20;
  data.t.resize(n);
  data.X.resize(n, 1);
  for (int i = 0; i < n; ++i) {
    double t = static_cast<double>(i) / (n - 1);
    data.t(i) = t;
    data.X(i, 0) = t;
    ManifoldPoint mu = truth.eval(t);
    data.Y.push_back(exp_map(mu, TangentVector(mu, oracle::random_tangent_spd(rng, mu.value(), 0.05))));
  }
  GeodesicFitResult res = fit_geodesic_regression(data);
  double err = 0.0;
  for (double t : {0.0, 0.5, 1.0}) err = std::max(err, distance(res.curve.eval(t), truth.eval(t)));
  CHECK(err <= 0.1);
}

TEST_CASE("geodesic regression input validation") {
  Dataset empty;
  CHECK_THROWS_AS(fit_geodesic_regression(empty), DimensionError);
  Dataset one = sphere_dataset({0.5}, {Eigen::Vector3d(1, 0, 0)});
  CHECK_THROWS_AS(fit_geodesic_regression(one), DimensionError);
  // two samples at the same index value
  Dataset same = sphere_dataset({0.5, 0.5}, {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0)});
  CHECK_THROWS_AS(fit_geodesic_regression(same), DimensionError);
}

TEST_CASE("local linear smoother reproduces affine series exactly") {
  std::vector<std::pair<double, double>> series;
  for (int i = 0; i < 30; ++i) {
    double t = i / 29.0;
    series.emplace_back(t, 2.0 - 3.0 * t);
  }
  auto out = local_linear_smooth(series, 0.1);
  REQUIRE(out.size() == series.size());
  for (size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].first == doctest::Approx(series[i].first));
    CHECK(out[i].second == doctest::Approx(series[i].second).epsilon(1e-10));
  }
}

TEST_CASE("local linear smoother attenuates noise") {
  std::mt19937_64 rng(46);
  std::normal_distribution<double> noise(0.0, 0.2);
  std::vector<std::pair<double, double>> series;
  double raw_sse = 0.0;
  for (int i = 0; i < 200; ++i) {
    double t = i / 199.0;
    double e = noise(rng);
    raw_sse += e * e;
    series.emplace_back(t, std::sin(2.0 * t) + e);
  }
  auto out = local_linear_smooth(series, 0.05);
  double smooth_sse = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    double d = out[i].second - std::sin(2.0 * out[i].first);
    smooth_sse += d * d;
  }
  CHECK(smooth_sse < 0.5 * raw_sse);
}

TEST_CASE("smoother validation and sparse-neighborhood fallback") {
  std::vector<std::pair<double, double>> series = {{0.0, 1.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(local_linear_smooth(series, 0.0), DimensionError);
  CHECK_THROWS_AS(local_linear_smooth(series, -1.0), DimensionError);
  CHECK_THROWS_AS(local_linear_smooth({{0.0, 1.0}}, 0.1), DimensionError);
  // isolated points fall back to the nearest neighbor instead of dividing by ~0
  std::vector<std::pair<double, double>> sparse = {{0.0, 1.0}, {10.0, 5.0}, {20.0, -3.0}};
  auto out = local_linear_smooth(sparse, 0.01);
  CHECK(out[0].second == doctest::Approx(1.0));
  CHECK(out[2].second == doctest::Approx(-3.0));
}

TEST_CASE("reference-rule bandwidth") {
  // 1.06 * sd * n^{-1/5} with the sample (n-1) standard deviation
  std::vector<double> ts;
  for (int i = 0; i < 50; ++i) ts.push_back(i / 49.0);
  double mean = 0.5;
  double var = 0.0;
  for (double t : ts) var += (t - mean) * (t - mean);
  var /= 49.0;
  double expect = 1.06 * std::sqrt(var) * std::pow(50.0, -0.2);
  CHECK(default_bandwidth(ts) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("dataset validation and subsetting") {
  Dataset d = sphere_dataset({0.0, 0.5, 1.0},
                             {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
                              Eigen::Vector3d(0, 0, 1)});
  CHECK_NOTHROW(d.validate());
  Dataset sub = d.subset({2, 0});
  CHECK(sub.size() == 2);
  CHECK(sub.t(0) == 1.0);
  CHECK((sub.Y[1].vec() - Eigen::Vector3d(1, 0, 0)).norm() <= 1e-15);

  Dataset empty;
  CHECK_THROWS_AS(empty.validate(), DimensionError);
  Dataset bad = d;
  bad.t.resize(2);
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  Dataset mixed = d;
  mixed.Y[1] = ManifoldPoint::spd(Eigen::Matrix2d::Identity());
  CHECK_THROWS_AS(mixed.validate(), DimensionError);
}
