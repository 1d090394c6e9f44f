#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "igpr/covariance.hpp"
#include "igpr/gp.hpp"
#include "igpr/manifold.hpp"

namespace {

igpr::ManifoldPoint random_spd(std::mt19937_64& rng, int d) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = normal(rng);
  return igpr::ManifoldPoint::spd(a * a.transpose() + Eigen::MatrixXd::Identity(d, d));
}

void BM_SpdExpLog(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const int d = static_cast<int>(state.range(0));
  igpr::ManifoldPoint p = random_spd(rng, d);
  igpr::ManifoldPoint q = random_spd(rng, d);
  for (auto _ : state) {
    igpr::TangentVector v = igpr::log_map(p, q);
    benchmark::DoNotOptimize(igpr::exp_map(p, v));
  }
}
BENCHMARK(BM_SpdExpLog)->Arg(2)->Arg(3)->Arg(6);

void BM_SpdTransport(benchmark::State& state) {
  std::mt19937_64 rng(11);
  const int d = static_cast<int>(state.range(0));
  igpr::ManifoldPoint p = random_spd(rng, d);
  igpr::ManifoldPoint q = random_spd(rng, d);
  igpr::TangentVector v = igpr::log_map(p, q);
  for (auto _ : state) benchmark::DoNotOptimize(igpr::parallel_transport(v, q));
}
BENCHMARK(BM_SpdTransport)->Arg(2)->Arg(3)->Arg(6);

void BM_SphereExpLog(benchmark::State& state) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd a(3), b(3);
  for (int i = 0; i < 3; ++i) {
    a(i) = normal(rng);
    b(i) = normal(rng);
  }
  igpr::ManifoldPoint p = igpr::ManifoldPoint::sphere(a.normalized());
  igpr::ManifoldPoint q = igpr::ManifoldPoint::sphere(b.normalized());
  for (auto _ : state) {
    igpr::TangentVector v = igpr::log_map(p, q);
    benchmark::DoNotOptimize(igpr::exp_map(p, v));
  }
}
BENCHMARK(BM_SphereExpLog);

void BM_LogMarginalLikelihood(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = 3;
  Eigen::MatrixXd x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = static_cast<double>(i) / (n - 1);
  igpr::CovarianceModel cov;
  cov.kernel = igpr::KernelSpec::diag_rbf((Eigen::VectorXd(3) << 0.1, 0.3, 0.5).finished());
  cov.noise_var = 1e-4;
  cov.out_dim = d;
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd r(n * d);
  for (int i = 0; i < n * d; ++i) r(i) = normal(rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(igpr::log_marginal_likelihood(r, x, cov));
}
BENCHMARK(BM_LogMarginalLikelihood)->Arg(50)->Arg(100)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
