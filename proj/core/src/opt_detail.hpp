#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace igpr::opt {

constexpr double kLog2Pi = 1.8378770664093453;

/// Gaussian log evidence -1/2 r'K^{-1}r - 1/2 log|K| - m/2 log 2pi; -inf when
/// K is not PD even after a 1e-10 jitter.
inline double gaussian_lml(const Eigen::VectorXd& r, const Eigen::MatrixXd& k) {
  Eigen::MatrixXd kj = k;
  Eigen::LLT<Eigen::MatrixXd> llt(kj);
  if (llt.info() != Eigen::Success) {
    kj += 1e-10 * Eigen::MatrixXd::Identity(k.rows(), k.cols());
    llt.compute(kj);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  }
  Eigen::VectorXd alpha = llt.solve(r);
  double logdet = 0.0;
  for (int i = 0; i < kj.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
  return -0.5 * r.dot(alpha) - logdet - 0.5 * static_cast<double>(r.size()) * kLog2Pi;
}

struct AscentState {
  Eigen::VectorXd x;
  double f = -std::numeric_limits<double>::infinity();
  bool hit_max_iters = false;
  double exit_grad_norm = 0.0;
  std::vector<double> objective;
};

/// Gradient ascent with central finite differences (step 1e-5) and a
/// backtracking Armijo line search.
inline AscentState ascend(const std::function<double(const Eigen::VectorXd&)>& obj,
                          Eigen::VectorXd x, int max_iters, double tol) {
  AscentState res;
  double f = obj(x);
  const double h = 1e-5;
  const int p = static_cast<int>(x.size());
  int it = 0;
  double gnorm = 0.0;
  for (; it < max_iters; ++it) {
    res.objective.push_back(f);
    Eigen::VectorXd g(p);
    for (int k = 0; k < p; ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      g(k) = (obj(xp) - obj(xm)) / (2.0 * h);
    }
    gnorm = g.norm();
    if (!std::isfinite(gnorm) || gnorm <= tol) break;
    double step = 1.0 / std::max(1.0, gnorm);
    bool improved = false;
    for (int bt = 0; bt < 30; ++bt) {
      Eigen::VectorXd x2 = x + step * g;
      double f2 = obj(x2);
      if (std::isfinite(f2) && f2 > f + 1e-4 * step * gnorm * gnorm) {
        x = x2;
        f = f2;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  res.hit_max_iters = (it == max_iters);
  res.exit_grad_norm = gnorm;
  res.x = std::move(x);
  res.f = f;
  return res;
}

}  // namespace igpr::opt
