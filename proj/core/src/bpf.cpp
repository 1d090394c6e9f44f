#include "igpr/bpf.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace igpr {

void Dataset::validate() const {
  if (Y.empty()) throw DimensionError("dataset is empty");
  if (static_cast<int>(Y.size()) != X.rows() || static_cast<int>(Y.size()) != t.size())
    throw DimensionError("dataset fields have inconsistent lengths");
  for (const auto& y : Y)
    if (!(y.descriptor() == Y.front().descriptor()))
      throw DimensionError("dataset outputs live on different manifolds");
}

Dataset Dataset::subset(const std::vector<int>& idx) const {
  Dataset out;
  out.X.resize(static_cast<int>(idx.size()), X.cols());
  out.t.resize(static_cast<int>(idx.size()));
  out.Y.reserve(idx.size());
  for (size_t k = 0; k < idx.size(); ++k) {
    out.X.row(static_cast<int>(k)) = X.row(idx[k]);
    out.t(static_cast<int>(k)) = t(idx[k]);
    out.Y.push_back(Y[idx[k]]);
  }
  return out;
}

BasepointCurve BasepointCurve::geodesic(const ManifoldPoint& anchor,
                                        const TangentVector& velocity) {
  if ((velocity.base().value() - anchor.value()).norm() > 1e-8)
    throw DimensionError("geodesic velocity must be based at the anchor");
  BasepointCurve c(Kind::Geodesic, anchor);
  c.velocity_ = velocity;
  return c;
}

BasepointCurve BasepointCurve::piecewise(std::vector<double> grid_t,
                                         std::vector<ManifoldPoint> grid_p) {
  if (grid_t.size() != grid_p.size() || grid_t.size() < 2)
    throw DimensionError("piecewise curve needs at least two grid points");
  for (size_t i = 1; i < grid_t.size(); ++i)
    if (grid_t[i] <= grid_t[i - 1])
      throw DimensionError("piecewise curve grid must be strictly increasing");
  BasepointCurve c(Kind::PiecewiseSmoothed, grid_p.front());
  c.grid_t_ = std::move(grid_t);
  c.grid_p_ = std::move(grid_p);
  return c;
}

ManifoldPoint BasepointCurve::eval(double t) const {
  if (kind_ == Kind::Geodesic) return exp_map(anchor_, *velocity_ * t);
  if (t <= grid_t_.front()) {
    if (t < grid_t_.front()) std::cerr << "igpr: basepoint curve evaluated below its grid, clamping\n";
    return grid_p_.front();
  }
  if (t >= grid_t_.back()) {
    if (t > grid_t_.back()) std::cerr << "igpr: basepoint curve evaluated above its grid, clamping\n";
    return grid_p_.back();
  }
  auto it = std::upper_bound(grid_t_.begin(), grid_t_.end(), t);
  size_t k = static_cast<size_t>(it - grid_t_.begin()) - 1;
  double s = (t - grid_t_[k]) / (grid_t_[k + 1] - grid_t_[k]);
  return exp_map(grid_p_[k], log_map(grid_p_[k], grid_p_[k + 1]) * s);
}

TangentVector BasepointCurve::transport_along(double t_from, double t_to, const TangentVector& v,
                                              SpdTransport mode) const {
  if (kind_ == Kind::Geodesic) return parallel_transport(v, eval(t_to), mode);
  // chain through grid nodes so that transports along the curve compose exactly
  std::vector<ManifoldPoint> waypoints;
  waypoints.push_back(eval(t_from));
  const bool forward = t_to >= t_from;
  if (forward) {
    for (size_t k = 0; k < grid_t_.size(); ++k)
      if (grid_t_[k] > t_from && grid_t_[k] < t_to) waypoints.push_back(grid_p_[k]);
  } else {
    for (size_t k = grid_t_.size(); k-- > 0;)
      if (grid_t_[k] < t_from && grid_t_[k] > t_to) waypoints.push_back(grid_p_[k]);
  }
  waypoints.push_back(eval(t_to));
  TangentVector cur = v;
  for (size_t k = 1; k < waypoints.size(); ++k)
    cur = parallel_transport(cur, waypoints[k], mode);
  return cur;
}

GeodesicFitResult fit_geodesic_regression(const Dataset& data, const GeodesicFitOptions& opts) {
  data.validate();
  const int n = data.size();
  if (n < 2) throw DimensionError("geodesic regression needs at least two samples");
  double tmin = data.t.minCoeff(), tmax = data.t.maxCoeff();
  if (tmax - tmin < 1e-14)
    throw DimensionError("geodesic regression needs at least two distinct index values");

  // init: intrinsic mean anchor, tangent-space OLS slope
  ManifoldPoint p0 = intrinsic_mean(data.Y);
  double tbar = data.t.mean();
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(p0.value().rows(), p0.value().cols());
  Eigen::MatrixXd num = zero, lbar = zero;
  double den = 0.0;
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd li = log_map(p0, data.Y[i]).value();
    num += (data.t(i) - tbar) * li;
    den += (data.t(i) - tbar) * (data.t(i) - tbar);
    lbar += li / static_cast<double>(n);
  }
  TangentVector slope(p0, num / den);
  TangentVector offset(p0, lbar - tbar * slope.value());
  ManifoldPoint anchor = exp_map(p0, offset);
  TangentVector v0 = parallel_transport(slope, anchor);

  auto objective = [&](const ManifoldPoint& a, const TangentVector& v) {
    BasepointCurve c = BasepointCurve::geodesic(a, v);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = distance(c.eval(data.t(i)), data.Y[i]);
      s += d * d;
    }
    return s;
  };

  double obj = objective(anchor, v0);
  bool converged = false;
  for (int it = 0; it < opts.max_iters; ++it) {
    BasepointCurve c = BasepointCurve::geodesic(anchor, v0);
    TangentVector grad_p = TangentVector::zero(anchor);
    TangentVector grad_v = TangentVector::zero(anchor);
    for (int i = 0; i < n; ++i) {
      ManifoldPoint mi = c.eval(data.t(i));
      TangentVector r = parallel_transport(log_map(mi, data.Y[i]), anchor);
      grad_p = grad_p + r;
      grad_v = grad_v + r * data.t(i);
    }
    double gnorm = norm(grad_p) + norm(grad_v);
    if (gnorm <= opts.tol) {
      converged = true;
      break;
    }
    double step = 1.0 / n;
    bool improved = false;
    for (int bt = 0; bt < 40; ++bt) {
      ManifoldPoint a2 = exp_map(anchor, grad_p * step);
      TangentVector v2 = parallel_transport(TangentVector(anchor, v0.value() + step * grad_v.value()), a2);
      double o2 = objective(a2, v2);
      if (o2 < obj - 1e-15) {
        double rel = (obj - o2) / std::max(obj, 1e-300);
        anchor = a2;
        v0 = v2;
        obj = o2;
        improved = true;
        if (rel < 1e-12 || obj < 1e-22) converged = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) {
      converged = true;  // no descent direction left at this resolution
      break;
    }
    if (converged) break;
  }
  if (!converged)
    std::cerr << "igpr: geodesic regression hit the iteration cap, returning best-so-far\n";
  return {BasepointCurve::geodesic(anchor, v0), obj, converged};
}

std::vector<std::pair<double, double>> local_linear_smooth(
    const std::vector<std::pair<double, double>>& series, double bandwidth) {
  if (bandwidth <= 0.0) throw DimensionError("bandwidth must be positive");
  if (series.size() < 2) throw DimensionError("smoother needs at least two points");
  std::vector<std::pair<double, double>> out;
  out.reserve(series.size());
  for (const auto& [t0, y0] : series) {
    int effective = 0;
    double s0 = 0, s1 = 0, s2 = 0, q0 = 0, q1 = 0;
    for (const auto& [ti, yi] : series) {
      double d = ti - t0;
      if (std::abs(d) <= 5.0 * bandwidth) ++effective;
      double w = std::exp(-d * d / (2.0 * bandwidth * bandwidth));
      s0 += w;
      s1 += w * d;
      s2 += w * d * d;
      q0 += w * yi;
      q1 += w * d * yi;
    }
    if (effective < 2) {
      std::cerr << "igpr: fewer than two neighbors within 5h at t=" << t0
                << ", falling back to nearest neighbor (consider widening the bandwidth)\n";
      double best = std::numeric_limits<double>::infinity();
      double val = y0;
      for (const auto& [ti, yi] : series) {
        double d = std::abs(ti - t0);
        if (d < best) {
          best = d;
          val = yi;
        }
      }
      out.emplace_back(t0, val);
      continue;
    }
    double det = s0 * s2 - s1 * s1;
    if (std::abs(det) < 1e-14 * std::max(1.0, s0 * s2)) {
      out.emplace_back(t0, q0 / s0);  // degenerate design, local constant fit
    } else {
      out.emplace_back(t0, (s2 * q0 - s1 * q1) / det);
    }
  }
  return out;
}

double default_bandwidth(const std::vector<double>& ts) {
  const double n = static_cast<double>(ts.size());
  double mean = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
  double var = 0.0;
  for (double t : ts) var += (t - mean) * (t - mean);
  var /= std::max(1.0, n - 1.0);
  return 1.06 * std::sqrt(var) * std::pow(n, -0.2);
}

}  // namespace igpr
