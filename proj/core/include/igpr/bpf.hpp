#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "igpr/dataset.hpp"
#include "igpr/manifold.hpp"

namespace igpr {

/// Basepoint function mu(t): either a parametric geodesic
/// mu(t) = Exp(p0, t v0) or geodesic interpolation through a grid of points.
class BasepointCurve {
 public:
  enum class Kind { Geodesic, PiecewiseSmoothed };

  static BasepointCurve geodesic(const ManifoldPoint& anchor, const TangentVector& velocity);
  static BasepointCurve piecewise(std::vector<double> grid_t, std::vector<ManifoldPoint> grid_p);

  Kind kind() const { return kind_; }
  ManifoldPoint eval(double t) const;
  const ManifoldPoint& anchor() const { return anchor_; }
  const TangentVector& velocity() const { return *velocity_; }
  const std::vector<double>& grid_t() const { return grid_t_; }
  const std::vector<ManifoldPoint>& grid_points() const { return grid_p_; }

  /// Transport v from mu(t_from) to mu(t_to) along the curve. For geodesic
  /// curves this is the direct point-to-point transport; piecewise curves
  /// chain transports through the intermediate grid nodes so that transports
  /// along the curve compose exactly.
  TangentVector transport_along(double t_from, double t_to, const TangentVector& v,
                                SpdTransport mode = SpdTransport::Paper) const;

 private:
  BasepointCurve(Kind kind, ManifoldPoint anchor) : kind_(kind), anchor_(std::move(anchor)) {}

  Kind kind_;
  ManifoldPoint anchor_;
  std::optional<TangentVector> velocity_;
  std::vector<double> grid_t_;
  std::vector<ManifoldPoint> grid_p_;
};

struct GeodesicFitOptions {
  int max_iters = 500;
  double tol = 1e-9;
};

struct GeodesicFitResult {
  BasepointCurve curve;
  double objective;  // sum of squared geodesic residuals at exit
  bool converged;
};

/// Least-squares geodesic regression: minimizes sum_i d^2(Exp(p0, t_i v0), y_i)
/// by first-order gradient descent with backtracking.
GeodesicFitResult fit_geodesic_regression(const Dataset& data, const GeodesicFitOptions& opts = {});

/// Gaussian-kernel local linear smoother of a scalar series.
std::vector<std::pair<double, double>> local_linear_smooth(
    const std::vector<std::pair<double, double>>& series, double bandwidth);

/// Reference-rule bandwidth 1.06 sd(t) n^{-1/5}.
double default_bandwidth(const std::vector<double>& ts);

}  // namespace igpr
