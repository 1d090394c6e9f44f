#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "igpr/bpf.hpp"
#include "igpr/dataset.hpp"

namespace igpr {

/// Fixed vectorization of manifold points / tangent matrices into flat
/// Euclidean vectors. Sphere: ambient coordinates. SPD: upper-triangular
/// entries row-major with off-diagonals scaled by sqrt(2) (isometric at the
/// identity).
struct AmbientEmbedding {
  ManifoldDescriptor desc;

  explicit AmbientEmbedding(ManifoldDescriptor d) : desc(d) {}
  int dim() const {
    return desc.kind == ManifoldKind::Sphere ? desc.ambient_dim : desc.tangent_dim();
  }
  Eigen::VectorXd embed(const ManifoldPoint& p) const;
  /// Back onto the manifold: sphere predictions are normalized (zero norm is
  /// an error); SPD predictions are symmetrized with eigenvalues clamped at 1e-8.
  ManifoldPoint project(const Eigen::VectorXd& v) const;
  Eigen::VectorXd embed_sym(const Eigen::MatrixXd& sym) const;  // SPD tangent matrices
  Eigen::MatrixXd unembed_sym(const Eigen::VectorXd& v) const;
};

struct BaselineOptions {
  int restarts = 3;
  int max_iters = 60;
  double tol = 1e-5;
  unsigned long long seed = 0;
  double noise_floor = 1e-10;
  /// When set, skip hyperparameter fitting and use these values on every
  /// coordinate (theta, amplitude, noise variance).
  std::optional<double> fixed_theta;
  std::optional<double> fixed_amplitude;
  std::optional<double> fixed_noise;
};

/// Vector-valued GP regression in ambient coordinates: independent scalar GPs
/// per embedded coordinate (centered), predictions projected back.
std::vector<ManifoldPoint> mgpr_fit_predict(const Dataset& data, const Eigen::MatrixXd& xstars,
                                            const BaselineOptions& opts = {});
ManifoldPoint mgpr_fit_predict(const Dataset& data, const Eigen::VectorXd& xstar,
                               const BaselineOptions& opts = {});

/// Ambient tangent-space GP without parallel transport ("wgpr-approx"):
/// Log residuals at their own basepoints expressed in ambient coordinates,
/// independent scalar GPs, prediction projected onto the tangent space at
/// mu(t*) and mapped back through Exp.
std::vector<ManifoldPoint> wgpr_fit_predict(const Dataset& data, const BasepointCurve& bpf,
                                            const Eigen::MatrixXd& xstars,
                                            const Eigen::VectorXd& tstars,
                                            const BaselineOptions& opts = {});
ManifoldPoint wgpr_fit_predict(const Dataset& data, const BasepointCurve& bpf,
                               const Eigen::VectorXd& xstar, double tstar,
                               const BaselineOptions& opts = {});

}  // namespace igpr
