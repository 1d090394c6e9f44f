#pragma once

#include <Eigen/Dense>
#include <optional>

#include "igpr/manifold.hpp"

namespace igpr {

enum class KernelFamily { Rbf, DiagRbf };

/// Scalar kernel k(x,x~) = amplitude * exp(-|x-x~|^2 / theta). DiagRbf keeps
/// one theta per output coordinate and couples outputs diagonally (B == I).
struct KernelSpec {
  KernelFamily family{KernelFamily::Rbf};
  Eigen::VectorXd theta;  // Rbf: single entry; DiagRbf: one per output coordinate
  double amplitude{1.0};

  static KernelSpec rbf(double theta, double amplitude = 1.0);
  static KernelSpec diag_rbf(const Eigen::VectorXd& theta, double amplitude = 1.0);
  void validate() const;
};

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2);
/// Per-coordinate values for DiagRbf (a D-vector); for Rbf returns a 1-vector.
Eigen::VectorXd kernel_eval_vec(const KernelSpec& spec, const Eigen::VectorXd& x1,
                                const Eigen::VectorXd& x2);

/// Coregionalization matrix B = L L^T + jitter I, stored via its Cholesky factor.
struct Coregionalization {
  Eigen::MatrixXd L;
  static constexpr double kJitter = 1e-10;

  static Coregionalization identity(int d);
  static Coregionalization from_matrix(const Eigen::MatrixXd& b);
  Eigen::MatrixXd matrix() const;
  int dim() const { return static_cast<int>(L.rows()); }
};

/// Full covariance description: scalar kernel, output coupling and noise.
/// out_dim is the tangent dimension D of the manifold.
struct CovarianceModel {
  KernelSpec kernel;
  std::optional<Coregionalization> coreg;  // absent for DiagRbf (B == I)
  double noise_var{0.0};
  int out_dim{1};

  void validate() const;
  /// Output coupling matrix for the coordinate d1,d2 pair at scalar kernel
  /// value(s) k: Rbf -> k * B; DiagRbf -> diag(k_d).
  Eigen::MatrixXd block(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const;
};

/// Stacked n*D x n*D training covariance, sample-major with coordinate index
/// fastest (block (i,j) of size DxD is k(x_i,x_j) * B), plus noise_var * I.
Eigen::MatrixXd assemble_train_cov(const CovarianceModel& model, const Eigen::MatrixXd& X);
/// n*D x D cross covariance between training inputs and a test input (no noise).
Eigen::MatrixXd assemble_cross_cov(const CovarianceModel& model, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& xstar);
/// D x D test covariance (noise-free latent block).
Eigen::MatrixXd assemble_test_cov(const CovarianceModel& model, const Eigen::VectorXd& xstar);

/// Coordinate representation of a tangent-space covariance after parallel
/// transport p -> q, expressed in the transported frame. Transport is an
/// isometry, so the coordinates are unchanged; the input is validated
/// (symmetric, min eigenvalue >= -1e-8).
Eigen::MatrixXd transport_covariance(const Eigen::MatrixXd& sigma, const ManifoldPoint& p,
                                     const ManifoldPoint& q);

}  // namespace igpr
