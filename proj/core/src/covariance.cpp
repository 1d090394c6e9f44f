#include "igpr/covariance.hpp"

#include <cmath>

namespace igpr {

KernelSpec KernelSpec::rbf(double theta, double amplitude) {
  KernelSpec s;
  s.family = KernelFamily::Rbf;
  s.theta = Eigen::VectorXd::Constant(1, theta);
  s.amplitude = amplitude;
  s.validate();
  return s;
}

KernelSpec KernelSpec::diag_rbf(const Eigen::VectorXd& theta, double amplitude) {
  KernelSpec s;
  s.family = KernelFamily::DiagRbf;
  s.theta = theta;
  s.amplitude = amplitude;
  s.validate();
  return s;
}

void KernelSpec::validate() const {
  if (theta.size() == 0 || theta.minCoeff() <= 0.0)
    throw DimensionError("kernel parameters must be positive");
  if (amplitude <= 0.0) throw DimensionError("kernel amplitude must be positive");
  if (family == KernelFamily::Rbf && theta.size() != 1)
    throw DimensionError("Rbf kernel takes a single theta");
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
  if (x1.size() != x2.size()) throw DimensionError("kernel inputs have different dimensions");
  if (spec.family != KernelFamily::Rbf)
    throw DimensionError("scalar kernel_eval requires an Rbf spec");
  return spec.amplitude * std::exp(-(x1 - x2).squaredNorm() / spec.theta(0));
}

Eigen::VectorXd kernel_eval_vec(const KernelSpec& spec, const Eigen::VectorXd& x1,
                                const Eigen::VectorXd& x2) {
  if (x1.size() != x2.size()) throw DimensionError("kernel inputs have different dimensions");
  double sq = (x1 - x2).squaredNorm();
  Eigen::VectorXd out(spec.theta.size());
  for (int d = 0; d < spec.theta.size(); ++d)
    out(d) = spec.amplitude * std::exp(-sq / spec.theta(d));
  return out;
}

Coregionalization Coregionalization::identity(int d) {
  return {Eigen::MatrixXd::Identity(d, d)};
}

Coregionalization Coregionalization::from_matrix(const Eigen::MatrixXd& b) {
  if (b.rows() != b.cols()) throw DimensionError("coregionalization matrix must be square");
  if ((b - b.transpose()).norm() > 1e-8) throw DimensionError("coregionalization matrix must be symmetric");
  Eigen::MatrixXd bj = 0.5 * (b + b.transpose()) +
                       kJitter * Eigen::MatrixXd::Identity(b.rows(), b.cols());
  Eigen::LLT<Eigen::MatrixXd> llt(bj);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("coregionalization matrix is not PSD",
                            detail::min_eigenvalue(b));
  return {Eigen::MatrixXd(llt.matrixL())};
}

Eigen::MatrixXd Coregionalization::matrix() const {
  return L * L.transpose() + kJitter * Eigen::MatrixXd::Identity(L.rows(), L.rows());
}

void CovarianceModel::validate() const {
  kernel.validate();
  if (noise_var < 0.0) throw DimensionError("noise variance must be nonnegative");
  if (kernel.family == KernelFamily::DiagRbf) {
    if (kernel.theta.size() != out_dim)
      throw DimensionError("DiagRbf needs one theta per output coordinate");
  } else {
    if (!coreg || coreg->dim() != out_dim)
      throw DimensionError("Rbf model needs a DxD coregionalization matrix");
  }
}

Eigen::MatrixXd CovarianceModel::block(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) const {
  if (kernel.family == KernelFamily::DiagRbf)
    return kernel_eval_vec(kernel, x1, x2).asDiagonal();
  return kernel_eval(kernel, x1, x2) * coreg->matrix();
}

Eigen::MatrixXd assemble_train_cov(const CovarianceModel& model, const Eigen::MatrixXd& X) {
  model.validate();
  const int n = static_cast<int>(X.rows());
  const int d = model.out_dim;
  if (n < 1) throw DimensionError("need at least one training input");
  Eigen::MatrixXd k(n * d, n * d);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      Eigen::MatrixXd b = model.block(X.row(i), X.row(j));
      k.block(i * d, j * d, d, d) = b;
      if (j != i) k.block(j * d, i * d, d, d) = b.transpose();
    }
  k += model.noise_var * Eigen::MatrixXd::Identity(n * d, n * d);
  return k;
}

Eigen::MatrixXd assemble_cross_cov(const CovarianceModel& model, const Eigen::MatrixXd& X,
                                   const Eigen::VectorXd& xstar) {
  model.validate();
  const int n = static_cast<int>(X.rows());
  const int d = model.out_dim;
  Eigen::MatrixXd k(n * d, d);
  for (int i = 0; i < n; ++i) k.block(i * d, 0, d, d) = model.block(X.row(i), xstar);
  return k;
}

Eigen::MatrixXd assemble_test_cov(const CovarianceModel& model, const Eigen::VectorXd& xstar) {
  model.validate();
  return model.block(xstar, xstar);
}

Eigen::MatrixXd transport_covariance(const Eigen::MatrixXd& sigma, const ManifoldPoint& p,
                                     const ManifoldPoint& q) {
  if (sigma.rows() != sigma.cols() || sigma.rows() != p.descriptor().tangent_dim())
    throw DimensionError("covariance must be tangent_dim x tangent_dim");
  if ((sigma - sigma.transpose()).norm() > 1e-8)
    throw DimensionError("covariance must be symmetric");
  double mineig = detail::min_eigenvalue(sigma);
  if (mineig < -1e-8) throw ConditioningError("covariance is not PSD", mineig);
  if (!(p.descriptor() == q.descriptor()))
    throw DimensionError("covariance transport across different manifolds");
  // In transported frames the isometry makes the operator the identity on
  // coordinates. Representation in a rotated frame is conjugation by the
  // frame-change matrix (see frame_change).
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace igpr
