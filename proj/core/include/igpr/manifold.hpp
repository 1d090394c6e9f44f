#pragma once

#include <Eigen/Dense>
#include <vector>

#include "igpr/error.hpp"

namespace igpr {

enum class ManifoldKind { Sphere, Spd };

/// Which parallel transport to use on the SPD manifold. Paper: Gamma(V) = R V R^T
/// with R = Q^{1/2} P^{-1/2}. LeviCivita: R = (Q P^{-1})^{1/2}. Both are isometries
/// of the affine-invariant metric; they differ for non-commuting endpoints.
enum class SpdTransport { Paper, LeviCivita };

struct ManifoldDescriptor {
  ManifoldKind kind{ManifoldKind::Sphere};
  int ambient_dim{3};  // sphere: length of the ambient unit vector (D+1); SPD: matrix side d

  static ManifoldDescriptor sphere(int manifold_dim);
  static ManifoldDescriptor spd(int side);

  int tangent_dim() const {
    return kind == ManifoldKind::Sphere ? ambient_dim - 1
                                        : ambient_dim * (ambient_dim + 1) / 2;
  }
  bool operator==(const ManifoldDescriptor&) const = default;
};

/// A point on a registered manifold. Sphere points are unit column vectors
/// stored as (D+1)x1 matrices; SPD points are dxd symmetric positive definite
/// matrices. Construction validates and canonicalizes (renormalize / symmetrize).
class ManifoldPoint {
 public:
  ManifoldPoint(ManifoldDescriptor desc, Eigen::MatrixXd value);

  static ManifoldPoint sphere(const Eigen::VectorXd& v);
  static ManifoldPoint spd(const Eigen::MatrixXd& m);

  const ManifoldDescriptor& descriptor() const { return desc_; }
  const Eigen::MatrixXd& value() const { return value_; }
  /// Ambient vector view (sphere only).
  Eigen::VectorXd vec() const { return value_.col(0); }

 private:
  ManifoldDescriptor desc_;
  Eigen::MatrixXd value_;
};

/// A vector attached to the tangent space at a basepoint. Sphere: ambient
/// vector orthogonal to the basepoint. SPD: symmetric matrix.
class TangentVector {
 public:
  TangentVector(ManifoldPoint base, Eigen::MatrixXd value);

  static TangentVector zero(const ManifoldPoint& base);

  const ManifoldPoint& base() const { return base_; }
  const Eigen::MatrixXd& value() const { return value_; }
  Eigen::VectorXd vec() const { return value_.col(0); }

  TangentVector operator+(const TangentVector& o) const;
  TangentVector operator-(const TangentVector& o) const;
  TangentVector operator*(double s) const;

 private:
  ManifoldPoint base_;
  Eigen::MatrixXd value_;
};

/// Riemannian inner product at the common basepoint of u and v.
/// Sphere: Euclidean dot product. SPD: tr(P^{-1} U P^{-1} V).
double inner(const TangentVector& u, const TangentVector& v);
double norm(const TangentVector& v);

ManifoldPoint exp_map(const ManifoldPoint& p, const TangentVector& v);
TangentVector log_map(const ManifoldPoint& p, const ManifoldPoint& q);
double distance(const ManifoldPoint& p, const ManifoldPoint& q);

/// Parallel transport of v from v.base() to q along the minimizing geodesic.
TangentVector parallel_transport(const TangentVector& v, const ManifoldPoint& q,
                                 SpdTransport mode = SpdTransport::Paper);

/// An ordered basis of a tangent space. Orthonormal in the default use; the
/// non-orthonormal S1 simulation basis is also representable, in which case
/// coords() uses the dual-basis (Gram-inverse) representation.
class Frame {
 public:
  Frame(ManifoldPoint base, std::vector<Eigen::MatrixXd> basis);

  const ManifoldPoint& base() const { return base_; }
  int size() const { return static_cast<int>(basis_.size()); }
  TangentVector basis_vector(int k) const { return TangentVector(base_, basis_[k]); }
  const std::vector<Eigen::MatrixXd>& basis() const { return basis_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  bool orthonormal(double tol = 1e-8) const;
  void require_orthonormal(double tol = 1e-8) const;

 private:
  ManifoldPoint base_;
  std::vector<Eigen::MatrixXd> basis_;
  Eigen::MatrixXd gram_;
};

/// Deterministic orthonormal frame. Sphere: Householder completion of the
/// basepoint. SPD: the identity-tangent frame {E_ii} u {(E_ij+E_ji)/sqrt(2), i<j}
/// (row-major) transported from I to p.
Frame default_frame(const ManifoldPoint& p, SpdTransport mode = SpdTransport::Paper);

/// Orthonormal frame at the SPD identity, row-major diagonal-then-offdiagonal order.
Frame spd_identity_frame(int d);

/// The 2x2 S1 simulation basis {(1,0;0,0),(0,1;1,0),(0,0;0,1)} at the identity.
/// Not orthonormal; coordinates use the dual basis.
Frame spd_paper_s1_frame();

Frame transport_frame(const Frame& f, const ManifoldPoint& q,
                      SpdTransport mode = SpdTransport::Paper);

/// Coordinate representation of v in the frame: for orthonormal frames the
/// vector of inner products <v, E_k>; generally the dual-basis coordinates
/// G^{-1} <v, E_k>, so that from_coords(coords(v)) == v.
Eigen::VectorXd coords(const TangentVector& v, const Frame& f);
TangentVector from_coords(const Eigen::VectorXd& c, const Frame& f);

/// Change-of-basis matrix O between orthonormal frames at the same basepoint,
/// O(k,j) = <E_k, W_j>, so that coords in E = O * coords in W.
Eigen::MatrixXd frame_change(const Frame& e, const Frame& w);

struct MeanOptions {
  int max_iters = 200;
  double tol = 1e-10;
};

/// Frechet mean by iterated Log-average-Exp, step size 1.
ManifoldPoint intrinsic_mean(const std::vector<ManifoldPoint>& points,
                             const MeanOptions& opts = {});

namespace detail {
// Symmetric matrix functions via eigendecomposition; eigenvalues clamped
// at 1e-12 for PD checks.
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a);
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& a);
Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& a);
Eigen::MatrixXd sym_log(const Eigen::MatrixXd& a);
double min_eigenvalue(const Eigen::MatrixXd& a);
}  // namespace detail

}  // namespace igpr
