#include "igpr/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace igpr {

namespace {

void check_same_manifold(const ManifoldDescriptor& a, const ManifoldDescriptor& b) {
  if (!(a == b)) throw DimensionError("operands live on different manifolds");
}

constexpr double kAntipodalTol = 1e-10;

}  // namespace

namespace detail {

Eigen::MatrixXd sym_apply(const Eigen::MatrixXd& a, double (*f)(double), bool require_pd) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  Eigen::VectorXd lam = eig.eigenvalues();
  if (require_pd && lam.minCoeff() <= 1e-12) {
    throw InvalidPointError("matrix is not positive definite (min eigenvalue " +
                            std::to_string(lam.minCoeff()) + ")");
  }
  Eigen::VectorXd flam(lam.size());
  for (int i = 0; i < lam.size(); ++i) flam(i) = f(lam(i));
  Eigen::MatrixXd r = eig.eigenvectors() * flam.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (r + r.transpose());
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& a) {
  return sym_apply(a, [](double x) { return std::sqrt(x); }, true);
}
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& a) {
  return sym_apply(a, [](double x) { return 1.0 / std::sqrt(x); }, true);
}
Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& a) {
  return sym_apply(a, [](double x) { return std::exp(x); }, false);
}
Eigen::MatrixXd sym_log(const Eigen::MatrixXd& a) {
  return sym_apply(a, [](double x) { return std::log(x); }, true);
}
double min_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

}  // namespace detail

ManifoldDescriptor ManifoldDescriptor::sphere(int manifold_dim) {
  if (manifold_dim < 1) throw DimensionError("sphere dimension must be positive");
  return {ManifoldKind::Sphere, manifold_dim + 1};
}

ManifoldDescriptor ManifoldDescriptor::spd(int side) {
  if (side < 1) throw DimensionError("SPD matrix side must be positive");
  return {ManifoldKind::Spd, side};
}

ManifoldPoint::ManifoldPoint(ManifoldDescriptor desc, Eigen::MatrixXd value)
    : desc_(desc), value_(std::move(value)) {
  if (desc_.kind == ManifoldKind::Sphere) {
    if (value_.rows() != desc_.ambient_dim || value_.cols() != 1)
      throw DimensionError("sphere point must be an ambient column vector");
    double n = value_.norm();
    if (std::abs(n - 1.0) > 1e-8)
      throw InvalidPointError("sphere point is not a unit vector (norm " + std::to_string(n) + ")");
    value_ /= n;
  } else {
    if (value_.rows() != desc_.ambient_dim || value_.cols() != desc_.ambient_dim)
      throw DimensionError("SPD point has wrong shape");
    double asym = (value_ - value_.transpose()).norm();
    if (asym > 1e-8) throw InvalidPointError("SPD point is not symmetric");
    value_ = 0.5 * (value_ + value_.transpose());
    double mineig = detail::min_eigenvalue(value_);
    if (mineig <= 0.0)
      throw InvalidPointError("SPD point is not positive definite (min eigenvalue " +
                              std::to_string(mineig) + ")");
  }
}

ManifoldPoint ManifoldPoint::sphere(const Eigen::VectorXd& v) {
  return ManifoldPoint(ManifoldDescriptor::sphere(static_cast<int>(v.size()) - 1), v);
}

ManifoldPoint ManifoldPoint::spd(const Eigen::MatrixXd& m) {
  return ManifoldPoint(ManifoldDescriptor::spd(static_cast<int>(m.rows())), m);
}

TangentVector::TangentVector(ManifoldPoint base, Eigen::MatrixXd value)
    : base_(std::move(base)), value_(std::move(value)) {
  const auto& d = base_.descriptor();
  if (value_.rows() != base_.value().rows() || value_.cols() != base_.value().cols())
    throw DimensionError("tangent vector shape does not match basepoint");
  if (d.kind == ManifoldKind::Sphere) {
    double dot = (value_.col(0).dot(base_.vec()));
    if (std::abs(dot) > 1e-8 * std::max(1.0, value_.norm()))
      throw InvalidPointError("vector is not tangent to the sphere at its basepoint");
    value_.col(0) -= dot * base_.vec();
  } else {
    double asym = (value_ - value_.transpose()).norm();
    if (asym > 1e-8 * std::max(1.0, value_.norm()))
      throw InvalidPointError("SPD tangent vector is not symmetric");
    value_ = 0.5 * (value_ + value_.transpose());
  }
}

TangentVector TangentVector::zero(const ManifoldPoint& base) {
  return TangentVector(base, Eigen::MatrixXd::Zero(base.value().rows(), base.value().cols()));
}

TangentVector TangentVector::operator+(const TangentVector& o) const {
  check_same_manifold(base_.descriptor(), o.base_.descriptor());
  return TangentVector(base_, value_ + o.value_);
}
TangentVector TangentVector::operator-(const TangentVector& o) const {
  check_same_manifold(base_.descriptor(), o.base_.descriptor());
  return TangentVector(base_, value_ - o.value_);
}
TangentVector TangentVector::operator*(double s) const { return TangentVector(base_, value_ * s); }

double inner(const TangentVector& u, const TangentVector& v) {
  const auto& d = u.base().descriptor();
  check_same_manifold(d, v.base().descriptor());
  if (d.kind == ManifoldKind::Sphere) return u.vec().dot(v.vec());
  // affine-invariant: tr(P^{-1} U P^{-1} V)
  Eigen::LLT<Eigen::MatrixXd> llt(u.base().value());
  Eigen::MatrixXd pu = llt.solve(u.value());
  Eigen::MatrixXd pv = llt.solve(v.value());
  return (pu * pv).trace();
}

double norm(const TangentVector& v) { return std::sqrt(std::max(0.0, inner(v, v))); }

ManifoldPoint exp_map(const ManifoldPoint& p, const TangentVector& v) {
  check_same_manifold(p.descriptor(), v.base().descriptor());
  if (p.descriptor().kind == ManifoldKind::Sphere) {
    double theta = v.value().norm();
    if (theta < 1e-14) return p;
    Eigen::VectorXd r = std::cos(theta) * p.vec() + std::sin(theta) / theta * v.vec();
    return ManifoldPoint(p.descriptor(), r / r.norm());
  }
  Eigen::MatrixXd ph = detail::sym_sqrt(p.value());
  Eigen::MatrixXd pih = detail::sym_inv_sqrt(p.value());
  Eigen::MatrixXd r = ph * detail::sym_exp(pih * v.value() * pih) * ph;
  return ManifoldPoint(p.descriptor(), 0.5 * (r + r.transpose()));
}

TangentVector log_map(const ManifoldPoint& p, const ManifoldPoint& q) {
  check_same_manifold(p.descriptor(), q.descriptor());
  if (p.descriptor().kind == ManifoldKind::Sphere) {
    double c = std::clamp(p.vec().dot(q.vec()), -1.0, 1.0);
    if (c <= -1.0 + kAntipodalTol)
      throw SingularityError("Log undefined for antipodal sphere points");
    double theta = std::acos(c);
    if (theta < 1e-14) return TangentVector::zero(p);
    Eigen::VectorXd w = q.vec() - c * p.vec();
    double wn = w.norm();
    if (wn < 1e-300) return TangentVector::zero(p);
    return TangentVector(p, Eigen::MatrixXd(theta / wn * w));
  }
  Eigen::MatrixXd ph = detail::sym_sqrt(p.value());
  Eigen::MatrixXd pih = detail::sym_inv_sqrt(p.value());
  Eigen::MatrixXd r = ph * detail::sym_log(pih * q.value() * pih) * ph;
  return TangentVector(p, 0.5 * (r + r.transpose()));
}

double distance(const ManifoldPoint& p, const ManifoldPoint& q) {
  check_same_manifold(p.descriptor(), q.descriptor());
  if (p.descriptor().kind == ManifoldKind::Sphere) {
    return std::acos(std::clamp(p.vec().dot(q.vec()), -1.0, 1.0));
  }
  Eigen::MatrixXd pih = detail::sym_inv_sqrt(p.value());
  return detail::sym_log(pih * q.value() * pih).norm();
}

TangentVector parallel_transport(const TangentVector& v, const ManifoldPoint& q,
                                 SpdTransport mode) {
  const ManifoldPoint& p = v.base();
  check_same_manifold(p.descriptor(), q.descriptor());
  if (p.descriptor().kind == ManifoldKind::Sphere) {
    double c = p.vec().dot(q.vec());
    if (c <= -1.0 + kAntipodalTol)
      throw SingularityError("transport undefined for antipodal sphere points");
    // transport along the minimizing geodesic:
    // w - <w,q>/(1+<p,q>) (p+q), then re-projected to T_q.
    Eigen::VectorXd w = v.vec();
    Eigen::VectorXd r = w - (w.dot(q.vec()) / (1.0 + c)) * (p.vec() + q.vec());
    r -= r.dot(q.vec()) * q.vec();
    return TangentVector(q, Eigen::MatrixXd(r));
  }
  Eigen::MatrixXd r;
  if (mode == SpdTransport::Paper) {
    r = detail::sym_sqrt(q.value()) * detail::sym_inv_sqrt(p.value());
  } else {
    // principal square root of Q P^{-1} via a similarity transform
    Eigen::MatrixXd ph = detail::sym_sqrt(p.value());
    Eigen::MatrixXd pih = detail::sym_inv_sqrt(p.value());
    r = ph * detail::sym_sqrt(pih * q.value() * pih) * pih;
  }
  Eigen::MatrixXd out = r * v.value() * r.transpose();
  return TangentVector(q, 0.5 * (out + out.transpose()));
}

Frame::Frame(ManifoldPoint base, std::vector<Eigen::MatrixXd> basis)
    : base_(std::move(base)), basis_(std::move(basis)) {
  int td = base_.descriptor().tangent_dim();
  if (static_cast<int>(basis_.size()) != td)
    throw DimensionError("frame must have tangent_dim basis vectors");
  gram_.resize(td, td);
  std::vector<TangentVector> tv;
  tv.reserve(basis_.size());
  for (const auto& b : basis_) tv.emplace_back(base_, b);
  for (int i = 0; i < td; ++i) {
    basis_[i] = tv[i].value();  // canonicalized by TangentVector
    for (int j = i; j < td; ++j) gram_(i, j) = gram_(j, i) = inner(tv[i], tv[j]);
  }
}

bool Frame::orthonormal(double tol) const {
  return (gram_ - Eigen::MatrixXd::Identity(size(), size())).cwiseAbs().maxCoeff() <= tol;
}

void Frame::require_orthonormal(double tol) const {
  if (!orthonormal(tol)) throw InvalidPointError("frame is not orthonormal");
}

Frame spd_identity_frame(int d) {
  ManifoldPoint id = ManifoldPoint::spd(Eigen::MatrixXd::Identity(d, d));
  std::vector<Eigen::MatrixXd> basis;
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
    e(i, i) = 1.0;
    basis.push_back(e);
  }
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
      e(i, j) = e(j, i) = s;
      basis.push_back(e);
    }
  return Frame(id, std::move(basis));
}

Frame spd_paper_s1_frame() {
  ManifoldPoint id = ManifoldPoint::spd(Eigen::MatrixXd::Identity(2, 2));
  std::vector<Eigen::MatrixXd> basis(3, Eigen::MatrixXd::Zero(2, 2));
  basis[0](0, 0) = 1.0;
  basis[1](0, 1) = basis[1](1, 0) = 1.0;
  basis[2](1, 1) = 1.0;
  return Frame(id, std::move(basis));
}

Frame default_frame(const ManifoldPoint& p, SpdTransport mode) {
  if (p.descriptor().kind == ManifoldKind::Sphere) {
    int n = p.descriptor().ambient_dim;
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
    e1(0) = 1.0;
    // Householder reflection sending e1 to p; its remaining columns span T_p.
    Eigen::VectorXd u = e1 - p.vec();
    std::vector<Eigen::MatrixXd> basis;
    if (u.norm() < 1e-12) {
      for (int k = 1; k < n; ++k) {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        b(k) = 1.0;
        basis.emplace_back(b);
      }
    } else {
      u.normalize();
      Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n) - 2.0 * u * u.transpose();
      for (int k = 1; k < n; ++k) basis.emplace_back(h.col(k));
    }
    return Frame(p, std::move(basis));
  }
  return transport_frame(spd_identity_frame(p.descriptor().ambient_dim), p, mode);
}

Frame transport_frame(const Frame& f, const ManifoldPoint& q, SpdTransport mode) {
  std::vector<Eigen::MatrixXd> basis;
  basis.reserve(f.size());
  for (int k = 0; k < f.size(); ++k)
    basis.push_back(parallel_transport(f.basis_vector(k), q, mode).value());
  return Frame(q, std::move(basis));
}

Eigen::VectorXd coords(const TangentVector& v, const Frame& f) {
  if (!(v.base().descriptor() == f.base().descriptor()) ||
      (v.base().value() - f.base().value()).norm() > 1e-8)
    throw DimensionError("frame basepoint does not match tangent vector basepoint");
  Eigen::VectorXd g(f.size());
  for (int k = 0; k < f.size(); ++k) g(k) = inner(v, f.basis_vector(k));
  if (f.orthonormal()) return g;
  return f.gram().ldlt().solve(g);
}

TangentVector from_coords(const Eigen::VectorXd& c, const Frame& f) {
  if (c.size() != f.size()) throw DimensionError("coordinate length does not match frame size");
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(f.base().value().rows(), f.base().value().cols());
  for (int k = 0; k < f.size(); ++k) v += c(k) * f.basis()[k];
  return TangentVector(f.base(), v);
}

Eigen::MatrixXd frame_change(const Frame& e, const Frame& w) {
  e.require_orthonormal();
  w.require_orthonormal();
  if ((e.base().value() - w.base().value()).norm() > 1e-8)
    throw DimensionError("frames are based at different points");
  Eigen::MatrixXd o(e.size(), w.size());
  for (int k = 0; k < e.size(); ++k)
    for (int j = 0; j < w.size(); ++j) o(k, j) = inner(e.basis_vector(k), w.basis_vector(j));
  return o;
}

ManifoldPoint intrinsic_mean(const std::vector<ManifoldPoint>& points, const MeanOptions& opts) {
  if (points.empty()) throw DimensionError("intrinsic_mean of empty list");
  if (points.size() == 1) return points.front();
  const auto& d = points.front().descriptor();
  ManifoldPoint m = [&] {
    if (d.kind == ManifoldKind::Sphere) {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(d.ambient_dim);
      for (const auto& p : points) s += p.vec();
      if (s.norm() < 1e-10) return points.front();
      return ManifoldPoint(d, Eigen::MatrixXd(s / s.norm()));
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d.ambient_dim, d.ambient_dim);
    for (const auto& p : points) s += p.value();
    return ManifoldPoint(d, s / static_cast<double>(points.size()));
  }();
  for (int it = 0; it < opts.max_iters; ++it) {
    TangentVector g = TangentVector::zero(m);
    for (const auto& p : points) g = g + log_map(m, p);
    g = g * (1.0 / static_cast<double>(points.size()));
    if (norm(g) <= opts.tol) return m;
    m = exp_map(m, g);
  }
  // final check against the contract tolerance
  TangentVector g = TangentVector::zero(m);
  for (const auto& p : points) g = g + log_map(m, p);
  g = g * (1.0 / static_cast<double>(points.size()));
  if (norm(g) <= 1e-8) return m;
  throw ConvergenceError("intrinsic mean did not converge");
}

}  // namespace igpr
