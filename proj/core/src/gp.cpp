#include "igpr/gp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include "opt_detail.hpp"

namespace igpr {

namespace {

bool is_identity(const Eigen::MatrixXd& o) {
  return (o - Eigen::MatrixXd::Identity(o.rows(), o.cols())).cwiseAbs().maxCoeff() < 1e-14;
}

// (I_n (x) O^T) K (I_n (x) O) on stacked sample-major/coordinate-fastest blocks
Eigen::MatrixXd conj_blocks(const Eigen::MatrixXd& k, const Eigen::MatrixXd& o, int d) {
  if (is_identity(o)) return k;
  const int nblk_r = static_cast<int>(k.rows()) / d;
  const int nblk_c = static_cast<int>(k.cols()) / d;
  Eigen::MatrixXd out(k.rows(), k.cols());
  for (int i = 0; i < nblk_r; ++i)
    for (int j = 0; j < nblk_c; ++j)
      out.block(i * d, j * d, d, d) = o.transpose() * k.block(i * d, j * d, d, d) * o;
  return out;
}

double dense_lml(const Eigen::VectorXd& r, const Eigen::MatrixXd& k) {
  return opt::gaussian_lml(r, k);
}

// DiagRbf evidence decomposes into D independent scalar GPs of size n.
double diag_lml(const Eigen::VectorXd& r, const Eigen::MatrixXd& x, const CovarianceModel& cov) {
  const int n = static_cast<int>(x.rows());
  const int d = cov.out_dim;
  double total = 0.0;
  Eigen::MatrixXd sq(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sq(i, j) = (x.row(i) - x.row(j)).squaredNorm();
  for (int c = 0; c < d; ++c) {
    Eigen::MatrixXd k = cov.kernel.amplitude * (-sq / cov.kernel.theta(c)).array().exp().matrix();
    k += cov.noise_var * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rc(n);
    for (int i = 0; i < n; ++i) rc(i) = r(i * d + c);
    total += dense_lml(rc, k);
  }
  return total;
}

struct ParamPack {
  KernelFamily family;
  int d;  // output dimension

  int size() const {
    return family == KernelFamily::DiagRbf ? d + 1 : 1 + d * (d + 1) / 2 + 1;
  }

  Eigen::VectorXd pack(const Hyperparams& h) const {
    Eigen::VectorXd x(size());
    if (family == KernelFamily::DiagRbf) {
      for (int i = 0; i < d; ++i) x(i) = std::log(h.theta(i));
      x(d) = std::log(std::max(h.noise_var, 1e-12));
    } else {
      x(0) = std::log(h.theta(0));
      Eigen::LLT<Eigen::MatrixXd> llt(*h.B + 1e-12 * Eigen::MatrixXd::Identity(d, d));
      Eigen::MatrixXd l = llt.matrixL();
      int k = 1;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) x(k++) = l(i, j);
        x(k++) = std::log(std::max(l(i, i), 1e-8));
      }
      x(size() - 1) = std::log(std::max(h.noise_var, 1e-12));
    }
    return x;
  }

  Hyperparams unpack(const Eigen::VectorXd& x) const {
    Hyperparams h;
    if (family == KernelFamily::DiagRbf) {
      h.theta.resize(d);
      for (int i = 0; i < d; ++i) h.theta(i) = std::exp(std::clamp(x(i), -14.0, 14.0));
      h.noise_var = std::exp(std::clamp(x(d), -28.0, 6.0));
    } else {
      h.theta = Eigen::VectorXd::Constant(1, std::exp(std::clamp(x(0), -14.0, 14.0)));
      Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
      int k = 1;
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < i; ++j) l(i, j) = x(k++);
        l(i, i) = std::exp(std::clamp(x(k++), -14.0, 14.0));
      }
      h.B = l * l.transpose();
      h.noise_var = std::exp(std::clamp(x(x.size() - 1), -28.0, 6.0));
    }
    return h;
  }
};

CovarianceModel make_cov(KernelFamily family, const Hyperparams& h, int d) {
  CovarianceModel cov;
  cov.out_dim = d;
  cov.noise_var = h.noise_var;
  if (family == KernelFamily::DiagRbf) {
    cov.kernel = KernelSpec::diag_rbf(h.theta);
  } else {
    cov.kernel = KernelSpec::rbf(h.theta(0));
    cov.coreg = Coregionalization::from_matrix(*h.B);
  }
  return cov;
}

Frame transport_frame_along(const BasepointCurve& bpf, const Frame& f, double t_from, double t_to,
                            SpdTransport mode) {
  if (t_from == t_to) return f;
  std::vector<Eigen::MatrixXd> basis;
  basis.reserve(f.size());
  for (int k = 0; k < f.size(); ++k)
    basis.push_back(bpf.transport_along(t_from, t_to, f.basis_vector(k), mode).value());
  return Frame(bpf.eval(t_to), std::move(basis));
}

}  // namespace

Eigen::VectorXd compute_residuals(const Dataset& data, const BasepointCurve& bpf, double t_star,
                                  const Frame& frame, SpdTransport mode) {
  data.validate();
  const int d = data.descriptor().tangent_dim();
  Eigen::VectorXd r(data.size() * d);
  for (int i = 0; i < data.size(); ++i) {
    try {
      ManifoldPoint mi = bpf.eval(data.t(i));
      TangentVector li = log_map(mi, data.Y[i]);
      TangentVector at_anchor = bpf.transport_along(data.t(i), t_star, li, mode);
      r.segment(i * d, d) = coords(at_anchor, frame);
    } catch (const Error& e) {
      throw SingularityError("residual computation failed at sample " + std::to_string(i) + ": " +
                             e.what());
    }
  }
  return r;
}

double log_marginal_likelihood(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& X,
                               const CovarianceModel& cov) {
  cov.validate();
  if (residuals.size() != X.rows() * cov.out_dim)
    throw DimensionError("residual vector length does not match n*D");
  if (cov.kernel.family == KernelFamily::DiagRbf) return diag_lml(residuals, X, cov);
  double v = dense_lml(residuals, assemble_train_cov(cov, X));
  if (!std::isfinite(v)) {
    throw ConditioningError("training covariance is numerically singular",
                            detail::min_eigenvalue(assemble_train_cov(cov, X)));
  }
  return v;
}

double log_marginal_likelihood(const Dataset& data, const BasepointCurve& bpf,
                               const CovarianceModel& cov, double t_star, const Frame& frame) {
  return log_marginal_likelihood(compute_residuals(data, bpf, t_star, frame), data.X, cov);
}

Hyperparams default_init(const Dataset& data, const BasepointCurve& bpf, double t_star,
                         const Frame& frame, KernelFamily family, SpdTransport mode) {
  const int n = data.size();
  const int d = data.descriptor().tangent_dim();
  Eigen::VectorXd r = compute_residuals(data, bpf, t_star, frame, mode);

  std::vector<double> sq;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) sq.push_back((data.X.row(i) - data.X.row(j)).squaredNorm());
  double theta0 = 1.0;
  if (!sq.empty()) {
    std::nth_element(sq.begin(), sq.begin() + sq.size() / 2, sq.end());
    theta0 = std::max(sq[sq.size() / 2], 1e-4);
  }

  Eigen::MatrixXd b0 = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) mean += r.segment(i * d, d) / n;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd c = r.segment(i * d, d) - mean;
    b0 += c * c.transpose() / std::max(1, n - 1);
  }
  b0 += 1e-6 * Eigen::MatrixXd::Identity(d, d);

  Hyperparams h;
  if (family == KernelFamily::DiagRbf) {
    h.theta = Eigen::VectorXd::Constant(d, theta0);
  } else {
    h.theta = Eigen::VectorXd::Constant(1, theta0);
    h.B = b0;
  }
  h.noise_var = std::max(0.1 * b0.trace() / d, 1e-8);
  return h;
}

FittedModel fit(const Dataset& data, const BasepointCurve& bpf, double t_star, const Frame& frame,
                KernelFamily family, const Hyperparams& init, const FitOptions& opts) {
  data.validate();
  const int n = data.size();
  const int d = data.descriptor().tangent_dim();
  Eigen::VectorXd r = compute_residuals(data, bpf, t_star, frame, opts.transport);

  ParamPack pp{family, d};
  auto obj = [&](const Eigen::VectorXd& x) -> double {
    Hyperparams h = pp.unpack(x);
    h.noise_var = std::max(h.noise_var, opts.noise_floor);
    CovarianceModel cov = make_cov(family, h, d);
    if (cov.kernel.family == KernelFamily::DiagRbf) return diag_lml(r, data.X, cov);
    return dense_lml(r, assemble_train_cov(cov, data.X));
  };

  Eigen::VectorXd x0 = pp.pack(init);
  if (!std::isfinite(obj(x0)))
    throw ConvergenceError("log marginal likelihood is not finite at the initial hyperparameters");

  opt::AscentState best;
  if (n < 2) {
    best.x = x0;
    best.f = obj(x0);
  } else {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> perturb(0.0, 0.7);
    bool any = false;
    for (int restart = 0; restart < std::max(1, opts.restarts); ++restart) {
      Eigen::VectorXd start = x0;
      if (restart > 0)
        for (int k = 0; k < start.size(); ++k) start(k) += perturb(rng);
      if (!std::isfinite(obj(start))) continue;
      opt::AscentState res = opt::ascend(obj, start, opts.max_iters, opts.tol);
      if (!any || res.f > best.f) {
        best = std::move(res);
        any = true;
      }
    }
    if (!any) throw ConvergenceError("all optimizer restarts failed");
  }

  Hyperparams h = pp.unpack(best.x);
  h.noise_var = std::max(h.noise_var, opts.noise_floor);

  OptimizerTrace trace;
  trace.objective = best.objective;
  trace.hit_max_iters = best.hit_max_iters;
  trace.exit_grad_norm = best.exit_grad_norm;

  FittedModel m{data,
                bpf,
                t_star,
                frame,
                Eigen::MatrixXd::Identity(d, d),
                make_cov(family, h, d),
                r,
                {},
                {},
                opts.transport,
                opts,
                trace};

  Eigen::MatrixXd k = assemble_train_cov(m.cov, data.X);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    m.trace.conditioning_warning = true;
    k += 1e-10 * Eigen::MatrixXd::Identity(k.rows(), k.cols());
    llt.compute(k);
    if (llt.info() != Eigen::Success)
      throw ConditioningError("training covariance is not PD even with jitter",
                              detail::min_eigenvalue(k));
  }
  m.chol_L = llt.matrixL();
  m.alpha = llt.solve(r);
  return m;
}

PosteriorPrediction predict(const FittedModel& model, const Eigen::VectorXd& xstar, double t_pred) {
  if (xstar.size() != model.data.X.cols()) throw DimensionError("test input dimension mismatch");
  const int d = model.cov.out_dim;
  Eigen::MatrixXd kc =
      conj_blocks(assemble_cross_cov(model.cov, model.data.X, xstar), model.frame_rot, d);
  Eigen::MatrixXd kt = conj_blocks(assemble_test_cov(model.cov, xstar), model.frame_rot, d);

  Eigen::VectorXd beta = kc.transpose() * model.alpha;
  Eigen::MatrixXd v = model.chol_L.triangularView<Eigen::Lower>().solve(kc);
  Eigen::MatrixXd sigma = kt - v.transpose() * v;
  if (model.opts.include_noise)
    sigma += model.cov.noise_var * Eigen::MatrixXd::Identity(d, d);
  sigma = 0.5 * (sigma + sigma.transpose());

  TangentVector at_anchor = from_coords(beta, model.frame);
  TangentVector at_pred = (t_pred == model.anchor_t)
                              ? at_anchor
                              : model.bpf.transport_along(model.anchor_t, t_pred, at_anchor,
                                                          model.transport);
  ManifoldPoint map_point = exp_map(model.bpf.eval(t_pred), at_pred);
  return {beta, sigma, at_pred, map_point};
}

PosteriorPrediction predict(const FittedModel& model, const Eigen::VectorXd& xstar) {
  return predict(model, xstar, model.anchor_t);
}

FittedModel rebase_anchor(const FittedModel& model, double t_new) {
  if (t_new == model.anchor_t) return model;
  FittedModel m = model;
  m.anchor_t = t_new;
  m.frame = transport_frame_along(model.bpf, model.frame, model.anchor_t, t_new, model.transport);
  m.residuals = compute_residuals(model.data, model.bpf, t_new, m.frame, model.transport);
  m.alpha = m.chol_L.triangularView<Eigen::Lower>().transpose().solve(
      Eigen::VectorXd(m.chol_L.triangularView<Eigen::Lower>().solve(m.residuals)));
  return m;
}

FittedModel rotate_frame(const FittedModel& model, const Eigen::MatrixXd& o) {
  const int d = model.cov.out_dim;
  if (o.rows() != d || o.cols() != d) throw DimensionError("rotation must be DxD");
  if ((o.transpose() * o - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
    throw DimensionError("frame change must be orthogonal");
  model.frame.require_orthonormal();

  std::vector<Eigen::MatrixXd> basis;
  Eigen::MatrixXd zero =
      Eigen::MatrixXd::Zero(model.frame.base().value().rows(), model.frame.base().value().cols());
  for (int j = 0; j < d; ++j) {
    Eigen::MatrixXd w = zero;
    for (int k = 0; k < d; ++k) w += o(k, j) * model.frame.basis()[k];
    basis.push_back(w);
  }
  FittedModel m = model;
  m.frame = Frame(model.frame.base(), std::move(basis));
  m.frame_rot = model.frame_rot * o;
  for (int i = 0; i < model.data.size(); ++i)
    m.residuals.segment(i * d, d) = o.transpose() * model.residuals.segment(i * d, d);

  Eigen::MatrixXd k =
      conj_blocks(assemble_train_cov(m.cov, m.data.X), m.frame_rot, d);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("rotated covariance lost positive definiteness",
                            detail::min_eigenvalue(k));
  m.chol_L = llt.matrixL();
  m.alpha = llt.solve(m.residuals);
  return m;
}

std::vector<ManifoldPoint> sample_prior(const BasepointCurve& bpf, const CovarianceModel& cov,
                                        const Eigen::VectorXd& t_grid, double anchor_t,
                                        const Frame& frame, unsigned long long seed,
                                        SpdTransport mode) {
  cov.validate();
  const int m = static_cast<int>(t_grid.size());
  const int d = cov.out_dim;
  Eigen::MatrixXd x = t_grid;
  CovarianceModel noiseless = cov;
  noiseless.noise_var = 0.0;
  Eigen::MatrixXd k = assemble_train_cov(noiseless, x) +
                      1e-10 * Eigen::MatrixXd::Identity(m * d, m * d);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("prior covariance is not PD", detail::min_eigenvalue(k));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(m * d);
  for (int i = 0; i < m * d; ++i) z(i) = normal(rng);
  Eigen::VectorXd v = Eigen::MatrixXd(llt.matrixL()) * z;

  std::vector<ManifoldPoint> out;
  out.reserve(m);
  for (int j = 0; j < m; ++j) {
    Frame fj = transport_frame_along(bpf, frame, anchor_t, t_grid(j), mode);
    out.push_back(exp_map(bpf.eval(t_grid(j)), from_coords(v.segment(j * d, d), fj)));
  }
  return out;
}

}  // namespace igpr
