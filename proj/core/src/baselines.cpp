#include "igpr/baselines.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "opt_detail.hpp"

namespace igpr {

namespace {

// Independent scalar GP per output column: zero-mean RBF
// k = a exp(-d^2/theta) + s2 I, hyperparameters by marginal likelihood.
struct ScalarGpBank {
  Eigen::MatrixXd x;                        // n x Q
  std::vector<Eigen::VectorXd> alphas;      // per column
  std::vector<Eigen::Vector3d> params;      // (theta, amplitude, s2) per column
  Eigen::MatrixXd sq;                       // pairwise squared distances

  void fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
           const BaselineOptions& opts) {
    x = inputs;
    const int n = static_cast<int>(x.rows());
    sq.resize(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sq(i, j) = (x.row(i) - x.row(j)).squaredNorm();

    std::vector<double> d2;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) d2.push_back(sq(i, j));
    double theta0 = 1.0;
    if (!d2.empty()) {
      std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
      theta0 = std::max(d2[d2.size() / 2], 1e-4);
    }

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> perturb(0.0, 0.7);

    for (int c = 0; c < outputs.cols(); ++c) {
      Eigen::VectorXd y = outputs.col(c);
      double var0 = std::max((y.array() - y.mean()).square().mean(), 1e-8);
      Eigen::Vector3d p;
      if (opts.fixed_theta) {
        p = {*opts.fixed_theta, opts.fixed_amplitude.value_or(1.0),
             opts.fixed_noise.value_or(1e-6)};
      } else {
        auto obj = [&](const Eigen::VectorXd& lp) {
          Eigen::MatrixXd k =
              std::exp(lp(1)) * (-sq / std::exp(std::clamp(lp(0), -14.0, 14.0))).array().exp().matrix();
          k += std::max(std::exp(std::clamp(lp(2), -28.0, 6.0)), opts.noise_floor) *
               Eigen::MatrixXd::Identity(n, n);
          return opt::gaussian_lml(y, k);
        };
        Eigen::VectorXd x0(3);
        x0 << std::log(theta0), std::log(var0), std::log(0.05 * var0 + 1e-8);
        opt::AscentState best;
        bool any = false;
        for (int r = 0; r < std::max(1, opts.restarts); ++r) {
          Eigen::VectorXd start = x0;
          if (r > 0)
            for (int k = 0; k < 3; ++k) start(k) += perturb(rng);
          if (!std::isfinite(obj(start))) continue;
          opt::AscentState res = opt::ascend(obj, start, opts.max_iters, opts.tol);
          if (!any || res.f > best.f) {
            best = std::move(res);
            any = true;
          }
        }
        if (!any) throw ConvergenceError("baseline GP optimization failed on every restart");
        p = {std::exp(std::clamp(best.x(0), -14.0, 14.0)),
             std::exp(std::clamp(best.x(1), -28.0, 14.0)),
             std::max(std::exp(std::clamp(best.x(2), -28.0, 6.0)), opts.noise_floor)};
      }
      Eigen::MatrixXd k = p(1) * (-sq / p(0)).array().exp().matrix();
      k += std::max(p(2), 1e-10) * Eigen::MatrixXd::Identity(n, n);
      Eigen::LLT<Eigen::MatrixXd> llt(k);
      if (llt.info() != Eigen::Success) {
        k += 1e-8 * Eigen::MatrixXd::Identity(n, n);
        llt.compute(k);
        if (llt.info() != Eigen::Success)
          throw ConditioningError("baseline covariance is not PD", detail::min_eigenvalue(k));
      }
      alphas.push_back(llt.solve(y));
      params.push_back(p);
    }
  }

  Eigen::VectorXd predict(const Eigen::VectorXd& xstar) const {
    Eigen::VectorXd out(static_cast<int>(alphas.size()));
    const int n = static_cast<int>(x.rows());
    for (size_t c = 0; c < alphas.size(); ++c) {
      Eigen::VectorXd ks(n);
      for (int i = 0; i < n; ++i)
        ks(i) = params[c](1) *
                std::exp(-(x.row(i).transpose() - xstar).squaredNorm() / params[c](0));
      out(static_cast<int>(c)) = ks.dot(alphas[c]);
    }
    return out;
  }
};

}  // namespace

Eigen::VectorXd AmbientEmbedding::embed(const ManifoldPoint& p) const {
  if (desc.kind == ManifoldKind::Sphere) return p.vec();
  return embed_sym(p.value());
}

Eigen::VectorXd AmbientEmbedding::embed_sym(const Eigen::MatrixXd& sym) const {
  const int d = desc.ambient_dim;
  Eigen::VectorXd v(d * (d + 1) / 2);
  const double s = std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) v(k++) = (i == j) ? sym(i, j) : s * sym(i, j);
  return v;
}

Eigen::MatrixXd AmbientEmbedding::unembed_sym(const Eigen::VectorXd& v) const {
  const int d = desc.ambient_dim;
  if (v.size() != d * (d + 1) / 2) throw DimensionError("wrong length for SPD vectorization");
  Eigen::MatrixXd m(d, d);
  const double s = 1.0 / std::sqrt(2.0);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      m(i, j) = m(j, i) = (i == j) ? v(k) : s * v(k);
      ++k;
    }
  return m;
}

ManifoldPoint AmbientEmbedding::project(const Eigen::VectorXd& v) const {
  if (desc.kind == ManifoldKind::Sphere) {
    double n = v.norm();
    if (n < 1e-12)
      throw SingularityError("sphere projection of a (near-)zero ambient prediction");
    return ManifoldPoint(desc, Eigen::MatrixXd(v / n));
  }
  Eigen::MatrixXd m = unembed_sym(v);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  Eigen::VectorXd lam = eig.eigenvalues().cwiseMax(1e-8);
  Eigen::MatrixXd r = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  return ManifoldPoint(desc, 0.5 * (r + r.transpose()));
}

std::vector<ManifoldPoint> mgpr_fit_predict(const Dataset& data, const Eigen::MatrixXd& xstars,
                                            const BaselineOptions& opts) {
  data.validate();
  if (data.size() < 2) throw DimensionError("mgpr needs at least two samples");
  if (xstars.cols() != data.X.cols()) throw DimensionError("test input dimension mismatch");
  AmbientEmbedding emb(data.descriptor());
  const int n = data.size();
  Eigen::MatrixXd embedded(n, emb.dim());
  for (int i = 0; i < n; ++i) embedded.row(i) = emb.embed(data.Y[i]);
  Eigen::RowVectorXd mean = embedded.colwise().mean();
  embedded.rowwise() -= mean;

  ScalarGpBank bank;
  bank.fit(data.X, embedded, opts);

  std::vector<ManifoldPoint> out;
  out.reserve(xstars.rows());
  for (int j = 0; j < xstars.rows(); ++j)
    out.push_back(emb.project(bank.predict(xstars.row(j).transpose()) + mean.transpose()));
  return out;
}

ManifoldPoint mgpr_fit_predict(const Dataset& data, const Eigen::VectorXd& xstar,
                               const BaselineOptions& opts) {
  return mgpr_fit_predict(data, Eigen::MatrixXd(xstar.transpose()), opts).front();
}

std::vector<ManifoldPoint> wgpr_fit_predict(const Dataset& data, const BasepointCurve& bpf,
                                            const Eigen::MatrixXd& xstars,
                                            const Eigen::VectorXd& tstars,
                                            const BaselineOptions& opts) {
  data.validate();
  if (data.size() < 2) throw DimensionError("wgpr needs at least two samples");
  if (xstars.cols() != data.X.cols()) throw DimensionError("test input dimension mismatch");
  if (xstars.rows() != tstars.size()) throw DimensionError("one t* per test input required");
  AmbientEmbedding emb(data.descriptor());
  const bool sphere = data.descriptor().kind == ManifoldKind::Sphere;
  const int n = data.size();
  const int k = sphere ? data.descriptor().ambient_dim : data.descriptor().tangent_dim();

  // ambient coordinates of the untransported log residuals
  Eigen::MatrixXd resid(n, k);
  for (int i = 0; i < n; ++i) {
    TangentVector li = log_map(bpf.eval(data.t(i)), data.Y[i]);
    resid.row(i) = sphere ? Eigen::VectorXd(li.vec()) : emb.embed_sym(li.value());
  }

  ScalarGpBank bank;
  bank.fit(data.X, resid, opts);

  std::vector<ManifoldPoint> out;
  out.reserve(xstars.rows());
  for (int j = 0; j < xstars.rows(); ++j) {
    Eigen::VectorXd a = bank.predict(xstars.row(j).transpose());
    ManifoldPoint mu = bpf.eval(tstars(j));
    Eigen::MatrixXd tangent;
    if (sphere) {
      Eigen::VectorXd w = a - a.dot(mu.vec()) * mu.vec();
      tangent = w;
    } else {
      tangent = emb.unembed_sym(a);
    }
    out.push_back(exp_map(mu, TangentVector(mu, tangent)));
  }
  return out;
}

ManifoldPoint wgpr_fit_predict(const Dataset& data, const BasepointCurve& bpf,
                               const Eigen::VectorXd& xstar, double tstar,
                               const BaselineOptions& opts) {
  return wgpr_fit_predict(data, bpf, Eigen::MatrixXd(xstar.transpose()),
                          Eigen::VectorXd::Constant(1, tstar), opts)
      .front();
}

}  // namespace igpr
