#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "igpr/bpf.hpp"
#include "igpr/covariance.hpp"
#include "igpr/dataset.hpp"

namespace igpr {

struct Hyperparams {
  Eigen::VectorXd theta;
  std::optional<Eigen::MatrixXd> B;  // absent for DiagRbf
  double noise_var{1e-6};
};

struct FitOptions {
  int restarts = 5;
  int max_iters = 100;
  double tol = 1e-6;  // gradient norm in log-parameter space
  unsigned long long seed = 0;
  SpdTransport transport = SpdTransport::Paper;
  bool include_noise = false;     // add noise_var to the predictive covariance
  bool rebase_posterior = false;  // re-base the posterior at the MAP point
  double noise_floor = 1e-10;
};

struct OptimizerTrace {
  std::vector<double> objective;  // best log-ML per iteration of the winning restart
  bool hit_max_iters = false;
  bool conditioning_warning = false;
  double exit_grad_norm = 0.0;
};

struct PosteriorPrediction {
  Eigen::VectorXd mean_coords;  // beta* in the (transported) anchor frame
  Eigen::MatrixXd cov;          // Sigma*
  TangentVector tangent_mean;   // at mu(t_pred)
  ManifoldPoint map_point;      // Exp(mu(t_pred), beta*)
};

/// A fitted iGPR model, anchored at t* with frame E. Immutable after fit().
struct FittedModel {
  Dataset data;
  BasepointCurve bpf;
  double anchor_t;
  Frame frame;
  Eigen::MatrixXd frame_rot;  // O with coords_anchor = O * coords_current; I by default
  CovarianceModel cov;
  Eigen::VectorXd residuals;  // stacked sample-major, coordinate fastest
  Eigen::MatrixXd chol_L;
  Eigen::VectorXd alpha;
  SpdTransport transport;
  FitOptions opts;
  OptimizerTrace trace;
};

/// Stacked coordinate representation of the transported log-residuals
/// Gamma_{mu(t_i)->mu(t*)}(Log(mu(t_i), y_i)) in the anchor frame.
Eigen::VectorXd compute_residuals(const Dataset& data, const BasepointCurve& bpf, double t_star,
                                  const Frame& frame, SpdTransport mode = SpdTransport::Paper);

/// Gaussian log evidence of a stacked residual vector under the assembled
/// covariance (with noise).
double log_marginal_likelihood(const Eigen::VectorXd& residuals, const Eigen::MatrixXd& X,
                               const CovarianceModel& cov);
double log_marginal_likelihood(const Dataset& data, const BasepointCurve& bpf,
                               const CovarianceModel& cov, double t_star, const Frame& frame);

/// Data-driven initialization: theta from the median squared pairwise input
/// distance, B from the sample covariance of residual blocks,
/// noise_var = 0.1 tr(B)/D.
Hyperparams default_init(const Dataset& data, const BasepointCurve& bpf, double t_star,
                         const Frame& frame, KernelFamily family,
                         SpdTransport mode = SpdTransport::Paper);

FittedModel fit(const Dataset& data, const BasepointCurve& bpf, double t_star, const Frame& frame,
                KernelFamily family, const Hyperparams& init, const FitOptions& opts = {});

/// Posterior prediction at covariate x*, reported at mu(t_pred). The
/// coordinates are computed in the anchor frame and transported along the
/// basepoint curve to t_pred.
PosteriorPrediction predict(const FittedModel& model, const Eigen::VectorXd& xstar, double t_pred);
PosteriorPrediction predict(const FittedModel& model, const Eigen::VectorXd& xstar);

/// Re-express the model at a different anchor (residuals recomputed from the
/// data, frame transported along the curve, hyperparameters kept).
FittedModel rebase_anchor(const FittedModel& model, double t_new);

/// Re-express the model in the frame W = "E rotated by O" at the same anchor,
/// where O = frame_change(E, W). Predictions map back to identical manifold
/// points.
FittedModel rotate_frame(const FittedModel& model, const Eigen::MatrixXd& o);

/// Draw one path of the intrinsic GP prior on the index grid: coordinates
/// v ~ N(0, assembled covariance without noise), mapped through transported
/// frames and Exp. Deterministic given the seed.
std::vector<ManifoldPoint> sample_prior(const BasepointCurve& bpf, const CovarianceModel& cov,
                                        const Eigen::VectorXd& t_grid, double anchor_t,
                                        const Frame& frame, unsigned long long seed,
                                        SpdTransport mode = SpdTransport::Paper);

}  // namespace igpr
