#include "igpr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace igpr {

namespace {

Eigen::Matrix2d s1_target() {
  Eigen::Matrix2d m;
  m << 2.4360, -2.6465, -2.6465, 8.4208;
  return m;
}

unsigned long long rep_stream(unsigned long long seed, int rep) {
  return seed ^ static_cast<unsigned long long>(rep);
}

}  // namespace

void ScenarioSpec::validate() const {
  if (n_total < 10) throw DimensionError("scenario needs N >= 10");
  if (reps < 1) throw DimensionError("scenario needs reps >= 1");
  if (name == ScenarioName::S1 && (theta.size() != 3 || theta.minCoeff() <= 0))
    throw DimensionError("S1 needs three positive kernel parameters");
  if (amplitude < 0) throw DimensionError("S1 amplitude must be nonnegative");
  if (name == ScenarioName::S2 && (noise_sd.size() != 3 || noise_sd.minCoeff() < 0))
    throw DimensionError("S2 needs three nonnegative noise sds");
}

BasepointCurve ScenarioSpec::bpf() const {
  ManifoldPoint id = ManifoldPoint::spd(Eigen::MatrixXd::Identity(2, 2));
  return BasepointCurve::geodesic(id, log_map(id, ManifoldPoint::spd(s1_target())));
}

Frame ScenarioSpec::initial_frame() const { return spd_paper_s1_frame(); }

Split make_split(const ScenarioSpec& spec, int rep, int n) {
  Split s;
  if (spec.scheme == SamplingScheme::Sort) {
    if (n <= 5) throw DimensionError("Sort scheme needs more than five samples");
    for (int i = 0; i < n - 5; ++i) s.train.push_back(i);
    for (int i = n - 5; i < n; ++i) s.test.push_back(i);
    return s;
  }
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(rep_stream(spec.seed, rep) * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
  std::shuffle(idx.begin(), idx.end(), rng);
  int ntrain = static_cast<int>(std::ceil(0.8 * n));
  s.train.assign(idx.begin(), idx.begin() + ntrain);
  s.test.assign(idx.begin() + ntrain, idx.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

Dataset generate_scenario(const ScenarioSpec& spec, int rep) {
  spec.validate();
  const int n = spec.n_total;
  BasepointCurve curve = spec.bpf();
  Frame frame0 = spec.initial_frame();

  Dataset data;
  data.t.resize(n);
  for (int i = 0; i < n; ++i) data.t(i) = static_cast<double>(i) / (n - 1);
  data.X = data.t;

  std::mt19937_64 rng(rep_stream(spec.seed, rep));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd coords(n, 3);

  if (spec.name == ScenarioName::S1) {
    // independent GP draws per coordinate on the simulation basis
    Eigen::MatrixXd sq(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sq(i, j) = (data.t(i) - data.t(j)) * (data.t(i) - data.t(j));
    for (int d = 0; d < 3; ++d) {
      Eigen::MatrixXd k = (-sq / spec.theta(d)).array().exp().matrix();
      k += 1e-10 * Eigen::MatrixXd::Identity(n, n);
      Eigen::LLT<Eigen::MatrixXd> llt(k);
      if (llt.info() != Eigen::Success)
        throw ConditioningError("S1 kernel matrix is not PD", detail::min_eigenvalue(k));
      Eigen::VectorXd z(n);
      for (int i = 0; i < n; ++i) z(i) = normal(rng);
      coords.col(d) = std::sqrt(spec.amplitude) * (Eigen::MatrixXd(llt.matrixL()) * z);
    }
  } else if (spec.name == ScenarioName::S2) {
    for (int i = 0; i < n; ++i) {
      double t = data.t(i);
      coords(i, 0) = 1.0 + 0.05 * t + std::sin(t) / (t + 0.001) + spec.noise_sd(0) * normal(rng);
      coords(i, 1) = 1.0 + std::cos(t) + spec.noise_sd(1) * normal(rng);
      coords(i, 2) = 1.0 + std::sin(t) + spec.noise_sd(2) * normal(rng);
    }
  } else {
    throw DimensionError("generate_scenario supports S1 and S2 only");
  }

  data.Y.reserve(n);
  for (int i = 0; i < n; ++i) {
    TangentVector v0 = from_coords(coords.row(i).transpose(), frame0);
    TangentVector vi = curve.transport_along(0.0, data.t(i), v0);
    data.Y.push_back(exp_map(curve.eval(data.t(i)), vi));
  }
  return data;
}

double rmsge(const std::vector<ManifoldPoint>& predictions,
             const std::vector<ManifoldPoint>& truths) {
  if (predictions.size() != truths.size() || predictions.empty())
    throw DimensionError("rmsge needs equal-length nonempty lists");
  double s = 0.0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    double d = distance(predictions[i], truths[i]);
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

FittedModel fit_scenario_model(const ScenarioSpec& spec, const Dataset& train, double anchor_t,
                               const FitOptions& opts) {
  BasepointCurve curve = spec.bpf();
  Frame frame0 = spec.initial_frame();
  std::vector<Eigen::MatrixXd> basis;
  for (int k = 0; k < frame0.size(); ++k)
    basis.push_back(curve.transport_along(0.0, anchor_t, frame0.basis_vector(k), opts.transport).value());
  Frame anchor_frame(curve.eval(anchor_t), std::move(basis));
  Hyperparams init =
      default_init(train, curve, anchor_t, anchor_frame, KernelFamily::DiagRbf, opts.transport);
  return fit(train, curve, anchor_t, anchor_frame, KernelFamily::DiagRbf, init, opts);
}

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("IGPR_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min(threads, count); ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

EvalReport run_experiment(const ScenarioSpec& spec, const std::vector<std::string>& methods,
                          const ExperimentOptions& opts) {
  spec.validate();
  if (methods.empty()) throw DimensionError("run_experiment needs at least one method");
  for (const auto& m : methods)
    if (m != "igpr" && m != "wgpr-approx" && m != "mgpr")
      throw DimensionError("unknown method '" + m + "'");

  auto t0 = std::chrono::steady_clock::now();
  EvalReport report;
  report.total_reps = spec.reps;
  for (const auto& m : methods) {
    MethodResult r;
    r.method = m;
    r.per_rep.assign(spec.reps, std::numeric_limits<double>::quiet_NaN());
    report.methods.push_back(r);
  }

  parallel_for(spec.reps, resolve_threads(opts.threads), [&](int rep) {
    Dataset data = generate_scenario(spec, rep);
    Split split = make_split(spec, rep, data.size());
    Dataset train = data.subset(split.train);
    Dataset test = data.subset(split.test);
    std::vector<ManifoldPoint> truths = test.Y;

    for (size_t mi = 0; mi < methods.size(); ++mi) {
      try {
        std::vector<ManifoldPoint> preds;
        if (methods[mi] == "igpr") {
          FitOptions fo = opts.fit;
          fo.seed = opts.fit.seed ^ static_cast<unsigned long long>(rep);
          double anchor = test.t(0);
          FittedModel model = fit_scenario_model(spec, train, anchor, fo);
          for (int j = 0; j < test.size(); ++j)
            preds.push_back(predict(model, test.X.row(j).transpose(), test.t(j)).map_point);
        } else if (methods[mi] == "wgpr-approx") {
          BaselineOptions bo = opts.baseline;
          bo.seed = opts.baseline.seed ^ static_cast<unsigned long long>(rep);
          preds = wgpr_fit_predict(train, spec.bpf(), test.X, test.t, bo);
        } else {
          BaselineOptions bo = opts.baseline;
          bo.seed = opts.baseline.seed ^ static_cast<unsigned long long>(rep);
          if (!opts.tune_mgpr) {
            bo.fixed_theta = 1.0;
            bo.fixed_amplitude = 1.0;
            bo.fixed_noise = 1.0;
          }
          preds = mgpr_fit_predict(train, test.X, bo);
        }
        report.methods[mi].per_rep[rep] = rmsge(preds, truths);
      } catch (const Error& e) {
        std::cerr << "igpr: rep " << rep << " method " << methods[mi] << " failed: " << e.what()
                  << "\n";
      }
    }
  });

  int cells = 0, failures = 0;
  for (auto& m : report.methods) {
    std::vector<double> ok;
    for (double v : m.per_rep)
      if (std::isfinite(v)) ok.push_back(v);
    m.failures = static_cast<int>(m.per_rep.size() - ok.size());
    cells += static_cast<int>(m.per_rep.size());
    failures += m.failures;
    if (!ok.empty()) {
      double mean = std::accumulate(ok.begin(), ok.end(), 0.0) / ok.size();
      double var = 0.0;
      for (double v : ok) var += (v - mean) * (v - mean);
      var /= std::max<size_t>(1, ok.size() - 1);
      m.mean_rmsge = mean;
      m.stderr_rmsge = std::sqrt(var / ok.size());
    }
  }
  if (failures * 10 > cells)
    throw ConvergenceError("more than 10% of repetitions failed (" + std::to_string(failures) +
                           "/" + std::to_string(cells) + ")");

  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

CovRecoveryReport covariance_recovery_report(const ScenarioSpec& spec, int n, int reps,
                                             const FitOptions& opts) {
  if (spec.name != ScenarioName::S1)
    throw DimensionError("covariance recovery is defined for S1 only");
  ScenarioSpec s = spec;
  s.n_total = n;
  s.reps = reps;
  s.validate();

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(3);
  int ok = 0;
  for (int rep = 0; rep < reps; ++rep) {
    Dataset data = generate_scenario(s, rep);
    FitOptions fo = opts;
    fo.seed = opts.seed ^ static_cast<unsigned long long>(rep);
    try {
      FittedModel model = fit_scenario_model(s, data, data.t(0), fo);
      sum += model.cov.kernel.theta;
      ++ok;
    } catch (const Error& e) {
      std::cerr << "igpr: covariance recovery rep " << rep << " failed: " << e.what() << "\n";
    }
  }
  if (ok == 0) throw ConvergenceError("covariance recovery failed on every repetition");

  CovRecoveryReport out;
  out.mean_theta = sum / ok;
  out.true_theta = s.theta;
  out.grid.resize(50);
  for (int i = 0; i < 50; ++i) out.grid(i) = static_cast<double>(i) / 49.0;
  for (int d = 0; d < 3; ++d) {
    Eigen::MatrixXd tg(50, 50), eg(50, 50);
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 50; ++j) {
        double sq = (out.grid(i) - out.grid(j)) * (out.grid(i) - out.grid(j));
        tg(i, j) = std::exp(-sq / s.theta(d));
        eg(i, j) = std::exp(-sq / out.mean_theta(d));
      }
    out.true_gram.push_back(tg);
    out.est_gram.push_back(eg);
  }
  return out;
}

}  // namespace igpr
