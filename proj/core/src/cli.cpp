#include "igpr/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "igpr/harness.hpp"
#include "igpr/io.hpp"
#include "json.hpp"

namespace igpr {

namespace {

using nlohmann::json;

// JSON config files: top-level keys map to the subcommand's long option names.
// Command-line values take precedence; config values fill in the rest.
void apply_json_config(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError(path + ": config must be a JSON object");

  auto render = [](const json& v) -> std::string {
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
  };
  for (auto it = j.begin(); it != j.end(); ++it) {
    CLI::Option* op = sub->get_option_no_throw("--" + it.key());
    if (op == nullptr) throw DataError(path + ": unknown config key '" + it.key() + "'");
    if (op->count() > 0) continue;  // explicitly given on the command line
    if (it->is_array())
      for (const auto& v : *it) op->add_result(render(v));
    else
      op->add_result(render(*it));
    try {
      op->run_callback();
    } catch (const CLI::Error& e) {
      throw DataError(path + ": bad value for '" + it.key() + "': " + e.what());
    }
  }
}

ManifoldDescriptor parse_manifold(const std::string& s) {
  auto colon = s.find(':');
  if (colon == std::string::npos)
    throw DataError("manifold must be sphere:<dim> or spd:<side>, got '" + s + "'");
  std::string kind = s.substr(0, colon);
  int dim = 0;
  try {
    dim = std::stoi(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw DataError("bad manifold dimension in '" + s + "'");
  }
  if (kind == "sphere" && dim >= 1) return ManifoldDescriptor::sphere(dim);
  if (kind == "spd" && dim >= 2) return ManifoldDescriptor::spd(dim);
  throw DataError("manifold must be sphere:<dim>=1> or spd:<side>=2>, got '" + s + "'");
}

SpdTransport parse_transport(const std::string& s) {
  if (s == "paper") return SpdTransport::Paper;
  if (s == "levi-civita") return SpdTransport::LeviCivita;
  throw DataError("transport must be 'paper' or 'levi-civita', got '" + s + "'");
}

struct SimulateArgs {
  std::string scenario = "s1";
  std::vector<double> theta = {0.1, 0.3, 0.5};
  std::vector<double> noise_sd = {0.01, 0.03, 0.05};
  int n = 100;
  int reps = 10;
  std::string scheme = "random";
  unsigned long long seed = 0;
  std::vector<std::string> methods = {"igpr", "wgpr-approx", "mgpr"};
  std::string out = "report.json";
  std::string out_csv;
  int threads = 0;
  int restarts = 5;
  int max_iters = 100;
  bool tune_mgpr = false;
};

int run_simulate(const SimulateArgs& a) {
  ScenarioSpec spec;
  if (a.scenario == "s1")
    spec.name = ScenarioName::S1;
  else if (a.scenario == "s2")
    spec.name = ScenarioName::S2;
  else
    throw DataError("scenario must be 's1' or 's2', got '" + a.scenario + "'");
  if (a.theta.size() != 3) throw DataError("theta needs exactly three values");
  if (a.noise_sd.size() != 3) throw DataError("noise-sd needs exactly three values");
  spec.theta = Eigen::Map<const Eigen::VectorXd>(a.theta.data(), 3);
  spec.noise_sd = Eigen::Map<const Eigen::VectorXd>(a.noise_sd.data(), 3);
  spec.n_total = a.n;
  spec.reps = a.reps;
  spec.seed = a.seed;
  if (a.scheme == "random")
    spec.scheme = SamplingScheme::Random;
  else if (a.scheme == "sort")
    spec.scheme = SamplingScheme::Sort;
  else
    throw DataError("scheme must be 'random' or 'sort', got '" + a.scheme + "'");
  spec.validate();

  ExperimentOptions opts;
  opts.threads = a.threads;
  opts.fit.seed = a.seed;
  opts.fit.restarts = a.restarts;
  opts.fit.max_iters = a.max_iters;
  opts.baseline.seed = a.seed;
  opts.tune_mgpr = a.tune_mgpr;

  EvalReport report = run_experiment(spec, a.methods, opts);

  json echo;
  echo["scenario"] = a.scenario;
  echo["theta"] = a.theta;
  echo["noise_sd"] = a.noise_sd;
  echo["n"] = a.n;
  echo["reps"] = a.reps;
  echo["scheme"] = a.scheme;
  echo["seed"] = a.seed;
  echo["methods"] = a.methods;
  echo["restarts"] = a.restarts;
  echo["max_iters"] = a.max_iters;
  echo["tune_mgpr"] = a.tune_mgpr;
  write_report_json(report, a.out, echo.dump());
  if (!a.out_csv.empty()) write_report_csv(report, a.out_csv);

  for (const auto& m : report.methods)
    std::cout << m.method << " mean_rmsge " << std::setprecision(10) << m.mean_rmsge
              << " stderr " << m.stderr_rmsge << " failures " << m.failures << "\n";
  std::cout << "report written to " << a.out << "\n";
  return 0;
}

struct FitArgs {
  std::string data;
  std::string manifold;
  std::string flight;
  std::string dti;
  bool presmooth = false;
  double bandwidth = 0.0;
  bool clamp_spd = false;
  std::string out = "model.json";
  std::string kernel = "diag-rbf";
  std::string bpf = "geodesic";
  std::string transport = "paper";
  double anchor_t = std::numeric_limits<double>::quiet_NaN();
  int restarts = 5;
  int max_iters = 100;
  unsigned long long seed = 0;
  double noise_floor = 1e-10;
  bool include_noise = false;
};

BasepointCurve build_curve(const Dataset& data, const std::string& kind) {
  if (kind == "geodesic") {
    GeodesicFitResult res = fit_geodesic_regression(data);
    return res.curve;
  }
  if (kind == "piecewise") {
    // interpolating curve through the samples, first occurrence per t
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return data.t(a) < data.t(b); });
    std::vector<double> ts;
    std::vector<ManifoldPoint> ps;
    for (int i : order) {
      if (!ts.empty() && data.t(i) <= ts.back()) continue;
      ts.push_back(data.t(i));
      ps.push_back(data.Y[i]);
    }
    if (ts.size() < 2) throw DataError("piecewise basepoint curve needs at least two distinct t");
    return BasepointCurve::piecewise(std::move(ts), std::move(ps));
  }
  throw DataError("bpf must be 'geodesic' or 'piecewise', got '" + kind + "'");
}

int run_fit(const FitArgs& a) {
  int sources = (!a.data.empty()) + (!a.flight.empty()) + (!a.dti.empty());
  if (sources != 1)
    throw DataError("exactly one of --data, --flight, --dti is required");

  Dataset data;
  if (!a.data.empty()) {
    if (a.manifold.empty()) throw DataError("--data requires --manifold");
    data = read_dataset_csv(a.data, parse_manifold(a.manifold));
  } else if (!a.flight.empty()) {
    data = ingest_flight_csv(a.flight, a.presmooth, a.bandwidth);
  } else {
    data = ingest_dti_grid(a.dti, a.clamp_spd);
  }

  SpdTransport transport = parse_transport(a.transport);
  KernelFamily family;
  if (a.kernel == "diag-rbf")
    family = KernelFamily::DiagRbf;
  else if (a.kernel == "rbf")
    family = KernelFamily::Rbf;
  else
    throw DataError("kernel must be 'diag-rbf' or 'rbf', got '" + a.kernel + "'");

  BasepointCurve curve = build_curve(data, a.bpf);
  double anchor_t = std::isnan(a.anchor_t) ? data.t(0) : a.anchor_t;
  Frame frame = default_frame(curve.eval(anchor_t), transport);

  FitOptions opts;
  opts.restarts = a.restarts;
  opts.max_iters = a.max_iters;
  opts.seed = a.seed;
  opts.transport = transport;
  opts.noise_floor = a.noise_floor;
  opts.include_noise = a.include_noise;

  Hyperparams init = default_init(data, curve, anchor_t, frame, family, transport);
  FittedModel model = fit(data, curve, anchor_t, frame, family, init, opts);
  save_model(model, a.out);

  std::cout << "fitted " << data.size() << " samples; noise_var " << std::setprecision(6)
            << model.cov.noise_var << "; model written to " << a.out << "\n";
  return 0;
}

struct PredictArgs {
  std::string model;
  std::string inputs;
  std::string out = "predictions.csv";
};

int run_predict(const PredictArgs& a) {
  FittedModel model = load_model(a.model);
  const int q = static_cast<int>(model.data.X.cols());

  // inputs CSV: header t,x1..xQ
  std::ifstream in(a.inputs);
  if (!in) throw DataError("cannot open '" + a.inputs + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw DataError(a.inputs + ": empty file");
  std::vector<double> ts;
  std::vector<Eigen::VectorXd> xs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ss, field, ',')) {
      try {
        vals.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw DataError(a.inputs + ":" + std::to_string(line_no) + ": cannot parse '" + field +
                        "'");
      }
    }
    if (static_cast<int>(vals.size()) != 1 + q)
      throw DataError(a.inputs + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(1 + q) + " fields, got " + std::to_string(vals.size()));
    ts.push_back(vals[0]);
    xs.push_back(Eigen::Map<Eigen::VectorXd>(vals.data() + 1, q));
  }
  if (ts.empty()) throw DataError(a.inputs + ": no data rows");

  Eigen::VectorXd tv(static_cast<int>(ts.size()));
  std::vector<ManifoldPoint> preds;
  for (size_t i = 0; i < ts.size(); ++i) {
    tv(static_cast<int>(i)) = ts[i];
    preds.push_back(predict(model, xs[i], ts[i]).map_point);
  }
  write_predictions_csv(a.out, tv, preds);
  std::cout << preds.size() << " predictions written to " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string manifold;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  ManifoldDescriptor desc = parse_manifold(a.manifold);
  auto [tp, yp] = read_predictions_csv(a.pred, desc);
  auto [tt, yt] = read_predictions_csv(a.truth, desc);
  if (yp.size() != yt.size())
    throw DataError("prediction and truth files have different lengths (" +
                    std::to_string(yp.size()) + " vs " + std::to_string(yt.size()) + ")");
  double v = rmsge(yp, yt);
  std::cout << "rmsge " << std::setprecision(17) << v << "\n";
  if (!a.out.empty()) {
    json j;
    j["rmsge"] = v;
    j["count"] = yp.size();
    std::ofstream out(a.out);
    if (!out) throw DataError("cannot open '" + a.out + "' for writing");
    out << j.dump(2) << '\n';
  }
  return 0;
}

struct CovReportArgs {
  std::vector<double> theta = {0.1, 0.3, 0.5};
  int n = 120;
  int reps = 5;
  unsigned long long seed = 0;
  int restarts = 5;
  int max_iters = 100;
  std::string out_dir = "cov-report";
};

int run_cov_report(const CovReportArgs& a) {
  if (a.theta.size() != 3) throw DataError("theta needs exactly three values");
  ScenarioSpec spec;
  spec.name = ScenarioName::S1;
  spec.theta = Eigen::Map<const Eigen::VectorXd>(a.theta.data(), 3);
  spec.seed = a.seed;

  FitOptions opts;
  opts.restarts = a.restarts;
  opts.max_iters = a.max_iters;
  opts.seed = a.seed;

  CovRecoveryReport report = covariance_recovery_report(spec, a.n, a.reps, opts);
  write_cov_report(report, a.out_dir);
  std::cout << "theta_true";
  for (int d = 0; d < report.true_theta.size(); ++d) std::cout << ' ' << report.true_theta(d);
  std::cout << "\ntheta_est";
  for (int d = 0; d < report.mean_theta.size(); ++d)
    std::cout << ' ' << std::setprecision(6) << report.mean_theta(d);
  std::cout << "\ntables written to " << a.out_dir << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Gaussian process regression for manifold-valued responses"};
  app.require_subcommand(1);
  std::string config_path;

  SimulateArgs sim;
  CLI::App* s = app.add_subcommand("simulate", "Run a simulation study and write a report");
  s->add_option("--config", config_path, "JSON config file");
  s->add_option("--scenario", sim.scenario, "s1 or s2")->check(CLI::IsMember({"s1", "s2"}));
  s->add_option("--theta", sim.theta, "kernel parameters (3 values)")->delimiter(',');
  s->add_option("--noise-sd", sim.noise_sd, "noise sds for s2 (3 values)")->delimiter(',');
  s->add_option("--n", sim.n, "samples per repetition");
  s->add_option("--reps", sim.reps, "number of repetitions");
  s->add_option("--scheme", sim.scheme, "random or sort")
      ->check(CLI::IsMember({"random", "sort"}));
  s->add_option("--seed", sim.seed, "RNG seed");
  s->add_option("--methods", sim.methods, "igpr, wgpr-approx, mgpr")->delimiter(',');
  s->add_option("--out", sim.out, "report JSON path");
  s->add_option("--out-csv", sim.out_csv, "per-repetition CSV path");
  s->add_option("--threads", sim.threads, "parallel repetitions (0: IGPR_THREADS)");
  s->add_option("--restarts", sim.restarts, "optimizer restarts");
  s->add_option("--max-iters", sim.max_iters, "optimizer iteration cap");
  s->add_flag("--tune-mgpr", sim.tune_mgpr, "tune mgpr hyperparameters instead of unit defaults");

  FitArgs fit;
  CLI::App* f = app.add_subcommand("fit", "Fit a model to a data file");
  f->add_option("--config", config_path, "JSON config file");
  f->add_option("--data", fit.data, "generic dataset CSV");
  f->add_option("--manifold", fit.manifold, "sphere:<dim> or spd:<side> (with --data)");
  f->add_option("--flight", fit.flight, "flight trajectory CSV (t,lat_deg,lon_deg)");
  f->add_option("--dti", fit.dti, "DTI tensor grid CSV");
  f->add_flag("--presmooth", fit.presmooth, "smooth lat/lon before mapping");
  f->add_option("--bandwidth", fit.bandwidth, "presmoothing bandwidth (0: reference rule)");
  f->add_flag("--clamp-spd", fit.clamp_spd, "repair non-PD tensors by eigenvalue clamping");
  f->add_option("--out", fit.out, "model JSON path");
  f->add_option("--kernel", fit.kernel, "diag-rbf or rbf")
      ->check(CLI::IsMember({"diag-rbf", "rbf"}));
  f->add_option("--bpf", fit.bpf, "basepoint curve: geodesic or piecewise")
      ->check(CLI::IsMember({"geodesic", "piecewise"}));
  f->add_option("--transport", fit.transport, "paper or levi-civita")
      ->check(CLI::IsMember({"paper", "levi-civita"}));
  f->add_option("--anchor-t", fit.anchor_t, "anchor index (default: first sample)");
  f->add_option("--restarts", fit.restarts, "optimizer restarts");
  f->add_option("--max-iters", fit.max_iters, "optimizer iteration cap");
  f->add_option("--seed", fit.seed, "RNG seed");
  f->add_option("--noise-floor", fit.noise_floor, "lower bound on the noise variance");
  f->add_flag("--include-noise", fit.include_noise, "add noise to predictive covariances");

  PredictArgs pred;
  CLI::App* p = app.add_subcommand("predict", "Predict at new inputs from a saved model");
  p->add_option("--config", config_path, "JSON config file");
  p->add_option("--model", pred.model, "model JSON path")->required();
  p->add_option("--inputs", pred.inputs, "inputs CSV (t,x1..xQ)")->required();
  p->add_option("--out", pred.out, "predictions CSV path");

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "Geodesic error between predictions and truth");
  e->add_option("--config", config_path, "JSON config file");
  e->add_option("--pred", ev.pred, "predictions CSV")->required();
  e->add_option("--truth", ev.truth, "truth CSV (same format)")->required();
  e->add_option("--manifold", ev.manifold, "sphere:<dim> or spd:<side>")->required();
  e->add_option("--out", ev.out, "optional JSON output");

  CovReportArgs cr;
  CLI::App* c = app.add_subcommand("cov-report", "Covariance recovery diagnostic tables");
  c->add_option("--config", config_path, "JSON config file");
  c->add_option("--theta", cr.theta, "true kernel parameters (3 values)")->delimiter(',');
  c->add_option("--n", cr.n, "samples per repetition");
  c->add_option("--reps", cr.reps, "number of repetitions");
  c->add_option("--seed", cr.seed, "RNG seed");
  c->add_option("--restarts", cr.restarts, "optimizer restarts");
  c->add_option("--max-iters", cr.max_iters, "optimizer iteration cap");
  c->add_option("--out-dir", cr.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty())
      for (CLI::App* sub : {s, f, p, e, c})
        if (sub->parsed()) apply_json_config(sub, config_path);
    if (s->parsed()) return run_simulate(sim);
    if (f->parsed()) return run_fit(fit);
    if (p->parsed()) return run_predict(pred);
    if (e->parsed()) return run_eval(ev);
    if (c->parsed()) return run_cov_report(cr);
    return 1;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return 2;
  } catch (const DimensionError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return 2;
  } catch (const InvalidPointError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return 2;
  } catch (const Error& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return 3;
  }
}

}  // namespace igpr
