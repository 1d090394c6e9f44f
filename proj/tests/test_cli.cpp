#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "igpr/cli.hpp"
#include "igpr/io.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace igpr;
namespace fs = std::filesystem;

namespace {

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("igpr");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("igpr_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("usage errors exit with code 1") {
  CHECK(run({}) == 1);
  CHECK(run({"simulate", "--no-such-flag"}) == 1);
  CHECK(run({"unknown-subcommand"}) == 1);
  // invalid enum-ish values are usage errors too
  CHECK(run({"simulate", "--scenario", "s3", "--out", "/dev/null"}) == 1);
}

TEST_CASE("simulate writes a report document") {
  TempDir dir;
  std::string out = dir.file("report.json");
  std::string csv = dir.file("report.csv");
  int rc = run({"simulate", "--scenario", "s1", "--n", "30", "--reps", "2", "--seed", "3",
                "--methods", "igpr,mgpr", "--restarts", "1", "--max-iters", "25", "--out", out,
                "--out-csv", csv});
  CHECK(rc == 0);
  std::ifstream in(out);
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.at("format_version").get<std::string>() == "igpr-report-v1");
  CHECK(doc.at("methods").size() == 2);
  CHECK(doc.at("config").at("n").get<int>() == 30);
  CHECK(fs::exists(csv));
}

TEST_CASE("fit, predict and eval round trip on a sphere dataset") {
  TempDir dir;
  // smooth data near a fixed point so the piecewise curve is well behaved
  Dataset d;
  const int n = 12;
  d.t = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  d.X = d.t;
  ManifoldPoint p = ManifoldPoint::sphere(Eigen::Vector3d(0, 0, 1));
  for (int i = 0; i < n; ++i) {
    Eigen::Vector3d v(0.3 * std::sin(2.0 * d.t(i)), 0.3 * std::cos(1.5 * d.t(i)), 0.0);
    d.Y.push_back(exp_map(p, TangentVector(p, v)));
  }
  std::string data = dir.file("data.csv");
  write_dataset_csv(data, d);

  std::string model = dir.file("model.json");
  CHECK(run({"fit", "--data", data, "--manifold", "sphere:2", "--bpf", "piecewise", "--kernel",
             "diag-rbf", "--restarts", "2", "--max-iters", "40", "--out", model}) == 0);
  CHECK(fs::exists(model));

  // predict back at the training inputs
  std::string inputs = dir.file("inputs.csv");
  {
    std::ofstream out(inputs);
    out << "t,x1\n";
    for (int i = 0; i < n; ++i) out << d.t(i) << "," << d.X(i, 0) << "\n";
  }
  std::string preds = dir.file("preds.csv");
  CHECK(run({"predict", "--model", model, "--inputs", inputs, "--out", preds}) == 0);

  // truths file and eval
  std::string truth = dir.file("truth.csv");
  write_predictions_csv(truth, d.t, d.Y);
  std::string evalout = dir.file("eval.json");
  CHECK(run({"eval", "--pred", preds, "--truth", truth, "--manifold", "sphere:2", "--out",
             evalout}) == 0);
  std::ifstream in(evalout);
  nlohmann::json doc = nlohmann::json::parse(in);
  // noiseless smooth data: near-interpolation through the CLI path
  CHECK(doc.at("rmsge").get<double>() <= 1e-3);

  // and predictions parse as points on the sphere
  auto [tt, pts] = read_predictions_csv(preds, ManifoldDescriptor::sphere(2));
  REQUIRE(static_cast<int>(pts.size()) == n);
}

TEST_CASE("data errors exit with code 2") {
  TempDir dir;
  CHECK(run({"fit", "--data", dir.file("missing.csv"), "--manifold", "sphere:2", "--out",
             dir.file("m.json")}) == 2);

  std::string bad = dir.file("bad.csv");
  {
    std::ofstream out(bad);
    out << "t,lat_deg,lon_deg\n0,95,0\n1,0,0\n";
  }
  CHECK(run({"fit", "--flight", bad, "--out", dir.file("m.json")}) == 2);

  // eval with mismatched prediction/truth lengths
  std::string a = dir.file("a.csv"), b = dir.file("b.csv");
  Eigen::VectorXd t2 = Eigen::VectorXd::LinSpaced(2, 0.0, 1.0);
  Eigen::VectorXd t3 = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
  std::vector<ManifoldPoint> p2 = {ManifoldPoint::sphere(Eigen::Vector3d(1, 0, 0)),
                                   ManifoldPoint::sphere(Eigen::Vector3d(0, 1, 0))};
  std::vector<ManifoldPoint> p3 = p2;
  p3.push_back(ManifoldPoint::sphere(Eigen::Vector3d(0, 0, 1)));
  write_predictions_csv(a, t2, p2);
  write_predictions_csv(b, t3, p3);
  CHECK(run({"eval", "--pred", a, "--truth", b, "--manifold", "sphere:2", "--out",
             dir.file("e.json")}) == 2);
}

TEST_CASE("config file supplies defaults") {
  TempDir dir;
  std::string cfg = dir.file("config.json");
  {
    std::ofstream out(cfg);
    out << "{\"scenario\": \"s1\", \"n\": 30, \"reps\": 1, \"seed\": 9, "
           "\"methods\": \"mgpr\", \"restarts\": 1, \"max-iters\": 20}";
  }
  std::string out = dir.file("report.json");
  CHECK(run({"simulate", "--config", cfg, "--out", out}) == 0);
  std::ifstream in(out);
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.at("config").at("n").get<int>() == 30);
  CHECK(doc.at("methods").size() == 1);
}

TEST_CASE("cov-report writes plot tables") {
  TempDir dir;
  CHECK(run({"cov-report", "--n", "30", "--reps", "1", "--seed", "2", "--restarts", "1",
             "--max-iters", "20", "--out-dir", dir.path.string()}) == 0);
  CHECK(fs::exists(dir.path / "theta_summary.csv"));
  CHECK(fs::exists(dir.path / "grid.csv"));
}

TEST_CASE("dti fit path accepts the clamp option") {
  TempDir dir;
  std::string dti = dir.file("dti.csv");
  {
    std::ofstream out(dti);
    out << "i,j,d11,d12,d13,d22,d23,d33\n";
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double a = 1.0 + 0.1 * std::sin(0.5 * i + 0.3 * j);
        double b = 0.1 * std::cos(0.4 * i);
        out << i << "," << j << "," << a << "," << b << ",0," << a + 0.2 << ",0,"
            << a - 0.1 << "\n";
      }
  }
  std::string model = dir.file("model.json");
  CHECK(run({"fit", "--dti", dti, "--bpf", "piecewise", "--restarts", "1", "--max-iters", "25",
             "--out", model}) == 0);
  std::ifstream in(model);
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.at("format_version").get<std::string>() == "igpr-model-v1");
}
