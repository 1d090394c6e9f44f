#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "igpr/io.hpp"
#include "json.hpp"
#include "oracles.hpp"

using namespace igpr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("igpr_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static inline int counter = 0;
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

}  // namespace

TEST_CASE("point number representation round trips") {
  std::mt19937_64 rng(101);
  ManifoldDescriptor sp = ManifoldDescriptor::sphere(2);
  CHECK(point_number_count(sp) == 3);
  ManifoldPoint p = ManifoldPoint::sphere(oracle::random_unit(rng, 3));
  Eigen::VectorXd v = point_to_numbers(p);
  CHECK(distance(point_from_numbers(sp, v), p) <= 1e-12);

  ManifoldDescriptor sd = ManifoldDescriptor::spd(3);
  CHECK(point_number_count(sd) == 6);
  ManifoldPoint q = ManifoldPoint::spd(oracle::random_spd(rng, 3, 0.5));
  Eigen::VectorXd w = point_to_numbers(q);
  // upper triangle row-major
  CHECK(w(0) == doctest::Approx(q.value()(0, 0)));
  CHECK(w(1) == doctest::Approx(q.value()(0, 1)));
  CHECK(w(2) == doctest::Approx(q.value()(0, 2)));
  CHECK(w(3) == doctest::Approx(q.value()(1, 1)));
  CHECK((point_from_numbers(sd, w).value() - q.value()).norm() <= 1e-12);

  CHECK_THROWS_AS(point_from_numbers(sd, v), igpr::Error);
}

TEST_CASE("flight ingestion maps lat/lon to unit vectors and rescales t") {
  TempDir dir;
  std::string path = dir.file("flight.csv");
  write_text(path,
             "t,lat_deg,lon_deg\n"
             "100,0,0\n"
             "150,0,90\n"
             "200,90,0\n");
  Dataset d = ingest_flight_csv(path);
  REQUIRE(d.size() == 3);
  CHECK((d.Y[0].vec() - Eigen::Vector3d(1, 0, 0)).norm() <= 1e-12);
  CHECK((d.Y[1].vec() - Eigen::Vector3d(0, 1, 0)).norm() <= 1e-12);
  CHECK((d.Y[2].vec() - Eigen::Vector3d(0, 0, 1)).norm() <= 1e-12);
  CHECK(d.t(0) == doctest::Approx(0.0));
  CHECK(d.t(1) == doctest::Approx(0.5));
  CHECK(d.t(2) == doctest::Approx(1.0));
  CHECK(d.X.cols() == 1);
  CHECK(d.X(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("flight ingestion rejects malformed input with row context") {
  TempDir dir;
  std::string bad_header = dir.file("h.csv");
  write_text(bad_header, "time,lat,lon\n0,0,0\n");
  CHECK_THROWS_AS(ingest_flight_csv(bad_header), DataError);

  std::string bad_lat = dir.file("lat.csv");
  write_text(bad_lat, "t,lat_deg,lon_deg\n0,0,0\n1,95,0\n");
  CHECK_THROWS_WITH_AS(ingest_flight_csv(bad_lat), doctest::Contains(":3"), DataError);

  std::string bad_num = dir.file("num.csv");
  write_text(bad_num, "t,lat_deg,lon_deg\n0,0,0\n1,abc,0\n");
  CHECK_THROWS_WITH_AS(ingest_flight_csv(bad_num), doctest::Contains(":3"), DataError);

  std::string const_t = dir.file("ct.csv");
  write_text(const_t, "t,lat_deg,lon_deg\n5,0,0\n5,1,1\n");
  CHECK_THROWS_AS(ingest_flight_csv(const_t), DataError);

  CHECK_THROWS_AS(ingest_flight_csv(dir.file("missing.csv")), DataError);
}

TEST_CASE("flight round trip is lossless") {
  TempDir dir;
  std::string path = dir.file("flight.csv");
  write_text(path,
             "t,lat_deg,lon_deg\n"
             "0,10.25,-33.5\n"
             "1,11.5,-32.25\n"
             "2,12.75,-31.125\n"
             "3,14,-30\n");
  Dataset d = ingest_flight_csv(path);
  std::string out = dir.file("out.csv");
  write_flight_csv(out, d);
  Dataset d2 = ingest_flight_csv(out);
  REQUIRE(d2.size() == d.size());
  for (int i = 0; i < d.size(); ++i) {
    CHECK((d.Y[i].vec() - d2.Y[i].vec()).norm() <= 1e-12);
    CHECK(d.t(i) == doctest::Approx(d2.t(i)).epsilon(1e-12));
  }
}

TEST_CASE("flight presmoothing runs the local linear smoother") {
  TempDir dir;
  std::string path = dir.file("flight.csv");
  std::string content = "t,lat_deg,lon_deg\n";
  for (int i = 0; i < 40; ++i) {
    double t = i;
    double lat = 10.0 + 0.1 * i + ((i % 2) ? 0.5 : -0.5);  // zig-zag noise
    double lon = -30.0 + 0.05 * i;
    content += std::to_string(t) + "," + std::to_string(lat) + "," + std::to_string(lon) + "\n";
  }
  write_text(path, content);
  Dataset raw = ingest_flight_csv(path, false);
  Dataset smooth = ingest_flight_csv(path, true, 0.0);
  REQUIRE(smooth.size() == raw.size());
  // the smoothed track differs from the raw one and has less wiggle
  double raw_var = 0.0, smooth_var = 0.0;
  for (int i = 1; i + 1 < raw.size(); ++i) {
    raw_var += distance(raw.Y[i - 1], raw.Y[i + 1]) < distance(raw.Y[i - 1], raw.Y[i]) ? 1.0 : 0.0;
    smooth_var +=
        distance(smooth.Y[i - 1], smooth.Y[i + 1]) < distance(smooth.Y[i - 1], smooth.Y[i]) ? 1.0
                                                                                            : 0.0;
  }
  CHECK(smooth_var <= raw_var);
}

TEST_CASE("dti ingestion builds normalized grid predictors") {
  TempDir dir;
  std::string path = dir.file("dti.csv");
  write_text(path,
             "i,j,d11,d12,d13,d22,d23,d33\n"
             "0,0,1,0,0,1,0,1\n"
             "0,1,2,0.1,0,1.5,0.05,1.2\n"
             "1,0,1.1,0,0.02,1,0,0.9\n"
             "1,1,1.3,0.2,0.1,1.4,0.1,1.6\n");
  Dataset d = ingest_dti_grid(path);
  REQUIRE(d.size() == 4);
  CHECK(d.X.cols() == 2);
  CHECK(d.X(0, 0) == doctest::Approx(0.0));
  CHECK(d.X(3, 0) == doctest::Approx(1.0));
  CHECK(d.X(1, 1) == doctest::Approx(1.0));
  CHECK(d.t(0) == doctest::Approx(0.0));
  CHECK(d.t(3) == doctest::Approx(1.0));
  CHECK(d.descriptor() == ManifoldDescriptor::spd(3));
  CHECK(d.Y[1].value()(0, 1) == doctest::Approx(0.1));
}

TEST_CASE("dti ingestion rejects duplicates and non-PD tensors") {
  TempDir dir;
  std::string dup = dir.file("dup.csv");
  write_text(dup,
             "i,j,d11,d12,d13,d22,d23,d33\n"
             "0,0,1,0,0,1,0,1\n"
             "0,0,1,0,0,1,0,1\n");
  CHECK_THROWS_AS(ingest_dti_grid(dup), DataError);

  std::string neg = dir.file("neg.csv");
  write_text(neg,
             "i,j,d11,d12,d13,d22,d23,d33\n"
             "0,0,1,0,0,1,0,-1\n"
             "0,1,1,0,0,1,0,1\n");
  CHECK_THROWS_WITH_AS(ingest_dti_grid(neg), doctest::Contains(":2"), DataError);
  // the clamp option rescues non-PD rows
  Dataset clamped = ingest_dti_grid(neg, true);
  REQUIRE(clamped.size() == 2);
  CHECK(detail::min_eigenvalue(clamped.Y[0].value()) > 0.0);
}

TEST_CASE("dti round trip is lossless") {
  TempDir dir;
  std::mt19937_64 rng(103);
  std::string path = dir.file("dti.csv");
  std::string content = "i,j,d11,d12,d13,d22,d23,d33\n";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j) {
      Eigen::MatrixXd m = oracle::random_spd(rng, 3, 0.3);
      char buf[256];
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, j, m(0, 0),
                    m(0, 1), m(0, 2), m(1, 1), m(1, 2), m(2, 2));
      content += buf;
    }
  write_text(path, content);
  Dataset d = ingest_dti_grid(path);
  std::string out = dir.file("out.csv");
  write_dti_grid(out, d);
  Dataset d2 = ingest_dti_grid(out);
  REQUIRE(d2.size() == d.size());
  for (int i = 0; i < d.size(); ++i) {
    CHECK((d.Y[i].value() - d2.Y[i].value()).norm() <= 1e-12);
    CHECK((d.X.row(i) - d2.X.row(i)).norm() <= 1e-12);
  }
}

TEST_CASE("generic dataset csv round trips on both manifolds") {
  TempDir dir;
  std::mt19937_64 rng(104);
  for (ManifoldDescriptor desc : {ManifoldDescriptor::sphere(2), ManifoldDescriptor::spd(2)}) {
    Dataset d;
    const int n = 6;
    d.t = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
    d.X.resize(n, 2);
    for (int i = 0; i < n; ++i) {
      d.X(i, 0) = d.t(i);
      d.X(i, 1) = std::sin(d.t(i));
      if (desc.kind == ManifoldKind::Sphere)
        d.Y.push_back(ManifoldPoint::sphere(oracle::random_unit(rng, 3)));
      else
        d.Y.push_back(ManifoldPoint::spd(oracle::random_spd(rng, 2, 0.4)));
    }
    std::string path = dir.file("data.csv");
    write_dataset_csv(path, d);
    Dataset d2 = read_dataset_csv(path, desc);
    REQUIRE(d2.size() == n);
    for (int i = 0; i < n; ++i) {
      CHECK((d.Y[i].value() - d2.Y[i].value()).norm() <= 1e-12);
      CHECK((d.X.row(i) - d2.X.row(i)).norm() <= 1e-12);
      CHECK(d.t(i) == doctest::Approx(d2.t(i)).epsilon(1e-14));
    }
  }
}

TEST_CASE("model save/load preserves predictions") {
  TempDir dir;
  // fit a small sphere model end to end
  ManifoldPoint p = ManifoldPoint::sphere(Eigen::Vector3d(1, 0, 0));
  BasepointCurve bpf =
      BasepointCurve::geodesic(p, TangentVector(p, Eigen::Vector3d(0, 1.0, 0)));
  Frame frame = default_frame(p);
  Dataset d;
  const int n = 10;
  d.t = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  d.X = d.t;
  for (int i = 0; i < n; ++i) {
    Eigen::Vector2d c(0.2 * std::sin(3.0 * d.t(i)), 0.2 * std::cos(2.0 * d.t(i)));
    TangentVector v = bpf.transport_along(0.0, d.t(i), from_coords(c, frame));
    d.Y.push_back(exp_map(bpf.eval(d.t(i)), v));
  }
  Hyperparams init = default_init(d, bpf, 0.0, frame, KernelFamily::DiagRbf);
  FitOptions opts;
  opts.restarts = 2;
  opts.max_iters = 40;
  FittedModel m = fit(d, bpf, 0.0, frame, KernelFamily::DiagRbf, init, opts);

  std::string path = dir.file("model.json");
  save_model(m, path);
  FittedModel loaded = load_model(path);

  for (double t : {0.05, 0.33, 0.77}) {
    Eigen::VectorXd xstar(1);
    xstar << t;
    PosteriorPrediction a = predict(m, xstar, t);
    PosteriorPrediction b = predict(loaded, xstar, t);
    CHECK(distance(a.map_point, b.map_point) <= 1e-9);
    CHECK((a.cov - b.cov).norm() <= 1e-9);
  }

  // document shape: version tag present
  std::ifstream in(path);
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.at("format_version").get<std::string>() == "igpr-model-v1");

  CHECK_THROWS_AS(load_model(dir.file("missing.json")), DataError);
  std::string garbage = dir.file("garbage.json");
  write_text(garbage, "{\"format_version\": \"something-else\"}");
  CHECK_THROWS_AS(load_model(garbage), DataError);
}

TEST_CASE("report json and csv serialization") {
  TempDir dir;
  EvalReport rep;
  rep.total_reps = 2;
  rep.runtime_seconds = 1.5;
  MethodResult a;
  a.method = "igpr";
  a.per_rep = {0.1, 0.2};
  a.mean_rmsge = 0.15;
  a.stderr_rmsge = 0.05;
  MethodResult b;
  b.method = "mgpr";
  b.per_rep = {3.0, std::nan("")};
  b.mean_rmsge = 3.0;
  b.failures = 1;
  rep.methods = {a, b};

  std::string jpath = dir.file("report.json");
  write_report_json(rep, jpath, "{\"n\": 30}");
  std::ifstream in(jpath);
  nlohmann::json doc = nlohmann::json::parse(in);
  CHECK(doc.at("format_version").get<std::string>() == "igpr-report-v1");
  CHECK(doc.at("config").at("n").get<int>() == 30);
  CHECK(doc.at("methods").size() == 2);
  CHECK(doc.at("methods")[1].at("per_rep")[1].is_null());  // NaN -> null

  std::string cpath = dir.file("report.csv");
  write_report_csv(rep, cpath);
  std::ifstream cin(cpath);
  std::string line;
  std::getline(cin, line);
  CHECK(line == "method,rep,rmsge");
  int rows = 0;
  bool saw_na = false;
  while (std::getline(cin, line)) {
    ++rows;
    if (line.find("NA") != std::string::npos) saw_na = true;
  }
  CHECK(rows == 4);
  CHECK(saw_na);
}

TEST_CASE("predictions csv round trips") {
  TempDir dir;
  std::mt19937_64 rng(105);
  Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(4, 0.0, 1.0);
  std::vector<ManifoldPoint> pts;
  for (int i = 0; i < 4; ++i) pts.push_back(ManifoldPoint::spd(oracle::random_spd(rng, 2, 0.4)));
  std::string path = dir.file("preds.csv");
  write_predictions_csv(path, t, pts);
  auto [t2, pts2] = read_predictions_csv(path, ManifoldDescriptor::spd(2));
  REQUIRE(pts2.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK((pts[i].value() - pts2[i].value()).norm() <= 1e-12);
    CHECK(t(i) == doctest::Approx(t2(i)).epsilon(1e-14));
  }
}

TEST_CASE("covariance recovery report files") {
  TempDir dir;
  CovRecoveryReport rep;
  rep.mean_theta = (Eigen::VectorXd(3) << 0.1, 0.2, 0.3).finished();
  rep.true_theta = (Eigen::VectorXd(3) << 0.1, 0.3, 0.5).finished();
  rep.grid = Eigen::VectorXd::LinSpaced(50, 0.0, 1.0);
  for (int d = 0; d < 3; ++d) {
    rep.true_gram.push_back(Eigen::MatrixXd::Identity(50, 50));
    rep.est_gram.push_back(Eigen::MatrixXd::Identity(50, 50));
  }
  write_cov_report(rep, dir.path.string());
  CHECK(fs::exists(dir.path / "theta_summary.csv"));
  CHECK(fs::exists(dir.path / "grid.csv"));
  CHECK(fs::exists(dir.path / "true_gram_1.csv"));
  CHECK(fs::exists(dir.path / "est_gram_3.csv"));
}
