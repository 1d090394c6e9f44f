#include "igpr/io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

namespace igpr {

namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    size_t a = field.find_first_not_of(" \t\r");
    size_t b = field.find_last_not_of(" \t\r");
    fields.push_back(a == std::string::npos ? "" : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

double parse_number(const std::string& s, const std::string& path, int line_no,
                    const std::string& column) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw DataError(path + ":" + std::to_string(line_no) + ": cannot parse '" + s +
                    "' in column " + column);
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  return out;
}

void expect_header(std::ifstream& in, const std::string& path, const std::string& expected) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected)
    throw DataError(path + ":1: expected header '" + expected + "', got '" + line + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Symmetric matrix <-> upper-triangular row-major flat vector (unscaled).
Eigen::VectorXd sym_to_flat(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  Eigen::VectorXd v(d * (d + 1) / 2);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) v(k++) = m(i, j);
  return v;
}

Eigen::MatrixXd flat_to_sym(const Eigen::VectorXd& v, int d) {
  if (v.size() != d * (d + 1) / 2) throw DataError("wrong length for symmetric matrix");
  Eigen::MatrixXd m(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) m(i, j) = m(j, i) = v(k++);
  return m;
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd json_to_vec(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v(static_cast<int>(i)) = a[i].get<double>();
  return v;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd json_to_mat(const json& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<size_t>(m.cols()))
      throw DataError("ragged matrix in document");
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j].get<double>();
  }
  return m;
}

// Tangent values share the point representation: sphere = ambient vector,
// SPD = upper-triangular flat of the symmetric matrix.
Eigen::VectorXd tangent_to_numbers(const ManifoldDescriptor& desc, const Eigen::MatrixXd& value) {
  if (desc.kind == ManifoldKind::Sphere) return value.col(0);
  return sym_to_flat(value);
}

Eigen::MatrixXd tangent_from_numbers(const ManifoldDescriptor& desc, const Eigen::VectorXd& v) {
  if (desc.kind == ManifoldKind::Sphere) {
    if (v.size() != desc.ambient_dim) throw DataError("wrong length for sphere vector");
    return v;
  }
  return flat_to_sym(v, desc.ambient_dim);
}

json descriptor_to_json(const ManifoldDescriptor& desc) {
  return {{"kind", desc.kind == ManifoldKind::Sphere ? "sphere" : "spd"},
          {"ambient_dim", desc.ambient_dim}};
}

ManifoldDescriptor descriptor_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  int dim = j.at("ambient_dim").get<int>();
  if (kind == "sphere") return ManifoldDescriptor{ManifoldKind::Sphere, dim};
  if (kind == "spd") return ManifoldDescriptor{ManifoldKind::Spd, dim};
  throw DataError("unknown manifold kind '" + kind + "'");
}

json curve_to_json(const BasepointCurve& curve, const ManifoldDescriptor& desc) {
  json j;
  if (curve.kind() == BasepointCurve::Kind::Geodesic) {
    j["kind"] = "geodesic";
    j["anchor"] = vec_to_json(point_to_numbers(curve.anchor()));
    j["velocity"] = vec_to_json(tangent_to_numbers(desc, curve.velocity().value()));
  } else {
    j["kind"] = "piecewise";
    j["grid_t"] = curve.grid_t();
    json pts = json::array();
    for (const auto& p : curve.grid_points()) pts.push_back(vec_to_json(point_to_numbers(p)));
    j["grid_points"] = pts;
  }
  return j;
}

BasepointCurve curve_from_json(const json& j, const ManifoldDescriptor& desc) {
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "geodesic") {
    ManifoldPoint anchor = point_from_numbers(desc, json_to_vec(j.at("anchor")));
    Eigen::MatrixXd vel = tangent_from_numbers(desc, json_to_vec(j.at("velocity")));
    return BasepointCurve::geodesic(anchor, TangentVector(anchor, vel));
  }
  if (kind == "piecewise") {
    std::vector<double> ts = j.at("grid_t").get<std::vector<double>>();
    std::vector<ManifoldPoint> ps;
    for (const auto& p : j.at("grid_points"))
      ps.push_back(point_from_numbers(desc, json_to_vec(p)));
    return BasepointCurve::piecewise(std::move(ts), std::move(ps));
  }
  throw DataError("unknown basepoint curve kind '" + kind + "'");
}

json frame_to_json(const Frame& f, const ManifoldDescriptor& desc) {
  json j;
  j["base"] = vec_to_json(point_to_numbers(f.base()));
  json basis = json::array();
  for (const auto& b : f.basis()) basis.push_back(vec_to_json(tangent_to_numbers(desc, b)));
  j["basis"] = basis;
  return j;
}

Frame frame_from_json(const json& j, const ManifoldDescriptor& desc) {
  ManifoldPoint base = point_from_numbers(desc, json_to_vec(j.at("base")));
  std::vector<Eigen::MatrixXd> basis;
  for (const auto& b : j.at("basis"))
    basis.push_back(tangent_from_numbers(desc, json_to_vec(b)));
  return Frame(std::move(base), std::move(basis));
}

}  // namespace

int point_number_count(const ManifoldDescriptor& desc) {
  return desc.kind == ManifoldKind::Sphere ? desc.ambient_dim
                                           : desc.ambient_dim * (desc.ambient_dim + 1) / 2;
}

Eigen::VectorXd point_to_numbers(const ManifoldPoint& p) {
  if (p.descriptor().kind == ManifoldKind::Sphere) return p.vec();
  return sym_to_flat(p.value());
}

ManifoldPoint point_from_numbers(const ManifoldDescriptor& desc, const Eigen::VectorXd& v) {
  if (v.size() != point_number_count(desc))
    throw DataError("point has " + std::to_string(v.size()) + " numbers, expected " +
                    std::to_string(point_number_count(desc)));
  if (desc.kind == ManifoldKind::Sphere) return ManifoldPoint(desc, Eigen::MatrixXd(v));
  return ManifoldPoint(desc, flat_to_sym(v, desc.ambient_dim));
}

Dataset ingest_flight_csv(const std::string& path, bool presmooth, double bandwidth) {
  std::ifstream in = open_input(path);
  expect_header(in, path, "t,lat_deg,lon_deg");

  std::vector<double> ts, lats, lons;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                      std::to_string(fields.size()));
    double t = parse_number(fields[0], path, line_no, "t");
    double lat = parse_number(fields[1], path, line_no, "lat_deg");
    double lon = parse_number(fields[2], path, line_no, "lon_deg");
    if (std::abs(lat) > 90.0)
      throw DataError(path + ":" + std::to_string(line_no) + ": latitude " + fields[1] +
                      " outside [-90, 90]");
    ts.push_back(t);
    lats.push_back(lat);
    lons.push_back(lon);
  }
  if (ts.size() < 2) throw DataError(path + ": need at least two data rows");

  double t0 = *std::min_element(ts.begin(), ts.end());
  double t1 = *std::max_element(ts.begin(), ts.end());
  if (t1 <= t0) throw DataError(path + ": time column is constant, cannot rescale to [0,1]");
  for (auto& t : ts) t = (t - t0) / (t1 - t0);

  if (presmooth) {
    double h = bandwidth > 0 ? bandwidth : default_bandwidth(ts);
    std::vector<std::pair<double, double>> lat_series, lon_series;
    for (size_t i = 0; i < ts.size(); ++i) {
      lat_series.emplace_back(ts[i], lats[i]);
      lon_series.emplace_back(ts[i], lons[i]);
    }
    auto slat = local_linear_smooth(lat_series, h);
    auto slon = local_linear_smooth(lon_series, h);
    for (size_t i = 0; i < ts.size(); ++i) {
      lats[i] = std::clamp(slat[i].second, -90.0, 90.0);
      lons[i] = slon[i].second;
    }
  }

  Dataset data;
  const int n = static_cast<int>(ts.size());
  data.t.resize(n);
  data.X.resize(n, 1);
  data.Y.reserve(n);
  ManifoldDescriptor desc = ManifoldDescriptor::sphere(2);
  for (int i = 0; i < n; ++i) {
    data.t(i) = ts[i];
    data.X(i, 0) = ts[i];
    double phi = lats[i] * kPi / 180.0;
    double lam = lons[i] * kPi / 180.0;
    Eigen::VectorXd v(3);
    v << std::cos(phi) * std::cos(lam), std::cos(phi) * std::sin(lam), std::sin(phi);
    data.Y.push_back(ManifoldPoint(desc, Eigen::MatrixXd(v)));
  }
  data.validate();
  return data;
}

void write_flight_csv(const std::string& path, const Dataset& data) {
  if (data.descriptor().kind != ManifoldKind::Sphere || data.descriptor().ambient_dim != 3)
    throw DataError("flight CSV output requires points on the unit 2-sphere");
  std::ofstream out = open_output(path);
  out << "t,lat_deg,lon_deg\n";
  for (int i = 0; i < data.size(); ++i) {
    Eigen::VectorXd v = data.Y[i].vec();
    double lat = std::asin(std::clamp(v(2), -1.0, 1.0)) * 180.0 / kPi;
    double lon = std::atan2(v(1), v(0)) * 180.0 / kPi;
    out << fmt(data.t(i)) << ',' << fmt(lat) << ',' << fmt(lon) << '\n';
  }
}

Dataset ingest_dti_grid(const std::string& path, bool clamp_spd) {
  std::ifstream in = open_input(path);
  expect_header(in, path, "i,j,d11,d12,d13,d22,d23,d33");

  struct Row {
    int i, j;
    Eigen::MatrixXd tensor;
  };
  std::vector<Row> rows;
  std::map<std::pair<int, int>, int> seen;
  std::string line;
  int line_no = 1;
  ManifoldDescriptor desc = ManifoldDescriptor::spd(3);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 8)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 8 fields, got " +
                      std::to_string(fields.size()));
    int gi = static_cast<int>(parse_number(fields[0], path, line_no, "i"));
    int gj = static_cast<int>(parse_number(fields[1], path, line_no, "j"));
    if (!seen.emplace(std::make_pair(gi, gj), line_no).second)
      throw DataError(path + ":" + std::to_string(line_no) + ": duplicate grid index (" +
                      std::to_string(gi) + "," + std::to_string(gj) + ")");
    Eigen::VectorXd flat(6);
    static const char* cols[] = {"d11", "d12", "d13", "d22", "d23", "d33"};
    for (int c = 0; c < 6; ++c) flat(c) = parse_number(fields[c + 2], path, line_no, cols[c]);
    Eigen::MatrixXd tensor = flat_to_sym(flat, 3);
    if (detail::min_eigenvalue(tensor) <= 0) {
      if (!clamp_spd)
        throw DataError(path + ":" + std::to_string(line_no) + ": tensor at (" +
                        std::to_string(gi) + "," + std::to_string(gj) +
                        ") is not positive definite (use the clamp option to repair)");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(tensor);
      tensor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(1e-8).asDiagonal() *
               eig.eigenvectors().transpose();
      tensor = 0.5 * (tensor + tensor.transpose());
    }
    rows.push_back({gi, gj, std::move(tensor)});
  }
  if (rows.size() < 2) throw DataError(path + ": need at least two data rows");

  int imin = rows[0].i, imax = rows[0].i, jmin = rows[0].j, jmax = rows[0].j;
  for (const auto& r : rows) {
    imin = std::min(imin, r.i);
    imax = std::max(imax, r.i);
    jmin = std::min(jmin, r.j);
    jmax = std::max(jmax, r.j);
  }
  auto norm = [](int v, int lo, int hi) {
    return hi > lo ? static_cast<double>(v - lo) / (hi - lo) : 0.0;
  };

  Dataset data;
  const int n = static_cast<int>(rows.size());
  data.X.resize(n, 2);
  data.t.resize(n);
  data.Y.reserve(n);
  for (int k = 0; k < n; ++k) {
    data.X(k, 0) = norm(rows[k].i, imin, imax);
    data.X(k, 1) = norm(rows[k].j, jmin, jmax);
    data.t(k) = data.X(k, 0);
    data.Y.push_back(ManifoldPoint(desc, rows[k].tensor));
  }
  data.validate();
  return data;
}

void write_dti_grid(const std::string& path, const Dataset& data) {
  if (data.descriptor().kind != ManifoldKind::Spd || data.descriptor().ambient_dim != 3)
    throw DataError("DTI CSV output requires 3x3 SPD points");
  if (data.X.cols() != 2) throw DataError("DTI CSV output requires two predictor columns");

  // recover integer grid indices as ranks of the distinct normalized values
  auto ranks = [&](int col) {
    std::vector<double> vals;
    for (int i = 0; i < data.size(); ++i) vals.push_back(data.X(i, col));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::vector<int> out(data.size());
    for (int i = 0; i < data.size(); ++i)
      out[i] = static_cast<int>(std::lower_bound(vals.begin(), vals.end(), data.X(i, col)) -
                                vals.begin());
    return out;
  };
  std::vector<int> gi = ranks(0), gj = ranks(1);

  std::ofstream out = open_output(path);
  out << "i,j,d11,d12,d13,d22,d23,d33\n";
  for (int k = 0; k < data.size(); ++k) {
    Eigen::VectorXd flat = sym_to_flat(data.Y[k].value());
    out << gi[k] << ',' << gj[k];
    for (int c = 0; c < 6; ++c) out << ',' << fmt(flat(c));
    out << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path, const ManifoldDescriptor& desc) {
  std::ifstream in = open_input(path);
  std::string header;
  if (!std::getline(in, header)) throw DataError(path + ": empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  auto head = split_csv_line(header);
  const int k = point_number_count(desc);
  if (static_cast<int>(head.size()) < 1 + k || head[0] != "t")
    throw DataError(path + ":1: expected header t,x1..xQ,y1..y" + std::to_string(k));
  const int q = static_cast<int>(head.size()) - 1 - k;
  if (q < 1) throw DataError(path + ":1: no predictor columns in header");

  std::vector<Eigen::VectorXd> xs, ys;
  std::vector<double> ts;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != 1 + q + k)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(1 + q + k) + " fields, got " +
                      std::to_string(fields.size()));
    ts.push_back(parse_number(fields[0], path, line_no, "t"));
    Eigen::VectorXd x(q), y(k);
    for (int c = 0; c < q; ++c) x(c) = parse_number(fields[1 + c], path, line_no, head[1 + c]);
    for (int c = 0; c < k; ++c)
      y(c) = parse_number(fields[1 + q + c], path, line_no, head[1 + q + c]);
    xs.push_back(x);
    ys.push_back(y);
  }
  if (ts.empty()) throw DataError(path + ": no data rows");

  Dataset data;
  const int n = static_cast<int>(ts.size());
  data.t.resize(n);
  data.X.resize(n, q);
  data.Y.reserve(n);
  for (int i = 0; i < n; ++i) {
    data.t(i) = ts[i];
    data.X.row(i) = xs[i].transpose();
    try {
      data.Y.push_back(point_from_numbers(desc, ys[i]));
    } catch (const Error& e) {
      throw DataError(path + ":" + std::to_string(i + 2) + ": " + e.what());
    }
  }
  data.validate();
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out = open_output(path);
  const int q = static_cast<int>(data.X.cols());
  const int k = point_number_count(data.descriptor());
  out << "t";
  for (int c = 0; c < q; ++c) out << ",x" << c + 1;
  for (int c = 0; c < k; ++c) out << ",y" << c + 1;
  out << '\n';
  for (int i = 0; i < data.size(); ++i) {
    out << fmt(data.t(i));
    for (int c = 0; c < q; ++c) out << ',' << fmt(data.X(i, c));
    Eigen::VectorXd y = point_to_numbers(data.Y[i]);
    for (int c = 0; c < k; ++c) out << ',' << fmt(y(c));
    out << '\n';
  }
}

void save_model(const FittedModel& model, const std::string& path) {
  const ManifoldDescriptor& desc = model.data.descriptor();
  json j;
  j["format_version"] = "igpr-model-v1";
  j["manifold"] = descriptor_to_json(desc);
  j["bpf"] = curve_to_json(model.bpf, desc);
  j["anchor_t"] = model.anchor_t;
  j["frame"] = frame_to_json(model.frame, desc);
  j["frame_rot"] = mat_to_json(model.frame_rot);
  j["transport"] = model.transport == SpdTransport::Paper ? "paper" : "levi_civita";

  json cov;
  cov["family"] = model.cov.kernel.family == KernelFamily::Rbf ? "rbf" : "diag_rbf";
  cov["theta"] = vec_to_json(model.cov.kernel.theta);
  cov["amplitude"] = model.cov.kernel.amplitude;
  if (model.cov.coreg) cov["B"] = mat_to_json(model.cov.coreg->matrix());
  cov["noise_var"] = model.cov.noise_var;
  cov["out_dim"] = model.cov.out_dim;
  j["covariance"] = cov;

  j["residuals"] = vec_to_json(model.residuals);

  json data;
  data["t"] = vec_to_json(model.data.t);
  data["X"] = mat_to_json(model.data.X);
  json ys = json::array();
  for (const auto& y : model.data.Y) ys.push_back(vec_to_json(point_to_numbers(y)));
  data["Y"] = ys;
  j["data"] = data;

  json opts;
  opts["include_noise"] = model.opts.include_noise;
  opts["rebase_posterior"] = model.opts.rebase_posterior;
  opts["noise_floor"] = model.opts.noise_floor;
  j["options"] = opts;

  open_output(path) << j.dump(2) << '\n';
}

FittedModel load_model(const std::string& path) {
  json j;
  try {
    open_input(path) >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  try {
    if (j.at("format_version").get<std::string>() != "igpr-model-v1")
      throw DataError(path + ": unsupported model format version");
    ManifoldDescriptor desc = descriptor_from_json(j.at("manifold"));
    const int d = desc.tangent_dim();

    FittedModel m{Dataset{},
                  curve_from_json(j.at("bpf"), desc),
                  j.at("anchor_t").get<double>(),
                  frame_from_json(j.at("frame"), desc),
                  json_to_mat(j.at("frame_rot")),
                  CovarianceModel{},
                  json_to_vec(j.at("residuals")),
                  {},
                  {},
                  j.at("transport").get<std::string>() == "paper" ? SpdTransport::Paper
                                                                  : SpdTransport::LeviCivita,
                  FitOptions{},
                  OptimizerTrace{}};

    const json& cov = j.at("covariance");
    std::string family = cov.at("family").get<std::string>();
    Eigen::VectorXd theta = json_to_vec(cov.at("theta"));
    double amp = cov.at("amplitude").get<double>();
    if (family == "rbf") {
      m.cov.kernel = KernelSpec::rbf(theta(0), amp);
      m.cov.coreg = Coregionalization::from_matrix(json_to_mat(cov.at("B")));
    } else if (family == "diag_rbf") {
      m.cov.kernel = KernelSpec::diag_rbf(theta, amp);
    } else {
      throw DataError(path + ": unknown kernel family '" + family + "'");
    }
    m.cov.noise_var = cov.at("noise_var").get<double>();
    m.cov.out_dim = cov.at("out_dim").get<int>();
    if (m.cov.out_dim != d) throw DataError(path + ": out_dim does not match the manifold");

    const json& data = j.at("data");
    m.data.t = json_to_vec(data.at("t"));
    m.data.X = json_to_mat(data.at("X"));
    for (const auto& y : data.at("Y"))
      m.data.Y.push_back(point_from_numbers(desc, json_to_vec(y)));
    m.data.validate();

    const json& opts = j.at("options");
    m.opts.include_noise = opts.at("include_noise").get<bool>();
    m.opts.rebase_posterior = opts.at("rebase_posterior").get<bool>();
    m.opts.noise_floor = opts.at("noise_floor").get<double>();
    m.opts.transport = m.transport;

    if (m.residuals.size() != m.data.size() * d)
      throw DataError(path + ": residual vector length does not match the data");

    // rebuild the factorization cache from the stored pieces
    Eigen::MatrixXd k = assemble_train_cov(m.cov, m.data.X);
    bool rotated =
        (m.frame_rot - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-14;
    if (rotated) {
      const int n = m.data.size();
      Eigen::MatrixXd conj(k.rows(), k.cols());
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          conj.block(a * d, b * d, d, d) =
              m.frame_rot.transpose() * k.block(a * d, b * d, d, d) * m.frame_rot;
      k = conj;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() != Eigen::Success) {
      k += 1e-10 * Eigen::MatrixXd::Identity(k.rows(), k.cols());
      llt.compute(k);
      if (llt.info() != Eigen::Success)
        throw ConditioningError("stored covariance is not positive definite",
                                detail::min_eigenvalue(k));
    }
    m.chol_L = llt.matrixL();
    m.alpha = llt.solve(m.residuals);
    return m;
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_report_json(const EvalReport& report, const std::string& path,
                       const std::string& config_echo) {
  json j;
  j["format_version"] = report.format_version;
  j["total_reps"] = report.total_reps;
  try {
    j["config"] = json::parse(config_echo);
  } catch (const json::exception&) {
    j["config"] = config_echo;
  }
  json methods = json::array();
  for (const auto& m : report.methods) {
    json mj;
    mj["method"] = m.method;
    mj["mean_rmsge"] = m.mean_rmsge;
    mj["stderr_rmsge"] = m.stderr_rmsge;
    mj["failures"] = m.failures;
    json per = json::array();
    for (double v : m.per_rep) {
      if (std::isfinite(v))
        per.push_back(v);
      else
        per.push_back(nullptr);
    }
    mj["per_rep"] = per;
    methods.push_back(mj);
  }
  j["methods"] = methods;
  j["runtime_seconds"] = report.runtime_seconds;
  open_output(path) << j.dump(2) << '\n';
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "method,rep,rmsge\n";
  for (const auto& m : report.methods)
    for (size_t r = 0; r < m.per_rep.size(); ++r) {
      out << m.method << ',' << r << ',';
      if (std::isfinite(m.per_rep[r]))
        out << fmt(m.per_rep[r]);
      else
        out << "NA";
      out << '\n';
    }
}

void write_cov_report(const CovRecoveryReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out = open_output(dir + "/theta_summary.csv");
    out << "coordinate,theta_true,theta_est\n";
    for (int d = 0; d < report.true_theta.size(); ++d)
      out << d + 1 << ',' << fmt(report.true_theta(d)) << ',' << fmt(report.mean_theta(d))
          << '\n';
  }
  {
    std::ofstream out = open_output(dir + "/grid.csv");
    out << "t\n";
    for (int i = 0; i < report.grid.size(); ++i) out << fmt(report.grid(i)) << '\n';
  }
  auto dump_gram = [&](const std::string& name, const Eigen::MatrixXd& g) {
    std::ofstream out = open_output(name);
    for (int i = 0; i < g.rows(); ++i) {
      for (int j = 0; j < g.cols(); ++j) out << (j ? "," : "") << fmt(g(i, j));
      out << '\n';
    }
  };
  for (size_t d = 0; d < report.true_gram.size(); ++d) {
    dump_gram(dir + "/true_gram_" + std::to_string(d + 1) + ".csv", report.true_gram[d]);
    dump_gram(dir + "/est_gram_" + std::to_string(d + 1) + ".csv", report.est_gram[d]);
  }
}

void write_predictions_csv(const std::string& path, const Eigen::VectorXd& t,
                           const std::vector<ManifoldPoint>& points) {
  if (t.size() != static_cast<int>(points.size()))
    throw DataError("one t per prediction required");
  if (points.empty()) throw DataError("no predictions to write");
  std::ofstream out = open_output(path);
  const int k = point_number_count(points.front().descriptor());
  out << "t";
  for (int c = 0; c < k; ++c) out << ",y" << c + 1;
  out << '\n';
  for (size_t i = 0; i < points.size(); ++i) {
    out << fmt(t(static_cast<int>(i)));
    Eigen::VectorXd y = point_to_numbers(points[i]);
    for (int c = 0; c < k; ++c) out << ',' << fmt(y(c));
    out << '\n';
  }
}

std::pair<Eigen::VectorXd, std::vector<ManifoldPoint>> read_predictions_csv(
    const std::string& path, const ManifoldDescriptor& desc) {
  std::ifstream in = open_input(path);
  std::string header;
  if (!std::getline(in, header)) throw DataError(path + ": empty file");
  const int k = point_number_count(desc);

  std::vector<double> ts;
  std::vector<ManifoldPoint> ys;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != 1 + k)
      throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(1 + k) + " fields, got " + std::to_string(fields.size()));
    ts.push_back(parse_number(fields[0], path, line_no, "t"));
    Eigen::VectorXd y(k);
    for (int c = 0; c < k; ++c)
      y(c) = parse_number(fields[1 + c], path, line_no, "y" + std::to_string(c + 1));
    try {
      ys.push_back(point_from_numbers(desc, y));
    } catch (const Error& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (ts.empty()) throw DataError(path + ": no data rows");
  Eigen::VectorXd tv(static_cast<int>(ts.size()));
  for (size_t i = 0; i < ts.size(); ++i) tv(static_cast<int>(i)) = ts[i];
  return {tv, ys};
}

}  // namespace igpr
