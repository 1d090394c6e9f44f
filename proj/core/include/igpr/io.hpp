#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "igpr/dataset.hpp"
#include "igpr/gp.hpp"
#include "igpr/harness.hpp"

namespace igpr {

/// Flat numeric representation of a point (see FORMATS.md): sphere points are
/// their ambient coordinates, SPD points their upper-triangular entries in
/// row-major order (d(d+1)/2 numbers).
Eigen::VectorXd point_to_numbers(const ManifoldPoint& p);
ManifoldPoint point_from_numbers(const ManifoldDescriptor& desc, const Eigen::VectorXd& v);
int point_number_count(const ManifoldDescriptor& desc);

/// Flight trajectory CSV with header `t,lat_deg,lon_deg`. t is rescaled to
/// [0,1]; lat/lon (degrees) map to (cos phi cos lambda, cos phi sin lambda,
/// sin phi). When presmooth is set, lat and lon are run through the Gaussian
/// local-linear smoother first (bandwidth <= 0 selects the reference rule).
Dataset ingest_flight_csv(const std::string& path, bool presmooth = false,
                          double bandwidth = 0.0);
void write_flight_csv(const std::string& path, const Dataset& data);

/// DTI tensor grid CSV with header `i,j,d11,d12,d13,d22,d23,d33`. Predictors
/// are the (i,j) grid indices normalized to [0,1]^2; t is the normalized i
/// index. Non-PD tensors are row errors unless clamp_spd is set (eigenvalues
/// clamped at 1e-8).
Dataset ingest_dti_grid(const std::string& path, bool clamp_spd = false);
void write_dti_grid(const std::string& path, const Dataset& data);

/// Generic dataset CSV: header `t,x1..xQ,y1..yK` with the point columns in
/// the flat numeric representation above.
Dataset read_dataset_csv(const std::string& path, const ManifoldDescriptor& desc);
void write_dataset_csv(const std::string& path, const Dataset& data);

/// Model document ("igpr-model-v1", JSON shape): manifold descriptor,
/// basepoint curve, frame, hyperparameters, residuals and the training data.
/// load_model re-derives the Cholesky cache from the stored pieces.
void save_model(const FittedModel& model, const std::string& path);
FittedModel load_model(const std::string& path);

/// Evaluation report ("igpr-report-v1", JSON shape) plus a flat per-rep CSV
/// (`method,rep,rmsge`) for external plotting. config_echo is embedded
/// verbatim (pass "{}" when there is none).
void write_report_json(const EvalReport& report, const std::string& path,
                       const std::string& config_echo = "{}");
void write_report_csv(const EvalReport& report, const std::string& path);

/// Plot-ready covariance-recovery tables: one CSV per coordinate pair of
/// true/estimated Gram matrices plus a summary of mean theta estimates.
void write_cov_report(const CovRecoveryReport& report, const std::string& dir);

/// Predictions CSV: header `t,y1..yK` (flat point representation).
void write_predictions_csv(const std::string& path, const Eigen::VectorXd& t,
                           const std::vector<ManifoldPoint>& points);
std::pair<Eigen::VectorXd, std::vector<ManifoldPoint>> read_predictions_csv(
    const std::string& path, const ManifoldDescriptor& desc);

}  // namespace igpr
