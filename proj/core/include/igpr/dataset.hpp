#pragma once

#include <Eigen/Dense>
#include <vector>

#include "igpr/manifold.hpp"

namespace igpr {

/// Training data: Euclidean predictors X (n x Q), manifold-valued outputs Y
/// and the index values t used to evaluate the basepoint function.
struct Dataset {
  Eigen::MatrixXd X;
  std::vector<ManifoldPoint> Y;
  Eigen::VectorXd t;

  int size() const { return static_cast<int>(Y.size()); }
  const ManifoldDescriptor& descriptor() const { return Y.front().descriptor(); }
  void validate() const;
  Dataset subset(const std::vector<int>& idx) const;
};

}  // namespace igpr
