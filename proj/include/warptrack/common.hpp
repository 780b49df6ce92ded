#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace warptrack {

using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Mat = Eigen::MatrixXd;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// 4 ordered region corners as columns: UL, UR, LR, LL.
using Corners = Eigen::Matrix<double, 2, 4>;

/// Per-point image gradient, one (dI/dx, dI/dy) row per grid point.
using PixGrad = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Per-point symmetric spatial Hessian stored as rows (Ixx, Ixy, Iyy).
using PixHess = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Per-point S x S pixel Hessian tensor, flattened one column per point
/// (column k = vec of the S x S matrix for point k).
using PixHessTensor = Eigen::MatrixXd;

class CallOrderError : public std::logic_error {
public:
  explicit CallOrderError(const std::string& what) : std::logic_error(what) {}
};

class DegeneratePatchError : public std::runtime_error {
public:
  explicit DegeneratePatchError(const std::string& what)
      : std::runtime_error(what) {}
};

class SingularWarpError : public std::runtime_error {
public:
  explicit SingularWarpError(const std::string& what)
      : std::runtime_error(what) {}
};

class NoConsensusError : public std::runtime_error {
public:
  explicit NoConsensusError(const std::string& what)
      : std::runtime_error(what) {}
};

class DegenerateParameterizationError : public std::runtime_error {
public:
  explicit DegenerateParameterizationError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace warptrack
