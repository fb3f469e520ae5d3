#pragma once

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace microloc {

using cplx = std::complex<double>;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Vec4c = Eigen::Vector4cd;
using Mat4c = Eigen::Matrix4cd;
using VecXc = Eigen::VectorXcd;
using MatXc = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace microloc
