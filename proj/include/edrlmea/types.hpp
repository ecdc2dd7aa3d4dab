#pragma once

#include <Eigen/Core>

namespace edrlmea {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace edrlmea
