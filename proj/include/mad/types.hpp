#pragma once

#include <Eigen/Dense>

namespace mad {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace mad
