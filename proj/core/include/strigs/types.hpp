#pragma once

#include <Eigen/Dense>

namespace strigs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace strigs
