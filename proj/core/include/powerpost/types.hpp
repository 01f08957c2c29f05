#pragma once

#include <Eigen/Dense>

namespace powerpost {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

}  // namespace powerpost
