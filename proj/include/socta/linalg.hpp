#pragma once

#include <Eigen/Dense>

namespace socta {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

}  // namespace socta
