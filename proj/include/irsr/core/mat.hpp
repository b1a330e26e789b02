#pragma once

#include <Eigen/Dense>

namespace irsr {

// row-major so token rows are contiguous and serialize in natural order
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

}  // namespace irsr
