#pragma once

// Shared seeded initializers. Matrices fill row-major so the draw order is
// independent of Eigen's storage order.

#include <Eigen/Dense>

#include "feddlora/rng.hpp"

namespace feddlora::detail {

inline void fill_gaussian(Eigen::MatrixXd& m, Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = dist(rng);
}

}  // namespace feddlora::detail
