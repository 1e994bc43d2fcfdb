#pragma once

#include "qcoop/numerics.hpp"

namespace qcoop {

// Shared agent dynamics x(t+1) = A x(t) + B u(t), y(t) = C x(t).
struct LtiPlant {
    Matrix a;
    Matrix b;
    Matrix c;

    Eigen::Index n() const { return a.rows(); }
    Eigen::Index m() const { return b.cols(); }
    Eigen::Index p() const { return c.rows(); }
};

// Throws ConfigError on inconsistent dimensions or non-finite entries.
void validate(const LtiPlant& plant);

}  // namespace qcoop
