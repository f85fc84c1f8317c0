#pragma once

#include <Eigen/Dense>

namespace zerodisp {

// Uniform cell-centred grid on (0, R_max]: r_i = (i - 1/2) h, w_i = h.
// The weights integrate functions of r on the reduced line; the 3D measure
// of cell i is 4 pi r_i^2 w_i.
struct RadialGrid {
    Eigen::VectorXd r;
    Eigen::VectorXd w;
    double r_max = 0.0;

    static RadialGrid uniform(int n, double r_max);

    int size() const { return static_cast<int>(r.size()); }
    double h() const { return r_max / size(); }
    // Number of leading nodes with r_i <= radius.
    int count_within(double radius) const;
};

}  // namespace zerodisp
