#pragma once

#include <Eigen/Dense>

namespace matreg {

/// Factorized coefficient matrix B = U V with scalar intercept.
struct FactorModel {
    Eigen::MatrixXd U;  // s x r
    Eigen::MatrixXd V;  // r x t
    double beta = 0.0;

    int rank() const { return static_cast<int>(U.cols()); }
    Eigen::MatrixXd coefficients() const { return U * V; }

    static FactorModel zeros(int s, int t, int r) {
        return FactorModel{Eigen::MatrixXd::Zero(s, r), Eigen::MatrixXd::Zero(r, t), 0.0};
    }
};

}  // namespace matreg
