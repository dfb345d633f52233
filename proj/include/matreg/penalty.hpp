#pragma once

#include <Eigen/Dense>

#include "matreg/errors.hpp"

namespace matreg {

/// Group norms from the unpenalized fit, used to scale the penalty. Norms
/// below `floor` are clamped so thresholds stay finite while near-null groups
/// remain heavily penalized.
struct AdaptiveWeights {
    Eigen::VectorXd row_norms;  // s entries, ||u_hat_j||
    Eigen::VectorXd col_norms;  // t entries, ||v_hat_k||
    double floor = 1e-6;

    static AdaptiveWeights ones(int s, int t) {
        return AdaptiveWeights{Eigen::VectorXd::Ones(s), Eigen::VectorXd::Ones(t), 1e-6};
    }
    void validate(int s, int t) const;
};

struct PenaltySpec {
    double lambda = 0.0;
    double gamma = 1.0;  // sqrt(rank), rescales the penalty for group length

    static PenaltySpec for_rank(double lambda, int rank);
};

/// lambda * gamma * (sum_j ||u_j|| / ||u_hat_j|| + sum_k ||v_k|| / ||v_hat_k||)
/// with u_j the rows of U and v_k the columns of V.
double penalty_value(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                     const AdaptiveWeights& w, const PenaltySpec& p);

/// Row j of the result is u_j (1 - tau_j gamma / ||u_j||) when
/// ||u_j|| > tau_j gamma, and exactly the zero vector otherwise.
Eigen::MatrixXd row_soft_threshold(const Eigen::MatrixXd& M,
                                   const Eigen::VectorXd& thresholds, double gamma);

/// Column-wise analogue of row_soft_threshold.
Eigen::MatrixXd col_soft_threshold(const Eigen::MatrixXd& M,
                                   const Eigen::VectorXd& thresholds, double gamma);

}  // namespace matreg
