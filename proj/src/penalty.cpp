#include "matreg/penalty.hpp"

#include <cmath>

namespace matreg {

void AdaptiveWeights::validate(int s, int t) const {
    if (row_norms.size() != s || col_norms.size() != t)
        throw DimensionError("adaptive weight lengths do not match problem dimensions");
    if (!(floor > 0.0)) throw ValidationError("weight floor must be positive");
    if ((row_norms.array() < floor).any() || (col_norms.array() < floor).any())
        throw ValidationError("adaptive weights must be at or above the floor");
}

PenaltySpec PenaltySpec::for_rank(double lambda, int rank) {
    if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
    if (rank < 1) throw ValidationError("rank must be >= 1");
    return PenaltySpec{lambda, std::sqrt(static_cast<double>(rank))};
}

double penalty_value(const Eigen::MatrixXd& U, const Eigen::MatrixXd& V,
                     const AdaptiveWeights& w, const PenaltySpec& p) {
    if (U.rows() != w.row_norms.size() || V.cols() != w.col_norms.size())
        throw DimensionError("factor shapes do not match adaptive weights");
    double sum = 0.0;
    for (int j = 0; j < U.rows(); ++j) sum += U.row(j).norm() / w.row_norms[j];
    for (int k = 0; k < V.cols(); ++k) sum += V.col(k).norm() / w.col_norms[k];
    return p.lambda * p.gamma * sum;
}

Eigen::MatrixXd row_soft_threshold(const Eigen::MatrixXd& M,
                                   const Eigen::VectorXd& thresholds, double gamma) {
    if (thresholds.size() != M.rows())
        throw DimensionError("one threshold per row required");
    if ((thresholds.array() < 0.0).any())
        throw ValidationError("thresholds must be nonnegative");
    Eigen::MatrixXd out(M.rows(), M.cols());
    for (int j = 0; j < M.rows(); ++j) {
        const double cut = thresholds[j] * gamma;
        const double norm = M.row(j).norm();
        if (norm > cut) {
            out.row(j) = M.row(j) * (1.0 - cut / norm);
        } else {
            out.row(j).setZero();
        }
    }
    return out;
}

Eigen::MatrixXd col_soft_threshold(const Eigen::MatrixXd& M,
                                   const Eigen::VectorXd& thresholds, double gamma) {
    if (thresholds.size() != M.cols())
        throw DimensionError("one threshold per column required");
    if ((thresholds.array() < 0.0).any())
        throw ValidationError("thresholds must be nonnegative");
    Eigen::MatrixXd out(M.rows(), M.cols());
    for (int k = 0; k < M.cols(); ++k) {
        const double cut = thresholds[k] * gamma;
        const double norm = M.col(k).norm();
        if (norm > cut) {
            out.col(k) = M.col(k) * (1.0 - cut / norm);
        } else {
            out.col(k).setZero();
        }
    }
    return out;
}

}  // namespace matreg
