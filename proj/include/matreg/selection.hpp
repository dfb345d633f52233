#pragma once

#include <string>
#include <vector>

#include "matreg/solver.hpp"

namespace matreg {

enum class ICKind { AIC, BIC };

struct ICEntry {
    int rank = 0;
    double lambda = 0.0;
    double nll = 0.0;
    double df = 0.0;
    double ic = 0.0;
    bool ok = true;
    std::string error;
};

struct SelectionReport {
    Eigen::MatrixXd B_hat;
    std::vector<int> active_rows;  // rows of B_hat with nonzero l2 norm
    std::vector<int> active_cols;
    int chosen_rank = 0;
    double chosen_lambda = 0.0;
    std::vector<ICEntry> ic_table;
    FitResult fit;
    std::vector<std::string> warnings;
};

struct InitOptions {
    // Paper-literal initialization keeps pure singular vectors; splitting
    // moves sqrt(D_r) into both factors so magnitudes survive.
    bool split_singular_values = false;
    double slope_clamp = 10.0;  // univariate slopes are clamped here when Newton diverges
    int max_newton_iter = 50;
    double newton_tol = 1e-8;
};

/// Entrywise univariate GLM slopes assembled into a matrix whose leading
/// singular vectors seed (U, V); the intercept starts at the null-model link.
FactorModel init_heuristic(const DataSet& data, int rank, const InitOptions& opts = {});

/// Row/column norms of the lambda=0 fit started from `init`, floored at 1e-6.
AdaptiveWeights adaptive_weights(const DataSet& data, int rank, const FactorModel& init,
                                 const SolverConfig& config);

double information_criterion(double nll, double df, int n, ICKind kind);

/// Free parameters of a rank-r matrix supported on the active a x b
/// submatrix, plus the intercept. The effective rank is capped at min(a, b).
double model_df(int rank, int active_rows, int active_cols);

/// Decreasing log-spaced grid from the smallest lambda whose first BCPD
/// iteration zeroes every group of `init` down to that value times 1e-3.
std::vector<double> lambda_grid(const DataSet& data, const AdaptiveWeights& weights,
                                const FactorModel& init, int grid_size = 50,
                                std::string* warning = nullptr);

struct SelectOptions {
    std::vector<int> ranks;
    ICKind ic = ICKind::AIC;
    SolverConfig solver;
    InitOptions init;
    int lambda_grid_size = 50;
    std::vector<double> lambda_override;  // explicit grid; empty = automatic
};

/// Full pipeline: per rank, initialize, compute adaptive weights, sweep the
/// lambda path warm-started high-to-low, and keep the (rank, lambda) with the
/// smallest IC. Ties prefer the smaller rank, then the larger lambda.
SelectionReport select(const DataSet& data, const SelectOptions& opts);

std::vector<int> active_row_set(const Eigen::MatrixXd& B);
std::vector<int> active_col_set(const Eigen::MatrixXd& B);

}  // namespace matreg
