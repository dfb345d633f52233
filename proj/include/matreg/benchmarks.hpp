#pragma once

#include "matreg/selection.hpp"

namespace matreg {

enum class GroupAxis { Rows, Cols };

/// Full-coefficient GLM g(mu) = beta + <C, X> with an adaptive group penalty
/// on rows or columns of C. Optional keep-sets restrict the fit to a
/// submatrix; coefficients outside them are structurally zero.
struct GroupedGLMProblem {
    const DataSet* data = nullptr;
    GroupAxis axis = GroupAxis::Rows;
    std::vector<int> keep_rows;  // empty = all rows
    std::vector<int> keep_cols;  // empty = all cols
};

struct GroupedFit {
    Eigen::MatrixXd C;               // full s x t; exact zeros outside keep sets
    double beta = 0.0;
    std::vector<int> active_groups;  // full-dimension indices with nonzero groups
    double lambda = 0.0;
    double nll = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Group norms of the unpenalized fit of the same problem, floored at 1e-6.
Eigen::VectorXd grouped_adaptive_weights(const GroupedGLMProblem& problem,
                                         const SolverConfig& config);

GroupedFit grouped_glm_fit(const GroupedGLMProblem& problem, double lambda,
                           const Eigen::VectorXd& group_weights, const SolverConfig& config);

/// Sweeps the lambda grid and keeps the fit with the smallest IC.
GroupedFit grouped_glm_select(const GroupedGLMProblem& problem, const SolverConfig& config,
                              ICKind ic, int grid_size);

struct BenchmarkOptions {
    SolverConfig solver;
    ICKind ic = ICKind::AIC;
    int lambda_grid_size = 50;
    std::vector<int> structured_extra_ranks;  // unused by I/II; reserved
};

/// Benchmark I: adaptive group LASSO on rows, drop the dead rows, then the
/// same on columns of the surviving submatrix.
SelectionReport benchmark_row_col(const DataSet& data, const BenchmarkOptions& opts);

/// Benchmark II: columns first, then rows.
SelectionReport benchmark_col_row(const DataSet& data, const BenchmarkOptions& opts);

/// Benchmark III: the main pipeline restricted to rank one.
SelectionReport benchmark_structured_lasso(const DataSet& data, const BenchmarkOptions& opts);

}  // namespace matreg
