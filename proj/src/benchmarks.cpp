#include "matreg/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace matreg {

namespace {

std::vector<int> full_range(int n) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

// Restricts the dataset to the kept rows/columns. The grouped solver runs on
// the reduced matrices and results are embedded back afterwards.
DataSet reduce(const GroupedGLMProblem& problem, std::vector<int>& rows, std::vector<int>& cols) {
    const DataSet& data = *problem.data;
    rows = problem.keep_rows.empty() ? full_range(data.s()) : problem.keep_rows;
    cols = problem.keep_cols.empty() ? full_range(data.t()) : problem.keep_cols;
    for (int j : rows)
        if (j < 0 || j >= data.s()) throw ValidationError("keep_rows index out of range");
    for (int k : cols)
        if (k < 0 || k >= data.t()) throw ValidationError("keep_cols index out of range");
    if (rows.empty() || cols.empty()) throw ValidationError("keep sets must be nonempty");

    DataSet sub;
    sub.family = data.family;
    sub.y = data.y;
    sub.X.reserve(data.n());
    for (const Eigen::MatrixXd& X : data.X) {
        Eigen::MatrixXd R(rows.size(), cols.size());
        for (size_t a = 0; a < rows.size(); ++a)
            for (size_t b = 0; b < cols.size(); ++b) R(a, b) = X(rows[a], cols[b]);
        sub.X.push_back(std::move(R));
    }
    return sub;
}

double null_intercept_for(const DataSet& data) {
    switch (data.family.kind) {
        case Family::Bernoulli:
            return logit(std::clamp(data.y.mean(), 1e-6, 1.0 - 1e-6));
        case Family::Binomial: {
            double trials = 0.0;
            for (int m : data.family.trials) trials += m;
            return logit(std::clamp(data.y.sum() / trials, 1e-6, 1.0 - 1e-6));
        }
        case Family::Normal:
            return data.y.mean();
    }
    return 0.0;
}

struct ProxGradResult {
    Eigen::MatrixXd C;
    double beta = 0.0;
    int iterations = 0;
    bool converged = false;
    double nll = 0.0;
};

// Proximal gradient on the reduced coefficient matrix; the prox acts on rows
// or columns depending on the grouping axis. Same stepsize construction and
// stop rule as the factorized solver with one factor pinned to identity.
ProxGradResult prox_grad_grouped(const DataSet& sub, GroupAxis axis, double lambda,
                                 const Eigen::VectorXd& group_norms, double gamma,
                                 const SolverConfig& config) {
    const BlockView view = BlockView::full(sub);
    const double L = view.lipschitz();

    ProxGradResult cur;
    cur.C = Eigen::MatrixXd::Zero(sub.s(), sub.t());
    cur.beta = null_intercept_for(sub);

    auto group_penalty = [&](const Eigen::MatrixXd& C) {
        double sum = 0.0;
        if (axis == GroupAxis::Rows) {
            for (int j = 0; j < C.rows(); ++j) sum += C.row(j).norm() / group_norms[j];
        } else {
            for (int k = 0; k < C.cols(); ++k) sum += C.col(k).norm() / group_norms[k];
        }
        return lambda * gamma * sum;
    };

    double F = view.nll(cur.C, cur.beta) + group_penalty(cur.C);
    if (!std::isfinite(F)) throw NumericalError("grouped objective non-finite at start");

    const Eigen::VectorXd thresholds = (lambda / L) * group_norms.cwiseInverse();
    Eigen::MatrixXd grad;
    double grad_beta;
    for (int k = 1; k <= config.max_iter; ++k) {
        view.gradient(cur.C, cur.beta, grad, grad_beta);
        Eigen::MatrixXd C_next = cur.C - grad / L;
        C_next = axis == GroupAxis::Rows ? row_soft_threshold(C_next, thresholds, gamma)
                                         : col_soft_threshold(C_next, thresholds, gamma);
        const double beta_next = cur.beta - grad_beta / L;
        const double F_next = view.nll(C_next, beta_next) + group_penalty(C_next);
        if (!std::isfinite(F_next))
            throw NumericalError("grouped objective non-finite at iteration " + std::to_string(k));

        const double q = convergence_metric(cur.C, C_next, F, F_next);
        cur.C = std::move(C_next);
        cur.beta = beta_next;
        F = F_next;
        cur.iterations = k;
        if (q <= config.epsilon) {
            cur.converged = true;
            break;
        }
    }
    cur.nll = view.nll(cur.C, cur.beta);
    return cur;
}

double group_gamma(const DataSet& sub, GroupAxis axis) {
    // groups are rows of length t or columns of length s
    return std::sqrt(static_cast<double>(axis == GroupAxis::Rows ? sub.t() : sub.s()));
}

}  // namespace

Eigen::VectorXd grouped_adaptive_weights(const GroupedGLMProblem& problem,
                                         const SolverConfig& config) {
    std::vector<int> rows, cols;
    const DataSet sub = reduce(problem, rows, cols);
    const int groups = problem.axis == GroupAxis::Rows ? sub.s() : sub.t();
    const Eigen::VectorXd unit = Eigen::VectorXd::Ones(groups);
    const ProxGradResult fit =
        prox_grad_grouped(sub, problem.axis, 0.0, unit, group_gamma(sub, problem.axis), config);

    Eigen::VectorXd norms(groups);
    if (problem.axis == GroupAxis::Rows) {
        for (int j = 0; j < groups; ++j) norms[j] = fit.C.row(j).norm();
    } else {
        for (int k = 0; k < groups; ++k) norms[k] = fit.C.col(k).norm();
    }
    return norms.cwiseMax(1e-6);
}

GroupedFit grouped_glm_fit(const GroupedGLMProblem& problem, double lambda,
                           const Eigen::VectorXd& group_weights, const SolverConfig& config) {
    if (lambda < 0.0) throw ValidationError("lambda must be nonnegative");
    std::vector<int> rows, cols;
    const DataSet sub = reduce(problem, rows, cols);
    const int groups = problem.axis == GroupAxis::Rows ? sub.s() : sub.t();
    if (group_weights.size() != groups)
        throw DimensionError("one weight per group required");

    const ProxGradResult inner = prox_grad_grouped(sub, problem.axis, lambda, group_weights,
                                                   group_gamma(sub, problem.axis), config);

    GroupedFit fit;
    fit.C = Eigen::MatrixXd::Zero(problem.data->s(), problem.data->t());
    for (size_t a = 0; a < rows.size(); ++a)
        for (size_t b = 0; b < cols.size(); ++b) fit.C(rows[a], cols[b]) = inner.C(a, b);
    fit.beta = inner.beta;
    fit.lambda = lambda;
    fit.nll = inner.nll;
    fit.iterations = inner.iterations;
    fit.converged = inner.converged;

    if (problem.axis == GroupAxis::Rows) {
        for (size_t a = 0; a < rows.size(); ++a)
            if (inner.C.row(a).norm() > 0.0) fit.active_groups.push_back(rows[a]);
    } else {
        for (size_t b = 0; b < cols.size(); ++b)
            if (inner.C.col(b).norm() > 0.0) fit.active_groups.push_back(cols[b]);
    }
    return fit;
}

GroupedFit grouped_glm_select(const GroupedGLMProblem& problem, const SolverConfig& config,
                              ICKind ic, int grid_size) {
    std::vector<int> rows, cols;
    const DataSet sub = reduce(problem, rows, cols);
    const Eigen::VectorXd weights = grouped_adaptive_weights(problem, config);
    const double gamma = group_gamma(sub, problem.axis);
    const int group_size = problem.axis == GroupAxis::Rows ? sub.t() : sub.s();

    // lambda_max zeroes every group in the first prox step from C = 0
    const BlockView view = BlockView::full(sub);
    Eigen::MatrixXd grad;
    double grad_beta;
    view.gradient(Eigen::MatrixXd::Zero(sub.s(), sub.t()), null_intercept_for(sub), grad,
                  grad_beta);
    double lambda_max = 0.0;
    const int groups = static_cast<int>(weights.size());
    for (int g = 0; g < groups; ++g) {
        const double gnorm =
            problem.axis == GroupAxis::Rows ? grad.row(g).norm() : grad.col(g).norm();
        lambda_max = std::max(lambda_max, gnorm * weights[g] / gamma);
    }

    std::vector<double> grid;
    if (lambda_max <= 0.0) {
        grid = {0.0};
    } else {
        grid.resize(grid_size);
        for (int i = 0; i < grid_size; ++i) {
            const double f = grid_size == 1 ? 0.0 : static_cast<double>(i) / (grid_size - 1);
            grid[i] = lambda_max * std::pow(1e-3, f);
        }
    }

    GroupedFit best;
    double best_ic = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        GroupedFit fit = grouped_glm_fit(problem, lambda, weights, config);
        const double df = static_cast<double>(fit.active_groups.size()) * group_size + 1.0;
        const double crit = information_criterion(fit.nll, df, sub.n(), ic);
        if (crit < best_ic) {
            best_ic = crit;
            best = std::move(fit);
        }
    }
    return best;
}

namespace {

SelectionReport sequential_benchmark(const DataSet& data, const BenchmarkOptions& opts,
                                     GroupAxis first) {
    data.validate();
    const GroupAxis second = first == GroupAxis::Rows ? GroupAxis::Cols : GroupAxis::Rows;

    SelectionReport report;

    GroupedGLMProblem stage1{&data, first, {}, {}};
    const GroupedFit fit1 = grouped_glm_select(stage1, opts.solver, opts.ic, opts.lambda_grid_size);
    const std::vector<int>& survivors = fit1.active_groups;

    if (survivors.empty()) {
        report.warnings.push_back("stage 1 selected no groups; stage 2 skipped");
        report.B_hat = Eigen::MatrixXd::Zero(data.s(), data.t());
        report.chosen_lambda = fit1.lambda;
        return report;
    }

    GroupedGLMProblem stage2{&data, second, {}, {}};
    if (first == GroupAxis::Rows) {
        stage2.keep_rows = survivors;
    } else {
        stage2.keep_cols = survivors;
    }
    const GroupedFit fit2 = grouped_glm_select(stage2, opts.solver, opts.ic, opts.lambda_grid_size);

    report.B_hat = fit2.C;
    report.chosen_lambda = fit2.lambda;
    if (first == GroupAxis::Rows) {
        report.active_rows = survivors;
        report.active_cols = fit2.active_groups;
    } else {
        report.active_cols = survivors;
        report.active_rows = fit2.active_groups;
    }
    return report;
}

}  // namespace

SelectionReport benchmark_row_col(const DataSet& data, const BenchmarkOptions& opts) {
    return sequential_benchmark(data, opts, GroupAxis::Rows);
}

SelectionReport benchmark_col_row(const DataSet& data, const BenchmarkOptions& opts) {
    return sequential_benchmark(data, opts, GroupAxis::Cols);
}

SelectionReport benchmark_structured_lasso(const DataSet& data, const BenchmarkOptions& opts) {
    SelectOptions sel;
    sel.ranks = {1};
    sel.ic = opts.ic;
    sel.solver = opts.solver;
    sel.lambda_grid_size = opts.lambda_grid_size;
    return select(data, sel);
}

}  // namespace matreg
