#include "matreg/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace matreg {

namespace {

// Newton fit of a single-predictor GLM: link(mu) = b0 + b1 * x. Returns the
// slope, clamped to +-clamp when the iteration fails to settle (perfect
// separation sends |b1| off to infinity).
double univariate_slope(const Eigen::VectorXd& x, const DataSet& data,
                        const InitOptions& opts, bool* clamped) {
    const int n = data.n();
    const ResponseFamily& fam = data.family;

    if (fam.kind == Family::Normal) {
        // identity link: ordinary least squares slope
        const double xbar = x.mean();
        const double ybar = data.y.mean();
        const double sxx = (x.array() - xbar).square().sum();
        if (sxx <= 0.0) return 0.0;
        return ((x.array() - xbar) * (data.y.array() - ybar)).sum() / sxx;
    }

    double b0 = 0.0, b1 = 0.0;
    for (int it = 0; it < opts.max_newton_iter; ++it) {
        double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double eta = b0 + b1 * x[i];
            const double p = sigmoid(eta);
            const double m = fam.kind == Family::Binomial ? fam.trials[i] : 1;
            const double resid = data.y[i] - m * p;
            const double w = m * p * (1.0 - p);
            g0 -= resid;
            g1 -= resid * x[i];
            h00 += w;
            h01 += w * x[i];
            h11 += w * x[i] * x[i];
        }
        const double det = h00 * h11 - h01 * h01;
        if (!(std::abs(det) > 1e-12)) break;  // flat or separated; keep current slope
        const double d0 = (h11 * g0 - h01 * g1) / det;
        const double d1 = (h00 * g1 - h01 * g0) / det;
        b0 -= d0;
        b1 -= d1;
        if (std::abs(b1) > opts.slope_clamp) break;
        if (std::max(std::abs(d0), std::abs(d1)) < opts.newton_tol) return b1;
    }
    if (std::abs(b1) > opts.slope_clamp) {
        if (clamped) *clamped = true;
        return b1 > 0 ? opts.slope_clamp : -opts.slope_clamp;
    }
    // ran out of iterations without diverging; the slope is still usable
    return b1;
}

double null_intercept(const DataSet& data) {
    switch (data.family.kind) {
        case Family::Bernoulli: {
            const double p = std::clamp(data.y.mean(), 1e-6, 1.0 - 1e-6);
            return logit(p);
        }
        case Family::Binomial: {
            double trials = 0.0;
            for (int m : data.family.trials) trials += m;
            const double p = std::clamp(data.y.sum() / trials, 1e-6, 1.0 - 1e-6);
            return logit(p);
        }
        case Family::Normal:
            return data.y.mean();
    }
    return 0.0;
}

}  // namespace

FactorModel init_heuristic(const DataSet& data, int rank, const InitOptions& opts) {
    data.validate();
    const int s = data.s(), t = data.t();
    if (rank < 1 || rank > std::min(s, t))
        throw ValidationError("rank must lie in [1, min(s,t)]");

    Eigen::MatrixXd B_tilde(s, t);
    Eigen::VectorXd x(data.n());
    for (int j = 0; j < s; ++j) {
        for (int k = 0; k < t; ++k) {
            for (int i = 0; i < data.n(); ++i) x[i] = data.X[i](j, k);
            B_tilde(j, k) = univariate_slope(x, data, opts, nullptr);
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B_tilde, Eigen::ComputeThinU | Eigen::ComputeThinV);
    FactorModel model;
    model.U = svd.matrixU().leftCols(rank);
    model.V = svd.matrixV().leftCols(rank).transpose();
    if (opts.split_singular_values) {
        const Eigen::VectorXd d = svd.singularValues().head(rank).cwiseSqrt();
        model.U = model.U * d.asDiagonal();
        model.V = d.asDiagonal() * model.V;
    }
    model.beta = null_intercept(data);
    return model;
}

AdaptiveWeights adaptive_weights(const DataSet& data, int rank, const FactorModel& init,
                                 const SolverConfig& config) {
    if (init.rank() != rank) throw DimensionError("init rank does not match requested rank");
    const PenaltySpec unpenalized = PenaltySpec::for_rank(0.0, rank);
    const AdaptiveWeights unit = AdaptiveWeights::ones(data.s(), data.t());
    const FitResult fit = bcpd_fit(data, init, unit, unpenalized, config);

    AdaptiveWeights w;
    w.floor = 1e-6;
    w.row_norms = fit.model.U.rowwise().norm().cwiseMax(w.floor);
    w.col_norms = fit.model.V.colwise().norm().transpose().cwiseMax(w.floor);
    return w;
}

double information_criterion(double nll, double df, int n, ICKind kind) {
    if (df < 0.0) throw ValidationError("df must be nonnegative");
    switch (kind) {
        case ICKind::AIC: return 2.0 * nll + 2.0 * df;
        case ICKind::BIC: return 2.0 * nll + df * std::log(static_cast<double>(n));
    }
    return 0.0;
}

double model_df(int rank, int active_rows, int active_cols) {
    const int r = std::min({rank, active_rows, active_cols});
    return static_cast<double>(r) * (active_rows + active_cols - r) + 1.0;
}

std::vector<double> lambda_grid(const DataSet& data, const AdaptiveWeights& weights,
                                const FactorModel& init, int grid_size, std::string* warning) {
    if (grid_size < 1) throw ValidationError("grid size must be >= 1");
    weights.validate(data.s(), data.t());
    const double gamma = std::sqrt(static_cast<double>(init.rank()));

    // lambda_max is the smallest lambda at which a prox step taken from the
    // null factors, with gradients evaluated at the init, zeroes every group:
    // row j needs ||(grad U)_j|| ||u_hat_j|| / gamma <= lambda, columns alike.
    const BlockView uview = BlockView::u_block(data, init.V);
    Eigen::MatrixXd grad_u;
    double grad_beta;
    uview.gradient(init.U, init.beta, grad_u, grad_beta);
    Eigen::MatrixXd grad_v;
    BlockView::v_block(data, init.U).gradient(init.V, init.beta, grad_v, grad_beta);

    double lambda_max = 0.0;
    for (int j = 0; j < data.s(); ++j)
        lambda_max = std::max(lambda_max, grad_u.row(j).norm() * weights.row_norms[j] / gamma);
    for (int k = 0; k < data.t(); ++k)
        lambda_max = std::max(lambda_max, grad_v.col(k).norm() * weights.col_norms[k] / gamma);

    if (lambda_max <= 0.0) {
        if (warning)
            *warning = "zero likelihood gradient at init; penalization is moot, grid is {0}";
        return {0.0};
    }
    if (grid_size == 1) return {lambda_max};

    std::vector<double> grid(grid_size);
    const double log_max = std::log(lambda_max);
    const double log_min = log_max + std::log(1e-3);
    for (int i = 0; i < grid_size; ++i) {
        grid[i] = std::exp(log_max + (log_min - log_max) * i / (grid_size - 1));
    }
    return grid;
}

std::vector<int> active_row_set(const Eigen::MatrixXd& B) {
    std::vector<int> rows;
    for (int j = 0; j < B.rows(); ++j)
        if (B.row(j).norm() > 0.0) rows.push_back(j);
    return rows;
}

std::vector<int> active_col_set(const Eigen::MatrixXd& B) {
    std::vector<int> cols;
    for (int k = 0; k < B.cols(); ++k)
        if (B.col(k).norm() > 0.0) cols.push_back(k);
    return cols;
}

namespace {

int count_active_rows(const Eigen::MatrixXd& M) {
    int c = 0;
    for (int j = 0; j < M.rows(); ++j)
        if (M.row(j).norm() > 0.0) ++c;
    return c;
}

int count_active_cols(const Eigen::MatrixXd& M) {
    int c = 0;
    for (int k = 0; k < M.cols(); ++k)
        if (M.col(k).norm() > 0.0) ++c;
    return c;
}

}  // namespace

SelectionReport select(const DataSet& data, const SelectOptions& opts) {
    data.validate();
    if (opts.ranks.empty()) throw ValidationError("at least one rank required");
    for (int r : opts.ranks)
        if (r < 1 || r > std::min(data.s(), data.t()))
            throw ValidationError("rank " + std::to_string(r) + " outside [1, min(s,t)]");

    SelectionReport report;
    double best_ic = std::numeric_limits<double>::infinity();
    bool have_best = false;

    for (int rank : opts.ranks) {
        FactorModel init;
        AdaptiveWeights weights;
        std::vector<double> grid;
        try {
            init = init_heuristic(data, rank, opts.init);
            weights = adaptive_weights(data, rank, init, opts.solver);
            if (!opts.lambda_override.empty()) {
                grid = opts.lambda_override;
                std::sort(grid.begin(), grid.end(), std::greater<double>());
            } else {
                std::string warn;
                grid = lambda_grid(data, weights, init, opts.lambda_grid_size, &warn);
                if (!warn.empty())
                    report.warnings.push_back("rank " + std::to_string(rank) + ": " + warn);
            }
        } catch (const Error& e) {
            report.warnings.push_back("rank " + std::to_string(rank) + " skipped: " + e.what());
            continue;
        }

        for (double lambda : grid) {
            ICEntry entry;
            entry.rank = rank;
            entry.lambda = lambda;
            try {
                // every cell restarts from the SVD init: heavy thresholding
                // early in the path collapses the factor span, and a chain
                // warm-started from such a model cannot rotate it back, which
                // costs real likelihood at the small-lambda cells
                const PenaltySpec penalty = PenaltySpec::for_rank(lambda, rank);
                FitResult fit = bcpd_fit(data, init, weights, penalty, opts.solver);

                entry.nll = negative_log_likelihood(fit.model, data);
                entry.df = model_df(rank, count_active_rows(fit.model.U),
                                    count_active_cols(fit.model.V));
                entry.ic = information_criterion(entry.nll, entry.df, data.n(), opts.ic);
                report.ic_table.push_back(entry);

                // ranks ascend and lambdas descend, so strict improvement
                // encodes the tie-break (smaller rank, then larger lambda)
                if (entry.ic < best_ic) {
                    best_ic = entry.ic;
                    have_best = true;
                    report.chosen_rank = rank;
                    report.chosen_lambda = lambda;
                    report.fit = std::move(fit);
                }
            } catch (const Error& e) {
                entry.ok = false;
                entry.error = e.what();
                report.ic_table.push_back(entry);
                report.warnings.push_back("rank " + std::to_string(rank) + ", lambda " +
                                          std::to_string(lambda) + " failed: " + e.what());
            }
        }
    }

    if (!have_best) throw NumericalError("every (rank, lambda) cell failed");

    report.B_hat = report.fit.B;
    report.active_rows = active_row_set(report.B_hat);
    report.active_cols = active_col_set(report.B_hat);
    return report;
}

}  // namespace matreg
