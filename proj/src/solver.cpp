#include "matreg/solver.hpp"

#include <cmath>
#include <string>

namespace matreg {

double convergence_metric(const Eigen::MatrixXd& B_prev, const Eigen::MatrixXd& B_curr,
                          double F_prev, double F_curr) {
    const double rel_b = (B_curr - B_prev).norm() / (1.0 + B_prev.norm());
    const double rel_f = std::abs(F_curr - F_prev) / (1.0 + F_prev);
    return std::max(rel_b, rel_f);
}

namespace {

enum class Axis { Rows, Cols };

Eigen::VectorXd prox_thresholds(double lambda, double stepsize,
                                const Eigen::VectorXd& group_norms) {
    return (lambda / stepsize) * group_norms.cwiseInverse();
}

Eigen::MatrixXd apply_prox(Axis axis, const Eigen::MatrixXd& M,
                           const Eigen::VectorXd& thresholds, double gamma) {
    return axis == Axis::Rows ? row_soft_threshold(M, thresholds, gamma)
                              : col_soft_threshold(M, thresholds, gamma);
}

struct BlockStep {
    Eigen::MatrixXd M;
    double beta;
    double stepsize;     // the L actually used
    double step_norm2;   // ||M - M_prev||_F^2 + (beta - beta_prev)^2
};

// One proximal step on a block: M+ = prox(M - grad/L), beta+ = beta - gbeta/L.
// In backtracking mode L starts at a tenth of the analytic constant and is
// grown until the quadratic upper bound holds at the candidate; the analytic
// constant is a guaranteed cap.
BlockStep proximal_step(const BlockView& view, Axis axis, const Eigen::MatrixXd& M,
                        double beta, double lambda, double gamma,
                        const Eigen::VectorXd& group_norms, const SolverConfig& config) {
    const double l_analytic = view.lipschitz();
    Eigen::MatrixXd grad;
    double grad_beta;
    view.gradient(M, beta, grad, grad_beta);

    auto candidate = [&](double L) {
        BlockStep step;
        step.M = apply_prox(axis, M - grad / L, prox_thresholds(lambda, L, group_norms), gamma);
        step.beta = beta - grad_beta / L;
        step.stepsize = L;
        step.step_norm2 = (step.M - M).squaredNorm() + (step.beta - beta) * (step.beta - beta);
        return step;
    };

    if (config.stepsize_mode == StepsizeMode::Analytic) {
        return candidate(l_analytic);
    }

    const double f0 = view.nll(M, beta);
    double L = l_analytic / 10.0;
    while (true) {
        BlockStep step = candidate(L);
        if (L >= l_analytic) return step;  // bound guarantees the condition
        const double surrogate = f0 + grad.cwiseProduct(step.M - M).sum() +
                                 grad_beta * (step.beta - beta) + 0.5 * L * step.step_norm2;
        if (view.nll(step.M, step.beta) <= surrogate + 1e-12 * (1.0 + std::abs(f0))) return step;
        L = std::min(L / config.backtrack_shrink, l_analytic);
    }
}

void check_finite(double F, int iteration) {
    if (!std::isfinite(F))
        throw NumericalError("objective became non-finite at iteration " +
                             std::to_string(iteration));
}

void validate_fit_inputs(const DataSet& data, const FactorModel& init,
                         const AdaptiveWeights& weights, const PenaltySpec& penalty) {
    data.validate();
    if (init.U.rows() != data.s() || init.V.cols() != data.t() ||
        init.U.cols() != init.V.rows())
        throw DimensionError("initial factors do not match dataset dimensions");
    weights.validate(data.s(), data.t());
    if (penalty.lambda < 0.0) throw ValidationError("lambda must be nonnegative");
}

}  // namespace

FitResult bcpd_fit(const DataSet& data, const FactorModel& init, const AdaptiveWeights& weights,
                   const PenaltySpec& penalty, const SolverConfig& config) {
    validate_fit_inputs(data, init, weights, penalty);

    FactorModel cur = init;
    Eigen::MatrixXd B = cur.coefficients();
    double F = BlockView::v_block(data, cur.U).nll(cur.V, cur.beta) +
               penalty_value(cur.U, cur.V, weights, penalty);
    check_finite(F, 0);

    FitResult result;
    result.objective_trace.push_back(F);

    for (int k = 1; k <= config.max_iter; ++k) {
        const FactorModel prev = cur;
        const Eigen::MatrixXd B_prev = B;
        const double F_prev = F;

        // U half-step at 1/L_u, including the first beta update
        const BlockView uview = BlockView::u_block(data, prev.V);
        const BlockStep ustep = proximal_step(uview, Axis::Rows, prev.U, prev.beta,
                                              penalty.lambda, penalty.gamma,
                                              weights.row_norms, config);
        cur.U = ustep.M;

        // V half-step at 1/L_v, including the second beta update
        const BlockView vview = BlockView::v_block(data, cur.U);
        const BlockStep vstep = proximal_step(vview, Axis::Cols, prev.V, ustep.beta,
                                              penalty.lambda, penalty.gamma,
                                              weights.col_norms, config);
        cur.V = vstep.M;
        cur.beta = vstep.beta;

        B = cur.U * cur.V;
        F = vview.nll(cur.V, cur.beta) + penalty_value(cur.U, cur.V, weights, penalty);
        check_finite(F, k);

        // Descent safeguard: the dominating stepsize constants make F
        // nonincreasing, so any rise beyond roundoff means the step is bad.
        if (F > F_prev + config.min_objective_decrease + 1e-10 * (1.0 + std::abs(F_prev))) {
            cur = prev;
            B = B_prev;
            F = F_prev;
            break;
        }

        result.lu_trace.push_back(ustep.stepsize);
        result.lv_trace.push_back(vstep.stepsize);
        result.step_norm2_u.push_back(ustep.step_norm2);
        result.step_norm2_v.push_back(vstep.step_norm2);
        result.objective_trace.push_back(F);
        result.iterations = k;

        const double q = convergence_metric(B_prev, B, F_prev, F);
        result.q_trace.push_back(q);
        if (q <= config.epsilon) {
            result.converged = true;
            break;
        }
    }

    result.model = cur;
    result.B = B;
    return result;
}

namespace {

// Proximal-gradient solve of one convex block subproblem, used by bcd_fit.
// The stepsize constant is fixed for the whole inner loop (the other factor
// does not move), and the stop rule mirrors the outer relative-change metric
// on the block and its own objective.
struct InnerSolve {
    Eigen::MatrixXd M;
    double beta;
};

InnerSolve solve_block(const BlockView& view, Axis axis, Eigen::MatrixXd M, double beta,
                       double lambda, double gamma, const Eigen::VectorXd& group_norms,
                       double tol, int max_inner) {
    const double L = view.lipschitz();
    const Eigen::VectorXd thresholds = prox_thresholds(lambda, L, group_norms);

    auto block_penalty = [&](const Eigen::MatrixXd& m) {
        double sum = 0.0;
        if (axis == Axis::Rows) {
            for (int j = 0; j < m.rows(); ++j) sum += m.row(j).norm() / group_norms[j];
        } else {
            for (int k = 0; k < m.cols(); ++k) sum += m.col(k).norm() / group_norms[k];
        }
        return lambda * gamma * sum;
    };

    double F = view.nll(M, beta) + block_penalty(M);
    Eigen::MatrixXd grad;
    double grad_beta;
    for (int it = 0; it < max_inner; ++it) {
        view.gradient(M, beta, grad, grad_beta);
        const Eigen::MatrixXd M_next = apply_prox(axis, M - grad / L, thresholds, gamma);
        const double beta_next = beta - grad_beta / L;
        const double F_next = view.nll(M_next, beta_next) + block_penalty(M_next);

        const double dM = std::sqrt((M_next - M).squaredNorm() +
                                    (beta_next - beta) * (beta_next - beta));
        const double norm0 = std::sqrt(M.squaredNorm() + beta * beta);
        const double q = std::max(dM / (1.0 + norm0), std::abs(F_next - F) / (1.0 + F));

        M = M_next;
        beta = beta_next;
        F = F_next;
        if (q <= tol) break;
    }
    return InnerSolve{std::move(M), beta};
}

}  // namespace

FitResult bcd_fit(const DataSet& data, const FactorModel& init, const AdaptiveWeights& weights,
                  const PenaltySpec& penalty, const SolverConfig& config) {
    validate_fit_inputs(data, init, weights, penalty);
    constexpr double kInnerTol = 1e-6;
    constexpr int kMaxInner = 5000;

    FactorModel cur = init;
    Eigen::MatrixXd B = cur.coefficients();
    double F = BlockView::v_block(data, cur.U).nll(cur.V, cur.beta) +
               penalty_value(cur.U, cur.V, weights, penalty);
    check_finite(F, 0);

    FitResult result;
    result.objective_trace.push_back(F);

    for (int k = 1; k <= config.max_iter; ++k) {
        const Eigen::MatrixXd B_prev = B;
        const double F_prev = F;

        const BlockView uview = BlockView::u_block(data, cur.V);
        InnerSolve usol = solve_block(uview, Axis::Rows, cur.U, cur.beta, penalty.lambda,
                                      penalty.gamma, weights.row_norms, kInnerTol, kMaxInner);
        cur.U = std::move(usol.M);

        const BlockView vview = BlockView::v_block(data, cur.U);
        InnerSolve vsol = solve_block(vview, Axis::Cols, cur.V, usol.beta, penalty.lambda,
                                      penalty.gamma, weights.col_norms, kInnerTol, kMaxInner);
        cur.V = std::move(vsol.M);
        cur.beta = vsol.beta;

        B = cur.U * cur.V;
        F = vview.nll(cur.V, cur.beta) + penalty_value(cur.U, cur.V, weights, penalty);
        check_finite(F, k);

        result.objective_trace.push_back(F);
        result.iterations = k;

        const double q = convergence_metric(B_prev, B, F_prev, F);
        result.q_trace.push_back(q);
        if (q <= config.epsilon) {
            result.converged = true;
            break;
        }
    }

    result.model = cur;
    result.B = B;
    return result;
}

}  // namespace matreg
