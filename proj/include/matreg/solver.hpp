#pragma once

#include <vector>

#include "matreg/glm.hpp"
#include "matreg/penalty.hpp"

namespace matreg {

enum class StepsizeMode { Analytic, Backtracking };

struct SolverConfig {
    double epsilon = 1e-4;
    int max_iter = 1500;
    // Backtracking from a tenth of the analytic constant is the default: the
    // analytic bound is valid but loose, and the larger steps reach materially
    // better critical points within the same iteration budget.
    StepsizeMode stepsize_mode = StepsizeMode::Backtracking;
    double backtrack_shrink = 0.5;        // each rejection divides the stepsize by this
    double min_objective_decrease = 0.0;  // safeguard tolerance on the descent check
};

struct FitResult {
    FactorModel model;
    Eigen::MatrixXd B;                    // U * V at termination
    std::vector<double> objective_trace;  // F^0 .. F^K (likelihood + penalty)
    std::vector<double> q_trace;          // q^1 .. q^K
    // Per-iteration stepsizes and squared block step norms (U half includes
    // the beta half-step); kept so descent-inequality checks can replay the run.
    std::vector<double> lu_trace, lv_trace;
    std::vector<double> step_norm2_u, step_norm2_v;
    int iterations = 0;
    bool converged = false;

    double objective() const { return objective_trace.back(); }
};

/// max{ ||B_curr - B_prev||_F / (1 + ||B_prev||_F), |F_curr - F_prev| / (1 + F_prev) }
double convergence_metric(const Eigen::MatrixXd& B_prev, const Eigen::MatrixXd& B_curr,
                          double F_prev, double F_curr);

/// Block coordinate proximal descent: per iteration a linearized proximal
/// step on U (with a beta half-step at stepsize 1/L_u), then the same on V
/// (with the second beta half-step at 1/L_v). Stops when the relative-change
/// metric drops to epsilon or max_iter is reached.
FitResult bcpd_fit(const DataSet& data, const FactorModel& init, const AdaptiveWeights& weights,
                   const PenaltySpec& penalty, const SolverConfig& config);

/// Reference solver: alternately minimizes the convex (U,beta) and (V,beta)
/// subproblems to inner tolerance 1e-6 via proximal gradient. Slow, used to
/// cross-check bcpd_fit.
FitResult bcd_fit(const DataSet& data, const FactorModel& init, const AdaptiveWeights& weights,
                  const PenaltySpec& penalty, const SolverConfig& config);

}  // namespace matreg
