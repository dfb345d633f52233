#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "matreg/benchmarks.hpp"

namespace matreg {

enum class CorrelationScenario { IID, RowCorrelated };

/// How the scalar response is produced from the log-odds eta_i.
/// QualityIndex mirrors a defect fraction measured at `quality_trials`
/// points: y_i = round(K * sigmoid(eta_i)) out of K, fitted as binomial
/// counts; its information content matches the generating equation, which
/// defines y through its log-odds rather than as a random draw.
/// BernoulliDraw samples a single binary outcome per product instead.
enum class ResponseMode { QualityIndex, BernoulliDraw };

/// Synthetic-study design. Indices are 0-based: the default zero sets are the
/// 1st,3rd,5th,7th,9th rows and 2nd,4th,6th,8th,10th columns of a 10 x 10
/// coefficient matrix.
struct ScenarioSpec {
    CorrelationScenario correlation = CorrelationScenario::IID;
    double nsr = 0.0;  // noise-to-signal ratio n*sigma / sum ||X_i||_F
    int n = 100;
    int s = 10;
    int t = 10;
    int true_rank = 3;
    std::vector<int> zero_rows = {0, 2, 4, 6, 8};
    std::vector<int> zero_cols = {1, 3, 5, 7, 9};
    std::uint64_t seed = 0;
    ResponseMode response_mode = ResponseMode::QualityIndex;
    int quality_trials = 1500;  // measurement points behind the quality index

    void validate() const;
};

struct TrueCoefficients {
    Eigen::MatrixXd U, V, B;
};

/// Factor entries uniform on (-1,1) with the designated rows/columns zeroed.
TrueCoefficients gen_coefficients(const ScenarioSpec& spec, std::mt19937_64& rng);

/// Draws predictors (iid standard normal, or columns from the Toeplitz
/// row-covariance 0.5^|j-k|) and the additive noise matrices with sigma set
/// from the realized NSR denominator.
void gen_predictors(const ScenarioSpec& spec, std::mt19937_64& rng,
                    std::vector<Eigen::MatrixXd>& X, std::vector<Eigen::MatrixXd>& E);

/// Bernoulli draws with success probability sigmoid(<B, X_i + E_i>).
Eigen::VectorXd gen_responses(const Eigen::MatrixXd& B_true,
                              const std::vector<Eigen::MatrixXd>& X,
                              const std::vector<Eigen::MatrixXd>& E, std::mt19937_64& rng);

/// Defect counts round(K * sigmoid(<B, X_i + E_i>)) out of K trials.
Eigen::VectorXd gen_quality_responses(const Eigen::MatrixXd& B_true,
                                      const std::vector<Eigen::MatrixXd>& X,
                                      const std::vector<Eigen::MatrixXd>& E, int trials);

struct MetricsSummary {
    double tp_pct = 0, tn_pct = 0, fp_pct = 0, fn_pct = 0;
    double accuracy_mean = 0, accuracy_sd = 0;
    int replications = 0;  // successful ones
    int failures = 0;
    bool sd_degenerate = false;  // single replication: SD reported as 0 by convention
};

struct SelectionOutcome {
    double tp_pct = 0, tn_pct = 0, accuracy = 0;
    int chosen_rank = 0;
    bool ok = false;
    std::string error;
};

/// Counts selected crucial groups (TP) and excluded non-crucial groups (TN)
/// against the scenario's designed sparsity; accuracy = 100 (TP+TN) / (s+t).
SelectionOutcome selection_metrics(const std::vector<int>& active_rows,
                                   const std::vector<int>& active_cols,
                                   const ScenarioSpec& spec);

enum class Method { Proposed, RowCol, ColRow, Structured };

const char* method_name(Method m);

struct StudyOptions {
    std::vector<int> ranks = {1, 2, 3, 4};  // rank grid for the proposed method
    ICKind ic = ICKind::AIC;
    SolverConfig solver;
    int lambda_grid_size = 50;
    bool fit_on_noisy = false;  // fit sees X + E instead of X
    int threads = 1;
};

struct StudyResult {
    std::map<Method, MetricsSummary> summaries;
    std::map<Method, std::vector<SelectionOutcome>> outcomes;  // one per replication
};

/// Repeats generate-fit-score with a per-replication RNG substream and
/// aggregates. Replications run in parallel when threads > 1; results are
/// identical either way.
StudyResult run_study(const ScenarioSpec& spec, const std::vector<Method>& methods,
                      int replications, const StudyOptions& opts);

MetricsSummary summarize(const std::vector<SelectionOutcome>& outcomes);

}  // namespace matreg
