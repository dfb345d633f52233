#include "matreg/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace matreg {

void ScenarioSpec::validate() const {
    if (n < 1 || s < 1 || t < 1) throw ValidationError("scenario dimensions must be positive");
    if (true_rank < 1 || true_rank > std::min(s, t))
        throw ValidationError("true rank outside [1, min(s,t)]");
    if (nsr < 0.0) throw ValidationError("nsr must be nonnegative");
    if (quality_trials < 1) throw ValidationError("quality trials must be >= 1");
    for (int j : zero_rows)
        if (j < 0 || j >= s) throw ValidationError("zero row index out of range");
    for (int k : zero_cols)
        if (k < 0 || k >= t) throw ValidationError("zero column index out of range");
}

TrueCoefficients gen_coefficients(const ScenarioSpec& spec, std::mt19937_64& rng) {
    spec.validate();
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    TrueCoefficients truth;
    truth.U.resize(spec.s, spec.true_rank);
    truth.V.resize(spec.true_rank, spec.t);
    for (int j = 0; j < spec.s; ++j)
        for (int r = 0; r < spec.true_rank; ++r) truth.U(j, r) = unif(rng);
    for (int r = 0; r < spec.true_rank; ++r)
        for (int k = 0; k < spec.t; ++k) truth.V(r, k) = unif(rng);
    for (int j : spec.zero_rows) truth.U.row(j).setZero();
    for (int k : spec.zero_cols) truth.V.col(k).setZero();
    truth.B = truth.U * truth.V;
    return truth;
}

void gen_predictors(const ScenarioSpec& spec, std::mt19937_64& rng,
                    std::vector<Eigen::MatrixXd>& X, std::vector<Eigen::MatrixXd>& E) {
    spec.validate();
    std::normal_distribution<double> normal(0.0, 1.0);

    Eigen::MatrixXd chol;  // Cholesky factor of the 0.5^|j-k| row covariance
    if (spec.correlation == CorrelationScenario::RowCorrelated) {
        Eigen::MatrixXd cov(spec.s, spec.s);
        for (int j = 0; j < spec.s; ++j)
            for (int k = 0; k < spec.s; ++k) cov(j, k) = std::pow(0.5, std::abs(j - k));
        chol = cov.llt().matrixL();
    }

    X.assign(spec.n, Eigen::MatrixXd(spec.s, spec.t));
    double norm_sum = 0.0;
    for (int i = 0; i < spec.n; ++i) {
        Eigen::MatrixXd& Xi = X[i];
        for (int j = 0; j < spec.s; ++j)
            for (int k = 0; k < spec.t; ++k) Xi(j, k) = normal(rng);
        if (spec.correlation == CorrelationScenario::RowCorrelated) Xi = chol * Xi;
        norm_sum += Xi.norm();
    }

    E.assign(spec.n, Eigen::MatrixXd::Zero(spec.s, spec.t));
    if (spec.nsr > 0.0) {
        const double sigma = spec.nsr * norm_sum / spec.n;
        for (int i = 0; i < spec.n; ++i)
            for (int j = 0; j < spec.s; ++j)
                for (int k = 0; k < spec.t; ++k) E[i](j, k) = sigma * normal(rng);
    }
}

Eigen::VectorXd gen_responses(const Eigen::MatrixXd& B_true,
                              const std::vector<Eigen::MatrixXd>& X,
                              const std::vector<Eigen::MatrixXd>& E, std::mt19937_64& rng) {
    if (X.size() != E.size()) throw DimensionError("X and E sample counts differ");
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::VectorXd y(X.size());
    for (size_t i = 0; i < X.size(); ++i) {
        const double eta = (B_true.cwiseProduct(X[i] + E[i])).sum();
        y[static_cast<int>(i)] = unif(rng) < sigmoid(eta) ? 1.0 : 0.0;
    }
    return y;
}

Eigen::VectorXd gen_quality_responses(const Eigen::MatrixXd& B_true,
                                      const std::vector<Eigen::MatrixXd>& X,
                                      const std::vector<Eigen::MatrixXd>& E, int trials) {
    if (X.size() != E.size()) throw DimensionError("X and E sample counts differ");
    if (trials < 1) throw ValidationError("quality trials must be >= 1");
    Eigen::VectorXd y(X.size());
    for (size_t i = 0; i < X.size(); ++i) {
        const double eta = (B_true.cwiseProduct(X[i] + E[i])).sum();
        y[static_cast<int>(i)] = std::round(trials * sigmoid(eta));
    }
    return y;
}

SelectionOutcome selection_metrics(const std::vector<int>& active_rows,
                                   const std::vector<int>& active_cols,
                                   const ScenarioSpec& spec) {
    spec.validate();
    auto contains = [](const std::vector<int>& v, int x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };

    int tp = 0, tn = 0, crucial = 0;
    for (int j = 0; j < spec.s; ++j) {
        const bool is_zero = contains(spec.zero_rows, j);
        const bool selected = contains(active_rows, j);
        if (is_zero) {
            if (!selected) ++tn;
        } else {
            ++crucial;
            if (selected) ++tp;
        }
    }
    for (int k = 0; k < spec.t; ++k) {
        const bool is_zero = contains(spec.zero_cols, k);
        const bool selected = contains(active_cols, k);
        if (is_zero) {
            if (!selected) ++tn;
        } else {
            ++crucial;
            if (selected) ++tp;
        }
    }
    const int noncrucial = spec.s + spec.t - crucial;

    SelectionOutcome out;
    out.ok = true;
    out.tp_pct = crucial > 0 ? 100.0 * tp / crucial : 100.0;
    out.tn_pct = noncrucial > 0 ? 100.0 * tn / noncrucial : 100.0;
    out.accuracy = 100.0 * (tp + tn) / (spec.s + spec.t);
    return out;
}

const char* method_name(Method m) {
    switch (m) {
        case Method::Proposed: return "proposed";
        case Method::RowCol: return "row_col";
        case Method::ColRow: return "col_row";
        case Method::Structured: return "structured";
    }
    return "unknown";
}

MetricsSummary summarize(const std::vector<SelectionOutcome>& outcomes) {
    MetricsSummary sum;
    double acc = 0.0, acc2 = 0.0;
    for (const SelectionOutcome& o : outcomes) {
        if (!o.ok) {
            ++sum.failures;
            continue;
        }
        ++sum.replications;
        sum.tp_pct += o.tp_pct;
        sum.tn_pct += o.tn_pct;
        acc += o.accuracy;
        acc2 += o.accuracy * o.accuracy;
    }
    if (sum.replications == 0) return sum;
    const double r = sum.replications;
    sum.tp_pct /= r;
    sum.tn_pct /= r;
    sum.fp_pct = 100.0 - sum.tn_pct;
    sum.fn_pct = 100.0 - sum.tp_pct;
    sum.accuracy_mean = acc / r;
    if (sum.replications > 1) {
        const double var = std::max(0.0, (acc2 - acc * acc / r) / (r - 1.0));
        sum.accuracy_sd = std::sqrt(var);
    } else {
        sum.accuracy_sd = 0.0;
        sum.sd_degenerate = true;
    }
    return sum;
}

namespace {

std::mt19937_64 replication_rng(std::uint64_t seed, int replication) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replication)};
    return std::mt19937_64(seq);
}

SelectionOutcome run_one(const ScenarioSpec& spec, Method method, int replication,
                         const StudyOptions& opts) {
    std::mt19937_64 rng = replication_rng(spec.seed, replication);
    const TrueCoefficients truth = gen_coefficients(spec, rng);
    std::vector<Eigen::MatrixXd> X, E;
    gen_predictors(spec, rng, X, E);

    DataSet data;
    if (spec.response_mode == ResponseMode::QualityIndex) {
        data.family = ResponseFamily::binomial_uniform(spec.quality_trials, spec.n);
        data.y = gen_quality_responses(truth.B, X, E, spec.quality_trials);
    } else {
        data.family = ResponseFamily::bernoulli();
        data.y = gen_responses(truth.B, X, E, rng);
    }
    if (opts.fit_on_noisy) {
        data.X.reserve(X.size());
        for (size_t i = 0; i < X.size(); ++i) data.X.push_back(X[i] + E[i]);
    } else {
        data.X = X;
    }

    SelectionOutcome out;
    try {
        switch (method) {
            case Method::Proposed: {
                SelectOptions sel;
                sel.ranks = opts.ranks;
                sel.ic = opts.ic;
                sel.solver = opts.solver;
                sel.lambda_grid_size = opts.lambda_grid_size;
                const SelectionReport report = select(data, sel);
                out = selection_metrics(report.active_rows, report.active_cols, spec);
                out.chosen_rank = report.chosen_rank;
                break;
            }
            case Method::Structured: {
                BenchmarkOptions bopts{opts.solver, opts.ic, opts.lambda_grid_size, {}};
                const SelectionReport report = benchmark_structured_lasso(data, bopts);
                out = selection_metrics(report.active_rows, report.active_cols, spec);
                out.chosen_rank = report.chosen_rank;
                break;
            }
            case Method::RowCol:
            case Method::ColRow: {
                BenchmarkOptions bopts{opts.solver, opts.ic, opts.lambda_grid_size, {}};
                const SelectionReport report = method == Method::RowCol
                                                   ? benchmark_row_col(data, bopts)
                                                   : benchmark_col_row(data, bopts);
                out = selection_metrics(report.active_rows, report.active_cols, spec);
                break;
            }
        }
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

}  // namespace

StudyResult run_study(const ScenarioSpec& spec, const std::vector<Method>& methods,
                      int replications, const StudyOptions& opts) {
    spec.validate();
    if (replications < 1) throw ValidationError("replications must be >= 1");
    if (methods.empty()) throw ValidationError("at least one method required");

    StudyResult result;
    for (Method m : methods) result.outcomes[m].resize(replications);

    const int threads = std::max(1, std::min(opts.threads, replications));
    if (threads == 1) {
        for (int rep = 0; rep < replications; ++rep)
            for (Method m : methods) result.outcomes[m][rep] = run_one(spec, m, rep, opts);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        pool.reserve(threads);
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&]() {
                while (true) {
                    const int rep = next.fetch_add(1);
                    if (rep >= replications) break;
                    for (Method m : methods) result.outcomes[m][rep] = run_one(spec, m, rep, opts);
                }
            });
        }
        for (std::thread& th : pool) th.join();
    }

    for (Method m : methods) result.summaries[m] = summarize(result.outcomes[m]);
    return result;
}

}  // namespace matreg
