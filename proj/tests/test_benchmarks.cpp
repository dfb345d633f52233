#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "matreg/benchmarks.hpp"
#include "test_util.hpp"

using namespace matreg;
using testutil::random_matrix;

namespace {

// Test-only oracle: IRLS on the vectorized predictors, for checking the
// unpenalized grouped fit against an independent solver route.
double irls_full_glm_nll(const DataSet& data, int max_iter = 200) {
    const int p = data.s() * data.t() + 1;
    Eigen::MatrixXd design(data.n(), p);
    for (int i = 0; i < data.n(); ++i) {
        design(i, 0) = 1.0;
        design.row(i).tail(p - 1) =
            Eigen::Map<const Eigen::VectorXd>(data.X[i].data(), p - 1);
    }
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd eta = design * coef;
        Eigen::VectorXd mu(data.n()), wdiag(data.n());
        for (int i = 0; i < data.n(); ++i) {
            mu[i] = sigmoid(eta[i]);
            wdiag[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
        }
        const Eigen::VectorXd z = eta + (data.y - mu).cwiseQuotient(wdiag);
        const Eigen::MatrixXd wx = wdiag.asDiagonal() * design;
        const Eigen::VectorXd next =
            (design.transpose() * wx).ldlt().solve(design.transpose() * (wdiag.asDiagonal() * z));
        if ((next - coef).norm() < 1e-10) {
            coef = next;
            break;
        }
        coef = next;
    }
    const Eigen::VectorXd eta = design * coef;
    double nll = 0.0;
    for (int i = 0; i < data.n(); ++i) nll += log1pexp(eta[i]) - data.y[i] * eta[i];
    return nll;
}

DataSet planted_normal(int n, int s, int t, const std::vector<int>& zero_rows,
                       std::mt19937_64& rng, double noise_sd = 0.2) {
    FactorModel truth{random_matrix(s, 2, rng, 1.0), random_matrix(2, t, rng, 1.0), 0.0};
    for (int j : zero_rows) truth.U.row(j).setZero();
    DataSet data;
    data.family = ResponseFamily::normal(1.0);
    data.y.resize(n);
    std::normal_distribution<double> noise(0.0, noise_sd);
    for (int i = 0; i < n; ++i) {
        data.X.push_back(random_matrix(s, t, rng));
        data.y[i] = linear_predictor(truth, data.X[i]) + noise(rng);
    }
    return data;
}

}  // namespace

TEST_CASE("grouped fit with huge lambda keeps only the intercept") {
    std::mt19937_64 rng(211);
    const DataSet data = planted_normal(60, 4, 3, {1}, rng);
    GroupedGLMProblem problem{&data, GroupAxis::Rows, {}, {}};
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    const GroupedFit fit = grouped_glm_fit(problem, 1e9, w, SolverConfig{});
    CHECK(fit.C.isZero(0.0));
    CHECK(fit.active_groups.empty());
    CHECK(fit.beta == doctest::Approx(data.y.mean()).epsilon(1e-3));
}

TEST_CASE("grouped fit at lambda zero matches an IRLS oracle") {
    std::mt19937_64 rng(223);
    DataSet data;
    data.family = ResponseFamily::bernoulli();
    FactorModel truth{random_matrix(3, 1, rng, 0.7), random_matrix(1, 3, rng, 0.7), 0.2};
    data.y.resize(120);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 120; ++i) {
        data.X.push_back(random_matrix(3, 3, rng));
        data.y[i] = unif(rng) < sigmoid(linear_predictor(truth, data.X[i])) ? 1.0 : 0.0;
    }
    GroupedGLMProblem problem{&data, GroupAxis::Rows, {}, {}};
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(3);
    SolverConfig config;
    config.epsilon = 1e-9;
    config.max_iter = 200000;
    const GroupedFit fit = grouped_glm_fit(problem, 0.0, w, config);
    CHECK(static_cast<int>(fit.active_groups.size()) == 3);
    CHECK(fit.nll == doctest::Approx(irls_full_glm_nll(data)).epsilon(1e-6));
}

TEST_CASE("grouped selection recovers planted zero rows on normal data") {
    std::mt19937_64 rng(227);
    int exact = 0;
    const int reps = 20;
    for (int rep = 0; rep < reps; ++rep) {
        const DataSet data = planted_normal(500, 5, 4, {1, 3}, rng);
        GroupedGLMProblem problem{&data, GroupAxis::Rows, {}, {}};
        const GroupedFit fit = grouped_glm_select(problem, SolverConfig{}, ICKind::AIC, 50);
        const std::vector<int> want = {0, 2, 4};
        if (fit.active_groups == want) ++exact;
    }
    CHECK(exact >= static_cast<int>(0.9 * reps));
}

TEST_CASE("stage-2 restriction produces structural zeros") {
    std::mt19937_64 rng(229);
    const DataSet data = planted_normal(200, 4, 4, {0}, rng);
    GroupedGLMProblem stage2{&data, GroupAxis::Cols, {1, 2, 3}, {}};
    const Eigen::VectorXd w = Eigen::VectorXd::Ones(4);
    const GroupedFit fit = grouped_glm_fit(stage2, 0.01, w, SolverConfig{});
    for (int k = 0; k < 4; ++k) CHECK(fit.C(0, k) == 0.0);  // removed row absent
}

TEST_CASE("row-col benchmark recovers a planted pattern") {
    std::mt19937_64 rng(233);
    FactorModel truth{random_matrix(5, 2, rng, 1.0), random_matrix(2, 5, rng, 1.0), 0.0};
    truth.U.row(1).setZero();
    truth.U.row(4).setZero();
    truth.V.col(0).setZero();
    truth.V.col(2).setZero();
    DataSet data;
    data.family = ResponseFamily::normal(1.0);
    data.y.resize(400);
    std::normal_distribution<double> noise(0.0, 0.2);
    for (int i = 0; i < 400; ++i) {
        data.X.push_back(random_matrix(5, 5, rng));
        data.y[i] = linear_predictor(truth, data.X[i]) + noise(rng);
    }
    BenchmarkOptions opts;
    const SelectionReport rc = benchmark_row_col(data, opts);
    CHECK(rc.active_rows == std::vector<int>{0, 2, 3});
    CHECK(rc.active_cols == std::vector<int>{1, 3, 4});
    const SelectionReport cr = benchmark_col_row(data, opts);
    CHECK(cr.active_rows == std::vector<int>{0, 2, 3});
    CHECK(cr.active_cols == std::vector<int>{1, 3, 4});
    // coefficients outside the surviving rows are structurally absent
    for (int k = 0; k < 5; ++k) {
        CHECK(rc.B_hat(1, k) == 0.0);
        CHECK(rc.B_hat(4, k) == 0.0);
    }
}

TEST_CASE("benchmark flags an emptied stage 1") {
    // responses independent of the predictors: stage 1 should drop everything
    std::mt19937_64 rng(239);
    DataSet data;
    data.family = ResponseFamily::normal(1.0);
    data.y.resize(300);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        data.X.push_back(random_matrix(4, 4, rng));
        data.y[i] = noise(rng);
    }
    BenchmarkOptions opts;
    const SelectionReport report = benchmark_row_col(data, opts);
    if (report.active_rows.empty()) {
        CHECK(!report.warnings.empty());
        CHECK(report.B_hat.isZero(0.0));
        CHECK(report.active_cols.empty());
    }
}

TEST_CASE("structured lasso is exactly the rank-one pipeline") {
    std::mt19937_64 rng(241);
    DataSet data;
    data.family = ResponseFamily::bernoulli();
    FactorModel truth{random_matrix(4, 1, rng, 0.9), random_matrix(1, 4, rng, 0.9), 0.0};
    data.y.resize(100);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        data.X.push_back(random_matrix(4, 4, rng));
        data.y[i] = unif(rng) < sigmoid(linear_predictor(truth, data.X[i])) ? 1.0 : 0.0;
    }
    BenchmarkOptions bopts;
    bopts.lambda_grid_size = 12;
    const SelectionReport a = benchmark_structured_lasso(data, bopts);

    SelectOptions sopts;
    sopts.ranks = {1};
    sopts.ic = bopts.ic;
    sopts.solver = bopts.solver;
    sopts.lambda_grid_size = bopts.lambda_grid_size;
    const SelectionReport b = select(data, sopts);
    CHECK(a.chosen_rank == 1);
    CHECK(a.chosen_lambda == b.chosen_lambda);
    CHECK((a.B_hat - b.B_hat).norm() == 0.0);
}
