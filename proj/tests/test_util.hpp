#pragma once

#include <random>

#include "matreg/glm.hpp"

namespace matreg::testutil {

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> d(0.0, scale);
    Eigen::MatrixXd M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = d(rng);
    return M;
}

inline FactorModel random_model(int s, int t, int r, std::mt19937_64& rng, double scale = 0.5) {
    std::normal_distribution<double> d(0.0, scale);
    return FactorModel{random_matrix(s, r, rng, scale), random_matrix(r, t, rng, scale), d(rng)};
}

// Random dataset with responses drawn from the given family at a random
// generating model, so the likelihood landscape is realistic.
inline DataSet random_dataset(int n, int s, int t, Family kind, std::mt19937_64& rng) {
    DataSet data;
    const FactorModel truth = random_model(s, t, 2, rng, 0.4);
    data.y.resize(n);
    data.X.reserve(n);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_int_distribution<int> trial_count(1, 5);

    std::vector<int> trials;
    for (int i = 0; i < n; ++i) {
        data.X.push_back(random_matrix(s, t, rng));
        const double eta = linear_predictor(truth, data.X.back());
        switch (kind) {
            case Family::Bernoulli:
                data.y[i] = unif(rng) < sigmoid(eta) ? 1.0 : 0.0;
                break;
            case Family::Binomial: {
                const int m = trial_count(rng);
                trials.push_back(m);
                int hits = 0;
                for (int k = 0; k < m; ++k)
                    if (unif(rng) < sigmoid(eta)) ++hits;
                data.y[i] = hits;
                break;
            }
            case Family::Normal:
                data.y[i] = eta + noise(rng);
                break;
        }
    }
    switch (kind) {
        case Family::Bernoulli: data.family = ResponseFamily::bernoulli(); break;
        case Family::Binomial: data.family = ResponseFamily::binomial(trials); break;
        case Family::Normal: data.family = ResponseFamily::normal(1.0); break;
    }
    return data;
}

// Central finite differences of the negative log-likelihood in every
// coordinate of (U, V, beta).
inline Gradients fd_gradients(const FactorModel& model, const DataSet& data, double h = 1e-5) {
    Gradients g;
    g.U.resizeLike(model.U);
    g.V.resizeLike(model.V);
    FactorModel probe = model;
    for (int i = 0; i < model.U.rows(); ++i)
        for (int j = 0; j < model.U.cols(); ++j) {
            probe.U(i, j) = model.U(i, j) + h;
            const double up = negative_log_likelihood(probe, data);
            probe.U(i, j) = model.U(i, j) - h;
            const double dn = negative_log_likelihood(probe, data);
            probe.U(i, j) = model.U(i, j);
            g.U(i, j) = (up - dn) / (2.0 * h);
        }
    for (int i = 0; i < model.V.rows(); ++i)
        for (int j = 0; j < model.V.cols(); ++j) {
            probe.V(i, j) = model.V(i, j) + h;
            const double up = negative_log_likelihood(probe, data);
            probe.V(i, j) = model.V(i, j) - h;
            const double dn = negative_log_likelihood(probe, data);
            probe.V(i, j) = model.V(i, j);
            g.V(i, j) = (up - dn) / (2.0 * h);
        }
    probe.beta = model.beta + h;
    const double up = negative_log_likelihood(probe, data);
    probe.beta = model.beta - h;
    const double dn = negative_log_likelihood(probe, data);
    g.beta = (up - dn) / (2.0 * h);
    return g;
}

}  // namespace matreg::testutil
