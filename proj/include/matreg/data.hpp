#pragma once

#include <vector>

#include <Eigen/Dense>

#include "matreg/errors.hpp"

namespace matreg {

enum class Family { Bernoulli, Binomial, Normal };

/// Response distribution together with its per-family nuisance quantities:
/// binomial trial counts n_i and the normal dispersion sigma (fixed, never
/// estimated).
struct ResponseFamily {
    Family kind = Family::Bernoulli;
    std::vector<int> trials;  // Binomial only, one n_i per sample
    double sigma = 1.0;       // Normal only

    static ResponseFamily bernoulli();
    static ResponseFamily binomial(std::vector<int> per_sample_trials);
    static ResponseFamily binomial_uniform(int trials, int n_samples);
    static ResponseFamily normal(double sigma = 1.0);

    const char* name() const;
};

/// n samples, each an s x t predictor matrix plus a scalar response.
struct DataSet {
    std::vector<Eigen::MatrixXd> X;  // all matrices share the same s x t shape
    Eigen::VectorXd y;
    ResponseFamily family;

    int n() const { return static_cast<int>(X.size()); }
    int s() const { return X.empty() ? 0 : static_cast<int>(X.front().rows()); }
    int t() const { return X.empty() ? 0 : static_cast<int>(X.front().cols()); }

    // Checks shapes, finiteness, and response validity for the family.
    void validate() const;
};

}  // namespace matreg
