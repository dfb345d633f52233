#pragma once

#include <Eigen/Dense>

#include "matreg/data.hpp"
#include "matreg/model.hpp"

namespace matreg {

double sigmoid(double x);
double log1pexp(double x);
double logit(double p);

/// beta + <UV, X>, the systematic part of the GLM.
double linear_predictor(const FactorModel& model, const Eigen::MatrixXd& X);

/// a^T X b. Equals <a b^T, X>; kept as an independent route for testing that
/// identity against linear_predictor.
double bilinear_predictor(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const Eigen::MatrixXd& X);

/// Negative log-likelihood with additive constants independent of (U,V,beta)
/// dropped (the binomial coefficient term and n/2 log(2 pi sigma^2)), so
/// values are comparable only within a fit.
double negative_log_likelihood(const FactorModel& model, const DataSet& data);

struct Gradients {
    Eigen::MatrixXd U;  // s x r
    Eigen::MatrixXd V;  // r x t
    double beta = 0.0;
};

Gradients gradients(const FactorModel& model, const DataSet& data);

/// Stepsize constants sqrt(2) * sum_i c_i (1 + ||X_i V^T||_F)^2 and the
/// U^T X_i analogue, with c_i = 1 (Bernoulli), n_i (Binomial), 1/sigma^2
/// (Normal). Dominates the block-gradient Lipschitz constant, so a 1/L step
/// is always a descent step.
double lipschitz_u(const Eigen::MatrixXd& V, const DataSet& data);
double lipschitz_v(const Eigen::MatrixXd& U, const DataSet& data);

/// One coefficient block M viewed against fixed per-sample designs P_i, so
/// that eta_i = beta + <M, P_i>. Instantiations: the U block (P_i = X_i V^T),
/// the V block (P_i = U^T X_i), and the full-matrix GLM (P_i = X_i). All of
/// the solver's likelihood work happens through this view; the P_i are built
/// once per block update.
class BlockView {
public:
    static BlockView u_block(const DataSet& data, const Eigen::MatrixXd& V);
    static BlockView v_block(const DataSet& data, const Eigen::MatrixXd& U);
    static BlockView full(const DataSet& data);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double nll(const Eigen::MatrixXd& M, double beta) const;
    void gradient(const Eigen::MatrixXd& M, double beta,
                  Eigen::MatrixXd& grad_M, double& grad_beta) const;
    double lipschitz() const { return lipschitz_; }

    Eigen::VectorXd linear_predictors(const Eigen::MatrixXd& M, double beta) const;

private:
    BlockView(const DataSet& data, int rows, int cols);
    void finalize();

    const DataSet* data_;
    int rows_, cols_;
    Eigen::MatrixXd P_;          // n x (rows*cols); row i = vec(P_i), column-major
    Eigen::VectorXd pnorm_;      // ||P_i||_F
    double lipschitz_ = 0.0;
};

}  // namespace matreg
