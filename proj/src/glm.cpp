#include "matreg/glm.hpp"

#include <cmath>

namespace matreg {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log1pexp(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

double logit(double p) { return std::log(p / (1.0 - p)); }

ResponseFamily ResponseFamily::bernoulli() { return ResponseFamily{Family::Bernoulli, {}, 1.0}; }

ResponseFamily ResponseFamily::binomial(std::vector<int> per_sample_trials) {
    return ResponseFamily{Family::Binomial, std::move(per_sample_trials), 1.0};
}

ResponseFamily ResponseFamily::binomial_uniform(int trials, int n_samples) {
    return ResponseFamily{Family::Binomial, std::vector<int>(static_cast<size_t>(n_samples), trials), 1.0};
}

ResponseFamily ResponseFamily::normal(double sigma) {
    return ResponseFamily{Family::Normal, {}, sigma};
}

const char* ResponseFamily::name() const {
    switch (kind) {
        case Family::Bernoulli: return "bernoulli";
        case Family::Binomial: return "binomial";
        case Family::Normal: return "normal";
    }
    return "unknown";
}

void DataSet::validate() const {
    if (X.empty()) throw ValidationError("dataset has no samples");
    const int nrows = static_cast<int>(X.front().rows());
    const int ncols = static_cast<int>(X.front().cols());
    if (nrows < 1 || ncols < 1) throw DimensionError("predictor matrices must be at least 1x1");
    if (y.size() != n()) throw DimensionError("response count does not match sample count");
    for (int i = 0; i < n(); ++i) {
        if (X[i].rows() != nrows || X[i].cols() != ncols)
            throw DimensionError("predictor matrix " + std::to_string(i) + " has inconsistent shape");
        if (!X[i].allFinite())
            throw ValidationError("predictor matrix " + std::to_string(i) + " contains non-finite entries");
    }
    switch (family.kind) {
        case Family::Bernoulli:
            for (int i = 0; i < n(); ++i) {
                if (y[i] != 0.0 && y[i] != 1.0)
                    throw ValidationError("bernoulli response " + std::to_string(i) + " not in {0,1}");
            }
            break;
        case Family::Binomial: {
            if (static_cast<int>(family.trials.size()) != n())
                throw ValidationError("binomial trials must be given per sample");
            for (int i = 0; i < n(); ++i) {
                const int m = family.trials[i];
                if (m < 1) throw ValidationError("binomial trials must be >= 1");
                if (y[i] < 0.0 || y[i] > m || y[i] != std::floor(y[i]))
                    throw ValidationError("binomial response " + std::to_string(i) + " not in {0,...," +
                                          std::to_string(m) + "}");
            }
            break;
        }
        case Family::Normal:
            if (!(family.sigma > 0.0)) throw ValidationError("normal sigma must be positive");
            if (!y.allFinite()) throw ValidationError("normal responses must be finite");
            break;
    }
}

double linear_predictor(const FactorModel& model, const Eigen::MatrixXd& X) {
    if (model.U.rows() != X.rows() || model.V.cols() != X.cols())
        throw DimensionError("predictor shape does not match model");
    // <UV, X> = <U, X V^T>; avoids forming B for every sample
    return model.beta + (model.U.cwiseProduct(X * model.V.transpose())).sum();
}

double bilinear_predictor(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const Eigen::MatrixXd& X) {
    if (a.size() != X.rows() || b.size() != X.cols())
        throw DimensionError("vector lengths do not match predictor shape");
    return a.dot(X * b);
}

namespace {

// Per-sample contributions to the dropped-constant NLL and to the working
// residual rho_i = w_i (y_i - mu_i).
double nll_from_eta(const ResponseFamily& family, const Eigen::VectorXd& y,
                    const Eigen::VectorXd& eta) {
    const int n = static_cast<int>(y.size());
    double total = 0.0;
    switch (family.kind) {
        case Family::Bernoulli:
            for (int i = 0; i < n; ++i) total += log1pexp(eta[i]) - y[i] * eta[i];
            break;
        case Family::Binomial:
            for (int i = 0; i < n; ++i)
                total += family.trials[i] * log1pexp(eta[i]) - y[i] * eta[i];
            break;
        case Family::Normal: {
            const double inv = 1.0 / (2.0 * family.sigma * family.sigma);
            for (int i = 0; i < n; ++i) {
                const double r = y[i] - eta[i];
                total += inv * r * r;
            }
            break;
        }
    }
    return total;
}

Eigen::VectorXd working_residuals(const ResponseFamily& family, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& eta) {
    const int n = static_cast<int>(y.size());
    Eigen::VectorXd rho(n);
    switch (family.kind) {
        case Family::Bernoulli:
            for (int i = 0; i < n; ++i) rho[i] = y[i] - sigmoid(eta[i]);
            break;
        case Family::Binomial:
            for (int i = 0; i < n; ++i) rho[i] = y[i] - family.trials[i] * sigmoid(eta[i]);
            break;
        case Family::Normal: {
            const double w = 1.0 / (family.sigma * family.sigma);
            rho = w * (y - eta);
            break;
        }
    }
    return rho;
}

}  // namespace

BlockView::BlockView(const DataSet& data, int rows, int cols)
    : data_(&data), rows_(rows), cols_(cols),
      P_(data.n(), rows * cols), pnorm_(data.n()) {}

void BlockView::finalize() {
    const int n = data_->n();
    for (int i = 0; i < n; ++i) pnorm_[i] = P_.row(i).norm();
    const ResponseFamily& fam = data_->family;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double term = (1.0 + pnorm_[i]) * (1.0 + pnorm_[i]);
        switch (fam.kind) {
            case Family::Bernoulli: sum += term; break;
            case Family::Binomial: sum += fam.trials[i] * term; break;
            case Family::Normal: sum += term / (fam.sigma * fam.sigma); break;
        }
    }
    lipschitz_ = std::sqrt(2.0) * sum;
}

BlockView BlockView::u_block(const DataSet& data, const Eigen::MatrixXd& V) {
    if (V.cols() != data.t()) throw DimensionError("V column count does not match predictors");
    const int s = data.s(), r = static_cast<int>(V.rows());
    BlockView view(data, s, r);
    Eigen::MatrixXd Pi(s, r);
    for (int i = 0; i < data.n(); ++i) {
        Pi.noalias() = data.X[i] * V.transpose();
        view.P_.row(i) = Eigen::Map<const Eigen::VectorXd>(Pi.data(), Pi.size());
    }
    view.finalize();
    return view;
}

BlockView BlockView::v_block(const DataSet& data, const Eigen::MatrixXd& U) {
    if (U.rows() != data.s()) throw DimensionError("U row count does not match predictors");
    const int r = static_cast<int>(U.cols()), t = data.t();
    BlockView view(data, r, t);
    Eigen::MatrixXd Pi(r, t);
    for (int i = 0; i < data.n(); ++i) {
        Pi.noalias() = U.transpose() * data.X[i];
        view.P_.row(i) = Eigen::Map<const Eigen::VectorXd>(Pi.data(), Pi.size());
    }
    view.finalize();
    return view;
}

BlockView BlockView::full(const DataSet& data) {
    BlockView view(data, data.s(), data.t());
    for (int i = 0; i < data.n(); ++i) {
        view.P_.row(i) =
            Eigen::Map<const Eigen::VectorXd>(data.X[i].data(), data.X[i].size());
    }
    view.finalize();
    return view;
}

Eigen::VectorXd BlockView::linear_predictors(const Eigen::MatrixXd& M, double beta) const {
    if (M.rows() != rows_ || M.cols() != cols_)
        throw DimensionError("block coefficient shape mismatch");
    Eigen::VectorXd eta = P_ * Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
    eta.array() += beta;
    return eta;
}

double BlockView::nll(const Eigen::MatrixXd& M, double beta) const {
    return nll_from_eta(data_->family, data_->y, linear_predictors(M, beta));
}

void BlockView::gradient(const Eigen::MatrixXd& M, double beta,
                         Eigen::MatrixXd& grad_M, double& grad_beta) const {
    const Eigen::VectorXd eta = linear_predictors(M, beta);
    const Eigen::VectorXd rho = working_residuals(data_->family, data_->y, eta);
    Eigen::VectorXd g = -(P_.transpose() * rho);
    grad_M = Eigen::Map<const Eigen::MatrixXd>(g.data(), rows_, cols_);
    grad_beta = -rho.sum();
}

double negative_log_likelihood(const FactorModel& model, const DataSet& data) {
    data.validate();
    if (model.U.rows() != data.s() || model.V.cols() != data.t())
        throw DimensionError("model shape does not match dataset");
    const int n = data.n();
    Eigen::VectorXd eta(n);
    for (int i = 0; i < n; ++i) eta[i] = linear_predictor(model, data.X[i]);
    return nll_from_eta(data.family, data.y, eta);
}

Gradients gradients(const FactorModel& model, const DataSet& data) {
    if (model.U.rows() != data.s() || model.V.cols() != data.t())
        throw DimensionError("model shape does not match dataset");
    const int n = data.n();
    Eigen::VectorXd eta(n);
    for (int i = 0; i < n; ++i) eta[i] = linear_predictor(model, data.X[i]);
    const Eigen::VectorXd rho = working_residuals(data.family, data.y, eta);

    Gradients g;
    g.U = Eigen::MatrixXd::Zero(model.U.rows(), model.U.cols());
    g.V = Eigen::MatrixXd::Zero(model.V.rows(), model.V.cols());
    for (int i = 0; i < n; ++i) {
        g.U.noalias() -= rho[i] * (data.X[i] * model.V.transpose());
        g.V.noalias() -= rho[i] * (model.U.transpose() * data.X[i]);
    }
    g.beta = -rho.sum();
    return g;
}

double lipschitz_u(const Eigen::MatrixXd& V, const DataSet& data) {
    return BlockView::u_block(data, V).lipschitz();
}

double lipschitz_v(const Eigen::MatrixXd& U, const DataSet& data) {
    return BlockView::v_block(data, U).lipschitz();
}

}  // namespace matreg
