#pragma once

#include <Eigen/Cholesky>

#include "boed/model.hpp"

namespace boed {

// Dense linear model y = S m + T xi + eta with Gaussian priors on both
// parameters; every posterior quantity has a closed form, so this doubles as
// the analytic oracle for the generic machinery.
struct LinearModel {
    Mat S;       // d x n
    Mat T;       // d x p
    Mat C_pr;    // n x n SPD
    Mat C_xi;    // p x p SPD
    Vec m_pr;
    Vec xi_bar;  // nominal value; equals the xi-mean unless offset
    Vec xi_mean;
    double sigma2 = 0.0;

    int d() const { return static_cast<int>(S.rows()); }
    int n() const { return static_cast<int>(S.cols()); }
    int p() const { return static_cast<int>(T.cols()); }
    void require_valid() const;
};

// Random SPD matrix Q diag(lambda) Q^T with a log-uniform spectrum on
// [1e-3, 1].
Mat random_spd(int n, RngStream& stream);

// Random well-posed instance; xi_bar = xi_mean unless offset is set.
LinearModel random_linear_model(int d, int n, int p, RngStream& stream, bool offset_xi_bar = false);

// Posterior covariance of m given y under exact marginalization of xi:
// (S^T (T C_xi T^T + sigma^2 I)^{-1} S + C_pr^{-1})^{-1}.
Mat analytic_posterior_cov(const LinearModel& model);

// The same covariance through the joint-precision route, reduced with one
// dense block elimination.
Mat marginal_posterior_cov(const LinearModel& model);

// Max-norm deviation of the Woodbury expansion of (T C_xi T^T + sigma^2 I)^{-1},
// relative to the max-norm of the inverse.
double smw_check(const LinearModel& model);

struct ErrorSpectrum {
    Vec eigenvalues;       // of T C_xi T^T, descending
    Mat eigenvectors;
    Vec sensor_variances;  // Var{nu_i} including the noise floor
};

ErrorSpectrum error_spectrum_report(const LinearModel& model);

// ParamSpace over a dense Gaussian with identity mass matrix.
class DenseGaussian : public ParamSpace {
public:
    DenseGaussian(Vec mean, Mat cov);

    int dim() const override { return static_cast<int>(mean_.size()); }
    Vec mean() const override { return mean_; }
    Vec apply_mass(const Vec& f) const override { return f; }
    Vec apply_cov(const Vec& dual) const override { return cov_ * dual; }
    Vec apply_precision(const Vec& primal) const override { return llt_.solve(primal); }
    double cm_inner(const Vec& a, const Vec& b) const override { return a.dot(llt_.solve(b)); }
    Vec sample(RngStream& stream) const override;
    double trace_cov() const override { return cov_.trace(); }
    Vec cov_diag() const override { return cov_.diagonal(); }

    const Mat& cov() const { return cov_; }

private:
    Vec mean_;
    Mat cov_;
    Eigen::LLT<Mat> llt_;
    Mat chol_;  // lower factor for sampling
};

// The approximate map F(m) = S m + T xi_bar and its (constant) linearization.
class LinearForward : public ForwardModel {
public:
    explicit LinearForward(const LinearModel& model) : model_(&model) {}

    int n_obs() const override { return model_->d(); }
    int n_param() const override { return model_->n(); }
    Vec apply(const Vec& m) const override { return model_->S * m + model_->T * model_->xi_bar; }
    std::unique_ptr<Linearization> linearize(const Vec& m) const override;

private:
    const LinearModel* model_;
};

// Accurate/approximate pair for the error-statistics and training pipelines.
class LinearSampled : public SampledModel {
public:
    explicit LinearSampled(const LinearModel& model)
        : model_(&model),
          m_prior_(model.m_pr, model.C_pr),
          xi_prior_(model.xi_mean, model.C_xi) {}

    int n_obs() const override { return model_->d(); }
    Vec forward_full(const Vec& m, const Vec& xi) const override {
        return model_->S * m + model_->T * xi;
    }
    Vec forward_approx(const Vec& m) const override {
        return model_->S * m + model_->T * model_->xi_bar;
    }
    Vec sample_m(RngStream& stream) const override { return m_prior_.sample(stream); }
    Vec sample_xi(RngStream& stream) const override { return xi_prior_.sample(stream); }

    const DenseGaussian& m_prior() const { return m_prior_; }
    const DenseGaussian& xi_prior() const { return xi_prior_; }

private:
    const LinearModel* model_;
    DenseGaussian m_prior_;
    DenseGaussian xi_prior_;
};

}  // namespace boed
