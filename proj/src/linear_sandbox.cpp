#include "boed/linear_sandbox.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <stdexcept>

namespace boed {

void LinearModel::require_valid() const {
    if (S.rows() != T.rows() && p() > 0)
        throw std::invalid_argument("LinearModel: S and T row mismatch");
    if (C_pr.rows() != n() || C_pr.cols() != n())
        throw std::invalid_argument("LinearModel: C_pr dimension mismatch");
    if (C_xi.rows() != p() || C_xi.cols() != p())
        throw std::invalid_argument("LinearModel: C_xi dimension mismatch");
    if (m_pr.size() != n() || xi_bar.size() != p() || xi_mean.size() != p())
        throw std::invalid_argument("LinearModel: mean dimension mismatch");
    if (sigma2 <= 0.0) throw std::invalid_argument("LinearModel: sigma2 must be positive");
}

Mat random_spd(int n, RngStream& stream) {
    if (n == 0) return Mat(0, 0);
    Mat G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = stream.normal();
    const Eigen::HouseholderQR<Mat> qr(G);
    Mat Q = qr.householderQ();
    Vec lambda(n);
    for (int i = 0; i < n; ++i)
        lambda[i] = std::pow(10.0, -3.0 + 3.0 * stream.uniform());  // log-uniform on [1e-3, 1]
    return Q * lambda.asDiagonal() * Q.transpose();
}

LinearModel random_linear_model(int d, int n, int p, RngStream& stream, bool offset_xi_bar) {
    LinearModel model;
    model.S = Mat(d, n);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < n; ++j) model.S(i, j) = stream.normal();
    model.T = Mat(d, p);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < p; ++j) model.T(i, j) = stream.normal();
    model.C_pr = random_spd(n, stream);
    model.C_xi = random_spd(p, stream);
    model.m_pr = stream.gaussian_vector(n);
    model.xi_mean = stream.gaussian_vector(p);
    model.xi_bar = model.xi_mean;
    if (offset_xi_bar) model.xi_bar += stream.gaussian_vector(p);
    model.sigma2 = 1e-4 + 0.01 * stream.uniform();
    model.require_valid();
    return model;
}

Mat analytic_posterior_cov(const LinearModel& model) {
    model.require_valid();
    const int d = model.d();
    const Mat Gnu = model.T * model.C_xi * model.T.transpose() +
                    model.sigma2 * Mat::Identity(d, d);
    const Mat H = model.S.transpose() * Gnu.llt().solve(model.S);
    const Mat prec = H + Mat(model.C_pr.llt().solve(Mat::Identity(model.n(), model.n())));
    return prec.llt().solve(Mat::Identity(model.n(), model.n()));
}

Mat marginal_posterior_cov(const LinearModel& model) {
    model.require_valid();
    const int n = model.n(), p = model.p(), d = model.d();
    const Mat Gn_inv = Mat::Identity(d, d) / model.sigma2;
    const Mat StGS = model.S.transpose() * Gn_inv * model.S;
    const Mat Cpr_inv = model.C_pr.llt().solve(Mat::Identity(n, n));
    Mat prec = Cpr_inv + StGS;
    if (p > 0) {
        const Mat Cxi_inv = model.C_xi.llt().solve(Mat::Identity(p, p));
        const Mat inner = Cxi_inv + model.T.transpose() * Gn_inv * model.T;
        const Mat cross = model.S.transpose() * Gn_inv * model.T;
        prec -= cross * inner.llt().solve(cross.transpose());
    }
    return prec.llt().solve(Mat::Identity(n, n));
}

double smw_check(const LinearModel& model) {
    model.require_valid();
    const int d = model.d(), p = model.p();
    const Mat Gnu = model.T * model.C_xi * model.T.transpose() +
                    model.sigma2 * Mat::Identity(d, d);
    const Mat lhs = Gnu.llt().solve(Mat::Identity(d, d));
    Mat rhs = Mat::Identity(d, d) / model.sigma2;
    if (p > 0) {
        const Mat Cxi_inv = model.C_xi.llt().solve(Mat::Identity(p, p));
        const Mat inner = Cxi_inv + model.T.transpose() * model.T / model.sigma2;
        rhs -= (model.T / model.sigma2) * inner.llt().solve(model.T.transpose() / model.sigma2);
    }
    // Relative to the inverse itself: the entries scale like 1/sigma^2, so an
    // absolute deviation would just measure the noise level.
    return (lhs - rhs).cwiseAbs().maxCoeff() / lhs.cwiseAbs().maxCoeff();
}

ErrorSpectrum error_spectrum_report(const LinearModel& model) {
    model.require_valid();
    const int d = model.d();
    const Mat TCT = model.T * model.C_xi * model.T.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(TCT);
    ErrorSpectrum out;
    // Descending order.
    out.eigenvalues = es.eigenvalues().reverse();
    out.eigenvectors = es.eigenvectors().rowwise().reverse();
    out.sensor_variances = Vec(d);
    for (int i = 0; i < d; ++i) {
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double proj = out.eigenvectors(i, j);
            var += (out.eigenvalues[j] + model.sigma2) * proj * proj;
        }
        out.sensor_variances[i] = var;
    }
    return out;
}

DenseGaussian::DenseGaussian(Vec mean, Mat cov) : mean_(std::move(mean)), cov_(std::move(cov)) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
        throw std::invalid_argument("DenseGaussian: dimension mismatch");
    llt_.compute(cov_);
    if (mean_.size() > 0 && llt_.info() != Eigen::Success)
        throw std::invalid_argument("DenseGaussian: covariance not SPD");
    chol_ = llt_.matrixL();
}

Vec DenseGaussian::sample(RngStream& stream) const {
    return mean_ + chol_ * stream.gaussian_vector(dim());
}

namespace {

class LinearLinearization : public Linearization {
public:
    LinearLinearization(const LinearModel& model, const Vec& m)
        : model_(&model), value_(model.S * m + model.T * model.xi_bar) {}

    const Vec& value() const override { return value_; }
    Vec apply_jacobian(const Vec& dm) const override { return model_->S * dm; }
    Vec apply_jacobian_adjoint(const Vec& r) const override { return model_->S.transpose() * r; }

private:
    const LinearModel* model_;
    Vec value_;
};

}  // namespace

std::unique_ptr<Linearization> LinearForward::linearize(const Vec& m) const {
    return std::make_unique<LinearLinearization>(*model_, m);
}

}  // namespace boed
