#include "boed/prior.hpp"

#include <cmath>

namespace boed {

GaussianFieldPrior::GaussianFieldPrior(Support support, Vec mean, SpMat A, SpMat M,
                                       Eigen::Vector3d theta_diag, double gamma,
                                       double robin_beta, std::string tag)
    : support_(support),
      mean_(std::move(mean)),
      op_(std::move(A), tag + "-A"),
      mass_(std::move(M), tag + "-M"),
      theta_diag_(theta_diag),
      gamma_(gamma),
      robin_beta_(robin_beta) {
    // Exact mass factor G G^T = M so samples carry the covariance A^-1 M A^-1.
    Eigen::SimplicialLLT<SpMat, Eigen::Lower> mass_llt;
    mass_llt.compute(SpMat(mass_.matrix().selfadjointView<Eigen::Lower>()));
    if (mass_llt.info() != Eigen::Success)
        throw std::runtime_error("GaussianFieldPrior: mass factorization failed");
    mass_chol_ = mass_llt.permutationPinv() * SpMat(mass_llt.matrixL());
    // Shared read-only use across workers requires the factors up front.
    op_.prefactor();
    mass_.prefactor();
}

Vec GaussianFieldPrior::apply_cov(const Vec& dual) const {
    return op_.solve_direct(mass_.apply(op_.solve_direct(dual)));
}

Vec GaussianFieldPrior::apply_precision(const Vec& primal) const {
    return op_.apply(mass_.solve_direct(op_.apply(primal)));
}

double GaussianFieldPrior::cm_inner(const Vec& a, const Vec& b) const {
    const Vec Aa = op_.apply(a);
    return Aa.dot(mass_.solve_direct(op_.apply(b)));
}

Vec GaussianFieldPrior::sample(RngStream& stream) const {
    const Vec z = stream.gaussian_vector(op_.dim());
    return mean_ + op_.solve_direct(Vec(mass_chol_ * z));
}

void GaussianFieldPrior::ensure_dense() const {
    if (dense_ready_) return;
    const int n = dim();
    const Mat Ainv = op_.solve_direct(Mat(Mat::Identity(n, n)));
    const Mat Mdense = mass_.dense();
    dense_cov_ = Ainv * Mdense * Ainv;
    const Mat X = dense_cov_ * Mdense;  // covariance as an operator on the space
    trace_cov_ = X.trace();
    cov_diag_ = dense_cov_.diagonal();
    dense_ready_ = true;
}

double GaussianFieldPrior::trace_cov() const {
    ensure_dense();
    return trace_cov_;
}

Vec GaussianFieldPrior::cov_diag() const {
    ensure_dense();
    return cov_diag_;
}

Mat GaussianFieldPrior::dense_cov() const {
    ensure_dense();
    return dense_cov_;
}

GaussianFieldPrior make_m_prior(const Mesh& mesh, const PriorOverrides& ov) {
    const double theta = ov.theta.value_or(0.1);
    const double alpha = ov.alpha.value_or(1.0);
    const double beta = ov.robin_beta.value_or(std::sqrt(theta * alpha) / 1.42);
    Eigen::Matrix2d Theta = theta * Eigen::Matrix2d::Identity();
    SpMat A = quad_grid_stiffness(mesh.nx, mesh.ny, mesh.Lx, mesh.Ly, Theta);
    const SpMat M = quad_grid_mass(mesh.nx, mesh.ny, mesh.Lx, mesh.Ly);
    A += alpha * M;
    if (beta != 0.0) A += SpMat(beta * quad_grid_perimeter_mass(mesh.nx, mesh.ny, mesh.Lx, mesh.Ly));
    return GaussianFieldPrior(Support::Bottom, Vec::Constant(mesh.n_bottom(), 1.0), A, M,
                              {theta, theta, 0.0}, alpha, beta, "prior-m");
}

GaussianFieldPrior make_xi_prior(const Mesh& mesh, const PriorOverrides& ov) {
    const Eigen::Vector3d Theta =
        ov.Theta_diag.value_or(Eigen::Vector3d(0.25, 0.25, 0.25 / 100.0));
    const double gamma = ov.gamma.value_or(50.0);
    const double beta = ov.robin_beta.value_or(std::sqrt(Theta.minCoeff() * gamma) / 1.42);
    SpMat A = volume_stiffness(mesh, Theta, nullptr, false);
    const SpMat M = volume_mass(mesh);
    A += gamma * M;
    if (beta != 0.0) A += SpMat(beta * boundary_mass_all(mesh));
    return GaussianFieldPrior(Support::Volume, Vec::Zero(mesh.n_nodes()), A, M, Theta, gamma,
                              beta, "prior-xi");
}

}  // namespace boed
