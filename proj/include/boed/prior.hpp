#pragma once

#include <optional>

#include "boed/fem.hpp"
#include "boed/model.hpp"

namespace boed {

// Gaussian measure whose covariance is the squared inverse of a
// Laplacian-like operator A = -div(Theta grad) + gamma + Robin(beta),
// discretized on the field's support space. The discrete covariance is
// C = A^{-1} M A^{-1} with M the mass matrix of the support space.
class GaussianFieldPrior : public ParamSpace {
public:
    GaussianFieldPrior(Support support, Vec mean, SpMat A, SpMat M, Eigen::Vector3d theta_diag,
                       double gamma, double robin_beta, std::string tag);

    int dim() const override { return static_cast<int>(mean_.size()); }
    Vec mean() const override { return mean_; }
    Vec apply_mass(const Vec& f) const override { return mass_.apply(f); }
    Vec apply_cov(const Vec& dual) const override;
    Vec apply_precision(const Vec& primal) const override;
    double cm_inner(const Vec& a, const Vec& b) const override;
    Vec sample(RngStream& stream) const override;
    double trace_cov() const override;
    Vec cov_diag() const override;

    Support support() const { return support_; }
    const SparseSymOp& op() const { return op_; }
    const SparseSymOp& mass() const { return mass_; }
    const Eigen::Vector3d& theta_diag() const { return theta_diag_; }
    double gamma() const { return gamma_; }
    double robin_beta() const { return robin_beta_; }

    // Dense covariance (small problems / oracles only).
    Mat dense_cov() const;

private:
    void ensure_dense() const;

    Support support_;
    Vec mean_;
    SparseSymOp op_;    // A
    SparseSymOp mass_;  // M
    SpMat mass_chol_;   // G with G G^T = M, used for sampling
    Eigen::Vector3d theta_diag_;
    double gamma_ = 0.0;
    double robin_beta_ = 0.0;

    mutable bool dense_ready_ = false;
    mutable Mat dense_cov_;
    mutable double trace_cov_ = 0.0;
    mutable Vec cov_diag_;
};

struct PriorOverrides {
    std::optional<double> theta;       // isotropic diffusion (m-prior)
    std::optional<double> alpha;       // reaction (m-prior)
    std::optional<Eigen::Vector3d> Theta_diag;  // anisotropic diffusion (xi-prior)
    std::optional<double> gamma;       // reaction (xi-prior)
    std::optional<double> robin_beta;
};

// Prior on the bottom-boundary field m: mean 1, theta = 0.1, alpha = 1,
// Robin coefficient sqrt(theta * alpha) / 1.42 unless overridden.
GaussianFieldPrior make_m_prior(const Mesh& mesh, const PriorOverrides& overrides = {});

// Prior on the volume field xi: mean 0, Theta = 0.25 diag(1, 1, 1/100),
// gamma = 50, with the analogous Robin correction on the whole boundary.
GaussianFieldPrior make_xi_prior(const Mesh& mesh, const PriorOverrides& overrides = {});

}  // namespace boed
