#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

namespace boed {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;

struct CgResult {
    Vec x;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
};

struct CgFailure : std::runtime_error {
    CgFailure(const std::string& what, double final_residual, int iters)
        : std::runtime_error(what), residual(final_residual), iterations(iters) {}
    double residual;
    int iterations;
};

// Preconditioned conjugate gradients for an SPD operator given by its action.
// The preconditioner, when present, must be SPD as well. cg_run reports
// non-convergence through the result flag; cg_solve throws CgFailure instead.
CgResult cg_run(const std::function<Vec(const Vec&)>& apply_A,
                const std::function<Vec(const Vec&)>& precond,  // may be empty
                const Vec& b, double rtol, int maxiter);
CgResult cg_solve(const std::function<Vec(const Vec&)>& apply_A,
                  const std::function<Vec(const Vec&)>& precond,
                  const Vec& b, double rtol, int maxiter);

// Symmetric sparse operator with a tagged solve counter. Both the CG path and
// the cached-factorization path report to the global ledger under the tag.
class SparseSymOp {
public:
    SparseSymOp() = default;
    SparseSymOp(SpMat A, std::string tag);

    Eigen::Index dim() const { return matrix_.rows(); }
    const SpMat& matrix() const { return matrix_; }
    const std::string& tag() const { return tag_; }

    Vec apply(const Vec& x) const { return matrix_.selfadjointView<Eigen::Lower>() * x; }

    // CG solve; counts one ledger entry per invocation.
    Vec solve_cg(const Vec& b, double rtol = 1e-10, int maxiter = 10000,
                 const std::function<Vec(const Vec&)>& precond = nullptr) const;

    // Cached sparse Cholesky solve; factorizes lazily on first use.
    Vec solve_direct(const Vec& b) const;
    Mat solve_direct(const Mat& b) const;

    // Re-uses the symbolic analysis when the sparsity pattern is unchanged.
    void update_values(const SpMat& A);

    // Factorizes eagerly (no ledger entry); makes subsequent concurrent
    // solve_direct calls on a shared operator safe.
    void prefactor() const { ensure_factorized(); }

    Mat dense() const {
        const SpMat full = matrix_.selfadjointView<Eigen::Lower>();
        return Mat(full);
    }

private:
    void ensure_factorized() const;

    SpMat matrix_;  // lower triangle stored
    std::string tag_;
    mutable std::shared_ptr<Eigen::SimplicialLDLT<SpMat, Eigen::Lower>> factor_;
    mutable bool factor_valid_ = false;
};

// Checks symmetry of the assembled matrix (relative max-norm).
void require_symmetric(const SpMat& A, double rel_tol = 1e-12);

}  // namespace boed
