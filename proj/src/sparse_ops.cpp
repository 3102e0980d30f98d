#include "boed/sparse_ops.hpp"

#include <cmath>

#include "boed/ledger.hpp"

namespace boed {

SolveLedger& ledger() {
    static SolveLedger instance;
    return instance;
}

CgResult cg_solve(const std::function<Vec(const Vec&)>& apply_A,
                  const std::function<Vec(const Vec&)>& precond,
                  const Vec& b, double rtol, int maxiter) {
    CgResult res = cg_run(apply_A, precond, b, rtol, maxiter);
    if (!res.converged)
        throw CgFailure("cg_solve: iteration limit reached", res.residual, res.iterations);
    return res;
}

CgResult cg_run(const std::function<Vec(const Vec&)>& apply_A,
                const std::function<Vec(const Vec&)>& precond,
                const Vec& b, double rtol, int maxiter) {
    if (rtol <= 0.0 || rtol >= 1.0) throw std::invalid_argument("cg_solve: rtol must be in (0,1)");
    const double bnorm = b.norm();
    CgResult res;
    res.x = Vec::Zero(b.size());
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    Vec r = b;
    Vec z = precond ? precond(r) : r;
    Vec p = z;
    double rz = r.dot(z);
    const double tol = rtol * bnorm;
    for (int it = 0; it < maxiter; ++it) {
        const Vec Ap = apply_A(p);
        const double pAp = p.dot(Ap);
        if (pAp <= 0.0) {
            throw CgFailure("cg_solve: operator not positive definite on the Krylov space",
                            r.norm(), it);
        }
        const double alpha = rz / pAp;
        res.x += alpha * p;
        r -= alpha * Ap;
        res.iterations = it + 1;
        res.residual = r.norm();
        if (res.residual <= tol) {
            res.converged = true;
            return res;
        }
        z = precond ? precond(r) : r;
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    return res;
}

SparseSymOp::SparseSymOp(SpMat A, std::string tag) : tag_(std::move(tag)) {
    require_symmetric(A);
    matrix_ = A.triangularView<Eigen::Lower>();
    matrix_.makeCompressed();
}

void require_symmetric(const SpMat& A, double rel_tol) {
    SpMat D = SpMat(A.transpose()) - A;
    double scale = 0.0;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            scale = std::max(scale, std::abs(it.value()));
    double dev = 0.0;
    for (int k = 0; k < D.outerSize(); ++k)
        for (SpMat::InnerIterator it(D, k); it; ++it) dev = std::max(dev, std::abs(it.value()));
    if (scale > 0.0 && dev > rel_tol * scale)
        throw std::invalid_argument("SparseSymOp: matrix is not symmetric");
}

Vec SparseSymOp::solve_cg(const Vec& b, double rtol, int maxiter,
                          const std::function<Vec(const Vec&)>& precond) const {
    ledger().increment(tag_);
    auto applyA = [this](const Vec& x) { return apply(x); };
    return cg_solve(applyA, precond, b, rtol, maxiter).x;
}

void SparseSymOp::ensure_factorized() const {
    if (factor_valid_) return;
    if (!factor_) {
        factor_ = std::make_shared<Eigen::SimplicialLDLT<SpMat, Eigen::Lower>>();
        factor_->analyzePattern(matrix_);
    }
    factor_->factorize(matrix_);
    if (factor_->info() != Eigen::Success)
        throw std::runtime_error("SparseSymOp[" + tag_ + "]: factorization failed");
    factor_valid_ = true;
}

Vec SparseSymOp::solve_direct(const Vec& b) const {
    ensure_factorized();
    ledger().increment(tag_);
    return factor_->solve(b);
}

Mat SparseSymOp::solve_direct(const Mat& b) const {
    ensure_factorized();
    ledger().increment(tag_, b.cols());
    return factor_->solve(b);
}

void SparseSymOp::update_values(const SpMat& A) {
    SpMat lower = A.triangularView<Eigen::Lower>();
    lower.makeCompressed();
    matrix_ = std::move(lower);
    factor_valid_ = false;
}

}  // namespace boed
