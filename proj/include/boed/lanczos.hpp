#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>

#include "boed/rng.hpp"
#include "boed/sparse_ops.hpp"

namespace boed {

// Top-k eigenpairs, values sorted non-increasing, vectors orthonormal in the
// inner product the pairs were computed in (stored as matrix columns).
struct EigPairs {
    Vec values;
    Mat vectors;
    int rank() const { return static_cast<int>(values.size()); }
};

struct LanczosOptions {
    double residual_tol = 1e-6;    // per-pair: ||A v - lambda v|| <= tol * max(lambda, 1)
    double truncation_rel = 1e-12; // values below truncation_rel * lambda_max clamp to zero
    bool check_symmetry = true;    // probe <Av,w> vs <v,Aw> before iterating
    std::uint64_t seed = 2027;     // start-vector stream
};

using InnerProduct = std::function<double(const Vec&, const Vec&)>;

// Lanczos with full reorthogonalization for an operator that is self-adjoint
// and positive semidefinite w.r.t. the supplied inner product. Breakdowns
// (invariant subspace found) restart with a fresh orthogonalized direction, so
// requesting k beyond the operator rank yields trailing zero eigenvalues.
EigPairs lanczos_eigs(const std::function<Vec(const Vec&)>& apply_A,
                      const InnerProduct& inner, int k, int dim_hint,
                      const LanczosOptions& opts = {});

inline InnerProduct euclidean_inner() {
    return [](const Vec& a, const Vec& b) { return a.dot(b); };
}

}  // namespace boed
