#pragma once

#include <Eigen/Cholesky>
#include <vector>

#include "boed/forward.hpp"
#include "boed/lanczos.hpp"
#include "boed/model.hpp"

namespace boed {

// Binary sensor selection over the n_s candidates.
struct Design {
    int n_s = 0;
    std::vector<int> active;  // sorted indices of selected sensors

    int n_act() const { return static_cast<int>(active.size()); }
    Vec weights() const;
    Design with(int sensor) const;  // copy with one more active sensor

    static Design empty(int n_s) { return Design{n_s, {}}; }
    static Design full(int n_s);
    static Design from_weights(const Vec& w);
    static Design from_indices(int n_s, std::vector<int> idx);
};

// Likelihood restricted to the active sensors: the rows/columns of the total
// error covariance for inactive sensors are removed and the remaining block
// factorized. An empty design contributes zero misfit.
class RestrictedLikelihood {
public:
    RestrictedLikelihood(const ErrorModel& em, Design design);

    const Design& design() const { return design_; }
    int n_act() const { return design_.n_act(); }

    Vec gather(const Vec& full) const;
    Vec scatter(const Vec& act, int n_s) const;

    // Sigma(w) v for a full-length observation-space vector v.
    Vec apply_sigma(const Vec& v) const;
    // Sigma(w) (Fm + eps0 - y); the misfit gradient seed.
    Vec sigma_residual(const Vec& Fm, const Vec& y) const;
    double misfit(const Vec& Fm, const Vec& y) const;

    Mat sigma_dense() const;  // oracle helper

private:
    Design design_;
    Vec eps0_;
    int n_s_ = 0;
    Eigen::LLT<Mat> llt_;  // factorization of the restricted covariance
};

struct GnOptions {
    double grad_rtol = 1e-6;
    double grad_atol = 1e-9;
    int max_iterations = 100;
    double armijo_c = 1e-4;
    double backtrack_factor = 0.5;
    int max_backtracks = 25;
    int cg_extra_iterations = 10;  // inner CG cap: n_act + extra
    double cg_floor_rtol = 1e-8;
};

struct MapResult {
    Vec m_map;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double initial_gradient_norm = 0.0;
    double misfit_cost = 0.0;
    double prior_cost = 0.0;
    bool converged = false;
};

std::pair<double, double> inversion_cost(const ForwardModel& fwd, const ParamSpace& prior,
                                         const RestrictedLikelihood& rl, const Vec& m,
                                         const Vec& y);

// Dual-space gradient of the negative log-posterior at m.
Vec inversion_gradient(const ForwardModel& fwd, const ParamSpace& prior,
                       const RestrictedLikelihood& rl, const Vec& m, const Vec& y);

// Gauss-Newton data-misfit Hessian action at a fixed linearization.
Vec gn_hessian_apply(const Linearization& lin, const RestrictedLikelihood& rl, const Vec& dm);

// Inexact Gauss-Newton-CG with prior-preconditioned inner solves and Armijo
// backtracking. Returns a non-converged result (flagged) on iteration limit.
MapResult solve_map(const ForwardModel& fwd, const ParamSpace& prior,
                    const RestrictedLikelihood& rl, const Vec& y, const Vec& init,
                    const GnOptions& opts = {});

struct LowRankPosterior {
    MapResult map;
    EigPairs pairs;        // generalized eigenpairs: vectors s_k, cm_inner(s,s) = 1
    int rank_used = 0;
    double trace_reduction = 0.0;  // sum of lambda/(1+lambda) * ||s||_M^2

    double trace_post(double trace_prior) const { return trace_prior - trace_reduction; }
};

// Top-r spectrum of the prior-preconditioned Gauss-Newton Hessian at the MAP
// point, computed by Lanczos in the Cameron-Martin geometry.
LowRankPosterior posterior_lowrank(const ForwardModel& fwd, const ParamSpace& prior,
                                   const RestrictedLikelihood& rl, const MapResult& map,
                                   int r, const LanczosOptions& lanczos = {});

// Pointwise posterior variance via the low-rank covariance update.
Vec posterior_pointwise_variance(const ParamSpace& prior, const LowRankPosterior& post);

}  // namespace boed
