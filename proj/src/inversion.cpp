#include "boed/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace boed {

Vec Design::weights() const {
    Vec w = Vec::Zero(n_s);
    for (int j : active) w[j] = 1.0;
    return w;
}

Design Design::with(int sensor) const {
    Design d = *this;
    d.active.push_back(sensor);
    std::sort(d.active.begin(), d.active.end());
    return d;
}

Design Design::full(int n_s) {
    Design d{n_s, {}};
    d.active.resize(n_s);
    for (int j = 0; j < n_s; ++j) d.active[j] = j;
    return d;
}

Design Design::from_weights(const Vec& w) {
    Design d{static_cast<int>(w.size()), {}};
    for (int j = 0; j < w.size(); ++j) {
        if (w[j] == 1.0)
            d.active.push_back(j);
        else if (w[j] != 0.0)
            throw std::invalid_argument("Design::from_weights: weights must be 0 or 1");
    }
    return d;
}

Design Design::from_indices(int n_s, std::vector<int> idx) {
    std::sort(idx.begin(), idx.end());
    if (std::adjacent_find(idx.begin(), idx.end()) != idx.end())
        throw std::invalid_argument("Design::from_indices: duplicate sensor index");
    if (!idx.empty() && (idx.front() < 0 || idx.back() >= n_s))
        throw std::invalid_argument("Design::from_indices: sensor index out of range");
    return Design{n_s, std::move(idx)};
}

RestrictedLikelihood::RestrictedLikelihood(const ErrorModel& em, Design design)
    : design_(std::move(design)), eps0_(em.eps0), n_s_(em.n_obs()) {
    if (design_.n_s != n_s_)
        throw std::invalid_argument("RestrictedLikelihood: design size mismatch");
    const int k = design_.n_act();
    if (k == 0) return;
    Mat block(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) block(a, b) = em.Gamma_nu(design_.active[a], design_.active[b]);
    llt_.compute(block);
    if (llt_.info() != Eigen::Success)
        throw std::runtime_error("RestrictedLikelihood: restricted covariance not SPD");
}

Vec RestrictedLikelihood::gather(const Vec& full) const {
    Vec out(design_.n_act());
    for (int a = 0; a < design_.n_act(); ++a) out[a] = full[design_.active[a]];
    return out;
}

Vec RestrictedLikelihood::scatter(const Vec& act, int n_s) const {
    Vec out = Vec::Zero(n_s);
    for (int a = 0; a < design_.n_act(); ++a) out[design_.active[a]] = act[a];
    return out;
}

Vec RestrictedLikelihood::apply_sigma(const Vec& v) const {
    if (design_.n_act() == 0) return Vec::Zero(n_s_);
    return scatter(llt_.solve(gather(v)), n_s_);
}

Vec RestrictedLikelihood::sigma_residual(const Vec& Fm, const Vec& y) const {
    return apply_sigma(Fm + eps0_ - y);
}

double RestrictedLikelihood::misfit(const Vec& Fm, const Vec& y) const {
    if (design_.n_act() == 0) return 0.0;
    const Vec r = gather(Fm + eps0_ - y);
    return 0.5 * r.dot(llt_.solve(r));
}

Mat RestrictedLikelihood::sigma_dense() const {
    Mat out = Mat::Zero(n_s_, n_s_);
    const int k = design_.n_act();
    if (k == 0) return out;
    const Mat inv = llt_.solve(Mat::Identity(k, k));
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) out(design_.active[a], design_.active[b]) = inv(a, b);
    return out;
}

std::pair<double, double> inversion_cost(const ForwardModel& fwd, const ParamSpace& prior,
                                         const RestrictedLikelihood& rl, const Vec& m,
                                         const Vec& y) {
    const double misfit = rl.misfit(fwd.apply(m), y);
    const Vec dm = m - prior.mean();
    const double reg = 0.5 * dm.dot(prior.apply_precision(dm));
    return {misfit, reg};
}

static Vec gradient_at(const Linearization& lin, const ParamSpace& prior,
                       const RestrictedLikelihood& rl, const Vec& m, const Vec& y) {
    const Vec seed = rl.sigma_residual(lin.value(), y);
    return prior.apply_precision(m - prior.mean()) + lin.apply_jacobian_adjoint(seed);
}

Vec inversion_gradient(const ForwardModel& fwd, const ParamSpace& prior,
                       const RestrictedLikelihood& rl, const Vec& m, const Vec& y) {
    const auto lin = fwd.linearize(m);
    return gradient_at(*lin, prior, rl, m, y);
}

Vec gn_hessian_apply(const Linearization& lin, const RestrictedLikelihood& rl, const Vec& dm) {
    return lin.apply_jacobian_adjoint(rl.apply_sigma(lin.apply_jacobian(dm)));
}

MapResult solve_map(const ForwardModel& fwd, const ParamSpace& prior,
                    const RestrictedLikelihood& rl, const Vec& y, const Vec& init,
                    const GnOptions& opts) {
    MapResult res;
    res.m_map = init;
    auto lin = fwd.linearize(res.m_map);
    Vec g = gradient_at(*lin, prior, rl, res.m_map, y);
    // Gradient norm in the covariance-weighted dual metric.
    auto dual_norm = [&](const Vec& gd) { return std::sqrt(std::max(0.0, gd.dot(prior.apply_cov(gd)))); };
    double gnorm = dual_norm(g);
    res.initial_gradient_norm = gnorm;
    const double tol = std::max(opts.grad_atol, opts.grad_rtol * gnorm);
    double misfit = rl.misfit(lin->value(), y);
    {
        const Vec dm = res.m_map - prior.mean();
        res.prior_cost = 0.5 * dm.dot(prior.apply_precision(dm));
    }
    res.misfit_cost = misfit;

    const int cg_cap = rl.n_act() + opts.cg_extra_iterations;
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (gnorm <= tol) {
            res.converged = true;
            break;
        }
        // Eisenstat-Walker forcing on the preconditioned residual.
        const double forcing =
            res.initial_gradient_norm > 0.0
                ? std::max(opts.cg_floor_rtol,
                           std::min(0.5, std::sqrt(gnorm / res.initial_gradient_norm)))
                : 0.5;
        auto applyH = [&](const Vec& p) -> Vec {
            return gn_hessian_apply(*lin, rl, p) + prior.apply_precision(p);
        };
        auto precond = [&](const Vec& r) -> Vec { return prior.apply_cov(r); };
        const CgResult cg = cg_run(applyH, precond, Vec(-g), forcing, cg_cap);
        Vec step = cg.x;
        double directional = g.dot(step);
        if (directional >= 0.0) {  // fall back to the preconditioned steepest descent
            step = -prior.apply_cov(g);
            directional = g.dot(step);
        }
        const double cost0 = misfit + res.prior_cost;
        double alpha = 1.0;
        bool accepted = false;
        std::unique_ptr<Linearization> trial_lin;
        double trial_misfit = 0.0, trial_reg = 0.0;
        for (int bt = 0; bt < opts.max_backtracks; ++bt) {
            const Vec m_try = res.m_map + alpha * step;
            trial_lin = fwd.linearize(m_try);
            trial_misfit = rl.misfit(trial_lin->value(), y);
            const Vec dm = m_try - prior.mean();
            trial_reg = 0.5 * dm.dot(prior.apply_precision(dm));
            if (trial_misfit + trial_reg <= cost0 + opts.armijo_c * alpha * directional) {
                res.m_map = m_try;
                accepted = true;
                break;
            }
            alpha *= opts.backtrack_factor;
        }
        res.iterations = it + 1;
        if (!accepted) break;  // line search stalled; report the best point found
        lin = std::move(trial_lin);
        misfit = trial_misfit;
        res.misfit_cost = trial_misfit;
        res.prior_cost = trial_reg;
        g = gradient_at(*lin, prior, rl, res.m_map, y);
        gnorm = dual_norm(g);
    }
    if (!res.converged && gnorm <= tol) res.converged = true;
    res.final_gradient_norm = gnorm;
    return res;
}

LowRankPosterior posterior_lowrank(const ForwardModel& fwd, const ParamSpace& prior,
                                   const RestrictedLikelihood& rl, const MapResult& map,
                                   int r, const LanczosOptions& lanczos) {
    LowRankPosterior post;
    post.map = map;
    const auto lin = fwd.linearize(map.m_map);
    // Prior-preconditioned misfit Hessian: self-adjoint in the Cameron-Martin
    // inner product, with C H as the primal-space operator.
    auto applyCH = [&](const Vec& v) { return prior.apply_cov(gn_hessian_apply(*lin, rl, v)); };
    auto inner = [&](const Vec& a, const Vec& b) { return prior.cm_inner(a, b); };
    post.pairs = lanczos_eigs(applyCH, inner, r, prior.dim(), lanczos);
    post.rank_used = static_cast<int>(post.pairs.values.size());
    post.trace_reduction = 0.0;
    for (int k = 0; k < post.rank_used; ++k) {
        const double lam = post.pairs.values[k];
        if (lam <= 0.0) continue;
        const Vec& s = post.pairs.vectors.col(k);
        post.trace_reduction += lam / (1.0 + lam) * s.dot(prior.apply_mass(s));
    }
    return post;
}

Vec posterior_pointwise_variance(const ParamSpace& prior, const LowRankPosterior& post) {
    Vec var = prior.cov_diag();
    for (int k = 0; k < post.rank_used; ++k) {
        const double lam = post.pairs.values[k];
        if (lam <= 0.0) continue;
        const Vec& s = post.pairs.vectors.col(k);
        var -= (lam / (1.0 + lam)) * s.cwiseProduct(s);
    }
    return var;
}

}  // namespace boed
