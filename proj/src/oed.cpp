#include "boed/oed.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "boed/parallel.hpp"

namespace boed {

void OedObjectiveConfig::require_valid() const {
    if (!forward || !prior || !training || !error_model)
        throw std::invalid_argument("OedObjectiveConfig: missing model, prior, training, or error model");
    if (training->size() < 1) throw std::invalid_argument("OedObjectiveConfig: empty training set");
    if (kind == ObjectiveKind::Trace && n_tr < 1)
        throw std::invalid_argument("OedObjectiveConfig: n_tr must be at least 1");
}

Design GreedyTrace::design() const { return Design::from_indices(n_s, picks); }

namespace {

ObjectiveEval eval_eig(const Design& w, const OedObjectiveConfig& cfg,
                       const std::vector<Vec>* init) {
    ObjectiveEval out;
    const int n_d = cfg.n_d();
    out.maps.resize(n_d);
    if (w.n_act() == 0) {
        for (int i = 0; i < n_d; ++i) out.maps[i] = cfg.prior->mean();
        out.valid = true;
        return out;  // empty spectrum: no reduction
    }
    const RestrictedLikelihood rl(*cfg.error_model, w);
    const int r = cfg.fixed_rank > 0 ? cfg.fixed_rank : std::min(w.n_act(), cfg.prior->dim());
    double sum = 0.0;
    for (int i = 0; i < n_d; ++i) {
        const Vec& y = cfg.training->samples[i].y;
        const Vec start =
            init && (*init)[i].size() == cfg.prior->dim() ? (*init)[i] : cfg.prior->mean();
        const MapResult map = solve_map(*cfg.forward, *cfg.prior, rl, y, start, cfg.gn);
        if (!map.converged) {
            out.message = "MAP solve did not converge for training sample " + std::to_string(i);
            return out;
        }
        out.maps[i] = map.m_map;
        const LowRankPosterior post =
            posterior_lowrank(*cfg.forward, *cfg.prior, rl, map, r, cfg.lanczos);
        sum += post.trace_reduction;
    }
    out.value = -sum / n_d;
    out.valid = true;
    return out;
}

ObjectiveEval eval_trace(const Design& w, const OedObjectiveConfig& cfg,
                         const std::vector<Vec>* init) {
    ObjectiveEval out;
    const int n_d = cfg.n_d();
    out.maps.resize(n_d);
    // Probing vectors shared bitwise across designs: streams keyed by j only.
    const Vec mean = cfg.prior->mean();
    std::vector<Vec> z(cfg.n_tr);
    for (int j = 0; j < cfg.n_tr; ++j) {
        RngStream sz(cfg.trace_seed, "phi-trace-z", j);
        z[j] = cfg.prior->sample(sz) - mean;
    }
    const bool empty = w.n_act() == 0;
    const RestrictedLikelihood rl(*cfg.error_model, empty ? Design::empty(w.n_s) : w);
    double sum = 0.0;
    for (int i = 0; i < n_d; ++i) {
        const Vec& y = cfg.training->samples[i].y;
        const Vec start = init && (*init)[i].size() == cfg.prior->dim() ? (*init)[i] : mean;
        const MapResult map = solve_map(*cfg.forward, *cfg.prior, rl, y, start, cfg.gn);
        if (!map.converged) {
            out.message = "MAP solve did not converge for training sample " + std::to_string(i);
            return out;
        }
        out.maps[i] = map.m_map;
        const auto lin = cfg.forward->linearize(map.m_map);
        auto applyHpR = [&](const Vec& c) -> Vec {
            return gn_hessian_apply(*lin, rl, c) + cfg.prior->apply_precision(c);
        };
        auto precond = [&](const Vec& r) -> Vec { return cfg.prior->apply_cov(r); };
        for (int j = 0; j < cfg.n_tr; ++j) {
            const Vec rhs = cfg.prior->apply_precision(z[j]);
            const CgResult cg = cg_run(applyHpR, precond, rhs, cfg.trace_cg_rtol,
                                       cfg.trace_cg_maxiter);
            if (!cg.converged) {
                out.message = "trace-probe CG did not converge (sample " + std::to_string(i) +
                              ", probe " + std::to_string(j) + ")";
                return out;
            }
            sum += cg.x.dot(cfg.prior->apply_mass(z[j]));
        }
    }
    out.value = sum / (static_cast<double>(cfg.n_tr) * n_d);
    out.valid = true;
    return out;
}

}  // namespace

ObjectiveEval evaluate_objective(const Design& w, const OedObjectiveConfig& cfg,
                                 const std::vector<Vec>* init) {
    cfg.require_valid();
    return cfg.kind == ObjectiveKind::Eig ? eval_eig(w, cfg, init) : eval_trace(w, cfg, init);
}

double phi_eig(const Design& w, const OedObjectiveConfig& cfg) {
    OedObjectiveConfig c = cfg;
    c.kind = ObjectiveKind::Eig;
    const ObjectiveEval e = evaluate_objective(w, c);
    if (!e.valid) throw std::runtime_error("phi_eig: " + e.message);
    return e.value;
}

double phi_trace(const Design& w, const OedObjectiveConfig& cfg) {
    OedObjectiveConfig c = cfg;
    c.kind = ObjectiveKind::Trace;
    const ObjectiveEval e = evaluate_objective(w, c);
    if (!e.valid) throw std::runtime_error("phi_trace: " + e.message);
    return e.value;
}

GreedyTrace greedy(int K, const OedObjectiveConfig& cfg, const GreedyOptions& opts) {
    cfg.require_valid();
    const int n_s = cfg.error_model->n_obs();
    if (K < 1 || K > n_s) throw std::invalid_argument("greedy: K must be in [1, n_s]");

    GreedyTrace trace;
    trace.n_s = n_s;
    Design current = Design::empty(n_s);
    std::vector<int> remaining(n_s);
    std::iota(remaining.begin(), remaining.end(), 0);
    std::vector<Vec> warm;  // MAP points at the current design, per training sample

    for (int step = 0; step < K; ++step) {
        const int n_cand = static_cast<int>(remaining.size());
        std::vector<ObjectiveEval> evals(n_cand);
        const std::vector<Vec>* init = (opts.warm_start && !warm.empty()) ? &warm : nullptr;
        parallel_for(n_cand, opts.workers, [&](long c) {
            evals[c] = evaluate_objective(current.with(remaining[c]), cfg, init);
        });
        trace.evaluations += n_cand;

        int best = -1;
        for (int c = 0; c < n_cand; ++c) {
            if (!evals[c].valid) {
                trace.warnings.push_back("step " + std::to_string(step + 1) + ", sensor " +
                                         std::to_string(remaining[c]) + " skipped: " +
                                         evals[c].message);
                continue;
            }
            // Strict comparison keeps ties on the lowest sensor index.
            if (best < 0 || evals[c].value < evals[best].value) best = c;
        }
        if (best < 0)
            throw std::runtime_error("greedy: every candidate failed at step " +
                                     std::to_string(step + 1));
        const int sensor = remaining[best];
        current = current.with(sensor);
        trace.picks.push_back(sensor);
        trace.objective_values.push_back(evals[best].value);
        if (opts.warm_start) warm = std::move(evals[best].maps);
        remaining.erase(remaining.begin() + best);
    }
    return trace;
}

ErrorModel unaware_error_model(double sigma, int n_s) { return noise_only_error_model(sigma, n_s); }

Design random_design(int K, int n_s, RngStream& stream) {
    if (K < 0 || K > n_s) throw std::invalid_argument("random_design: K must be in [0, n_s]");
    std::vector<int> pool(n_s);
    std::iota(pool.begin(), pool.end(), 0);
    // Partial Fisher-Yates over the candidate pool.
    for (int i = 0; i < K; ++i) {
        const int j = i + static_cast<int>(stream.below(n_s - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(K);
    return Design::from_indices(n_s, std::move(pool));
}

}  // namespace boed
