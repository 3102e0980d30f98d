#include "boed/validation.hpp"

#include <cmath>
#include <stdexcept>

#include "boed/parallel.hpp"

namespace boed {

void ValidationSetup::require_valid() const {
    if (!model || !forward || !prior || !aware)
        throw std::invalid_argument("ValidationSetup: missing model, forward, prior, or error model");
    if (sigma <= 0.0) throw std::invalid_argument("ValidationSetup: sigma must be positive");
}

ValidationReport validate(const Design& design, const ValidationSetup& setup, int n_v,
                          InversionMode mode, std::uint64_t seed) {
    setup.require_valid();
    if (n_v < 1) throw std::invalid_argument("validate: n_v must be at least 1");

    ValidationReport report;
    report.design = design;
    report.mode = mode;
    report.n_v = n_v;
    report.seed = seed;
    report.per_sample.resize(n_v);

    const ErrorModel unaware = unaware_error_model(setup.sigma, setup.aware->n_obs());
    const ErrorModel& em = mode == InversionMode::Aware ? *setup.aware : unaware;
    const RestrictedLikelihood rl(em, design);
    const double trace_prior = setup.prior->trace_cov();
    const Vec init = setup.prior->mean();

    parallel_for(n_v, setup.workers, [&](long i) {
        ValidationSample& s = report.per_sample[i];
        RngStream sm(seed, "val-m", i);
        RngStream sxi(seed, "val-xi", i);
        RngStream seta(seed, "val-eta", i);
        const Vec m_true = setup.model->sample_m(sm);
        const Vec xi = setup.model->sample_xi(sxi);
        const Vec y = setup.model->forward_full(m_true, xi) +
                      setup.sigma * seta.gaussian_vector(setup.aware->n_obs());
        const MapResult map = solve_map(*setup.forward, *setup.prior, rl, y, init, setup.gn);
        if (!map.converged) {
            s.failed = true;
            return;
        }
        double trace = trace_prior;
        if (design.n_act() > 0) {
            const LowRankPosterior post = posterior_lowrank(*setup.forward, *setup.prior, rl,
                                                            map, design.n_act(), setup.lanczos);
            trace = post.trace_post(trace_prior);
        }
        s.trace = trace;
        const double denom = setup.prior->mass_norm(m_true);
        s.rel_error = denom > 0.0 ? setup.prior->mass_norm(map.m_map - m_true) / denom
                                  : setup.prior->mass_norm(map.m_map - m_true);
    });

    double v_sum = 0.0, e_sum = 0.0;
    int n_ok = 0;
    for (const ValidationSample& s : report.per_sample) {
        if (s.failed) {
            ++report.failures;
            continue;
        }
        v_sum += s.trace;
        e_sum += s.rel_error;
        ++n_ok;
    }
    if (n_ok == 0) throw std::runtime_error("validate: every validation solve failed");
    report.V_bar = v_sum / n_ok;
    report.E_map_bar = e_sum / n_ok;
    double v_var = 0.0, e_var = 0.0;
    for (const ValidationSample& s : report.per_sample) {
        if (s.failed) continue;
        v_var += (s.trace - report.V_bar) * (s.trace - report.V_bar);
        e_var += (s.rel_error - report.E_map_bar) * (s.rel_error - report.E_map_bar);
    }
    if (n_ok > 1) {
        report.V_std_err = std::sqrt(v_var / (n_ok - 1) / n_ok);
        report.E_std_err = std::sqrt(e_var / (n_ok - 1) / n_ok);
    }
    report.untrusted = report.failures > 0.05 * n_v;
    return report;
}

std::vector<NdStudyRow> nd_study(const std::vector<int>& nd_values, int K,
                                 const ValidationSetup& setup, const OedObjectiveConfig& base,
                                 std::uint64_t train_seed, int n_v, std::uint64_t val_seed) {
    setup.require_valid();
    if (nd_values.empty()) throw std::invalid_argument("nd_study: empty n_d list");
    std::vector<NdStudyRow> rows;
    GreedyOptions gopts;
    gopts.workers = setup.workers;
    for (int n_d : nd_values) {
        // Each row trains on its own seed so the sets are independent draws.
        const TrainingSet training = make_training_set(
            *setup.model, n_d, train_seed + static_cast<std::uint64_t>(n_d), setup.sigma,
            setup.workers);
        OedObjectiveConfig cfg = base;
        cfg.training = &training;
        const GreedyTrace trace = greedy(K, cfg, gopts);
        const ValidationReport report =
            validate(trace.design(), setup, n_v, InversionMode::Aware, val_seed);
        NdStudyRow row;
        row.n_d = n_d;
        row.picks = trace.picks;
        row.objective = trace.objective_values.back();
        row.V_bar = report.V_bar;
        row.V_std_err = report.V_std_err;
        row.E_map_bar = report.E_map_bar;
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace boed
