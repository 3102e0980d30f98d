// Acceptance gate: one criterion per invocation (argv[1] in 1..9), printing a
// single "criterion N: PASS/FAIL (...)" line on stdout. Progress goes to
// stderr so long criteria stay observable.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "boed/linear_sandbox.hpp"
#include "boed/validation.hpp"

using namespace boed;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

int report(int criterion, bool pass, const std::string& detail) {
    std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " (" << detail
              << ")\n";
    return pass ? 0 : 1;
}

Mat matrix_sqrt(const Mat& A) {
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

// Reference-scale problem: 20x20x4 mesh, 10x10 sensor grid, sigma = 1e-3.
struct RefScale {
    Mesh mesh;
    SensorGrid sensors;
    GaussianFieldPrior m_prior;
    GaussianFieldPrior xi_prior;
    PdeProblem problem;
    PdeApproxForward forward;
    double sigma = 1e-3;

    RefScale()
        : mesh(build_box_mesh(20, 20, 4)),
          sensors(make_sensor_grid()),
          m_prior(make_m_prior(mesh)),
          xi_prior(make_xi_prior(mesh)),
          problem(mesh, sensors, m_prior, xi_prior),
          forward(problem) {}
};

// Small problem shared by criteria 1 and 5.
struct SmallScale {
    Mesh mesh;
    SensorGrid sensors;
    GaussianFieldPrior m_prior;
    GaussianFieldPrior xi_prior;
    PdeProblem problem;
    PdeApproxForward forward;

    SmallScale()
        : mesh(build_box_mesh(4, 4, 2)),
          sensors(make_sensor_grid(3, 0.2)),
          m_prior(make_m_prior(mesh)),
          xi_prior(make_xi_prior(mesh)),
          problem(mesh, sensors, m_prior, xi_prior),
          forward(problem) {}
};

double dense_mean_posterior_trace(const SmallScale& sc, const TrainingSet& training,
                                  const ErrorModel& em, const Design& w) {
    const int n = sc.m_prior.dim();
    Mat R(n, n), M(n, n);
    for (int j = 0; j < n; ++j) {
        R.col(j) = sc.m_prior.apply_precision(Vec(Vec::Unit(n, j)));
        M.col(j) = sc.m_prior.apply_mass(Vec(Vec::Unit(n, j)));
    }
    const RestrictedLikelihood rl(em, w);
    double acc = 0.0;
    for (const TrainingSample& s : training.samples) {
        const MapResult map = solve_map(sc.forward, sc.m_prior, rl, s.y, sc.m_prior.mean());
        if (!map.converged) throw std::runtime_error("dense oracle: MAP did not converge");
        const auto lin = sc.forward.linearize(map.m_map);
        Mat H(n, n);
        for (int j = 0; j < n; ++j)
            H.col(j) = gn_hessian_apply(*lin, rl, Vec(Vec::Unit(n, j)));
        acc += ((H + R).inverse() * M).trace();
    }
    return acc / training.size();
}

int criterion_1() {
    SmallScale sc;
    const ErrorModel em = estimate_bae(sc.problem, 32, 11, 1e-3);
    const TrainingSet training = make_training_set(sc.problem, 2, 12, 1e-3);
    OedObjectiveConfig cfg;
    cfg.forward = &sc.forward;
    cfg.prior = &sc.m_prior;
    cfg.training = &training;
    cfg.error_model = &em;

    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
        RngStream stream(13, "acc1-design", i);
        const Design w = random_design(2 + i % 4, sc.problem.n_obs(), stream);
        const double value = phi_eig(w, cfg) + sc.m_prior.trace_cov();
        const double dense = dense_mean_posterior_trace(sc, training, em, w);
        worst = std::max(worst, std::abs(value - dense) / std::abs(dense));
        std::cerr << "design " << i << " (K=" << w.n_act() << "): rel dev "
                  << std::abs(value - dense) / std::abs(dense) << "\n";
    }
    std::ostringstream d;
    d << "max relative deviation from the dense posterior trace " << worst << ", tol 1e-7";
    return report(1, worst <= 1e-7, d.str());
}

int criterion_2() {
    double worst_trace = 0.0, worst_update = 0.0;
    for (int i = 0; i < 20; ++i) {
        RngStream stream(17, "acc2", i);
        const Mat C = random_spd(7, stream);
        const Mat K = random_spd(7, stream);
        const Mat Ch = matrix_sqrt(C);
        const double tr = (C * K).trace();
        worst_trace = std::max(worst_trace, std::abs((Ch * K * Ch).trace() - tr) / std::abs(tr));

        const Mat Ht = Ch * K * Ch;
        Eigen::SelfAdjointEigenSolver<Mat> es(Ht);
        const double lhs = (Ch * (Mat::Identity(7, 7) + Ht).inverse() * Ch).trace();
        double rhs = C.trace();
        for (int k = 0; k < 7; ++k) {
            const double lam = es.eigenvalues()[k];
            rhs -= lam / (1.0 + lam) * (Ch * es.eigenvectors().col(k)).squaredNorm();
        }
        worst_update = std::max(worst_update, std::abs(lhs - rhs) / std::abs(lhs));
    }

    bool sampling_ok = true;
    double worst_sigmas = 0.0;
    for (int n_tr : {10, 100}) {
        RngStream stream(19, "acc2-sample", n_tr);
        const Mat C = random_spd(8, stream);
        const Mat K = random_spd(8, stream);
        const Mat Ch = matrix_sqrt(C);
        Vec q(n_tr);
        for (int j = 0; j < n_tr; ++j) {
            RngStream sz(19, "acc2-z", 1000 * n_tr + j);
            const Vec z = Ch * sz.gaussian_vector(8);
            q[j] = z.dot(K * z);
        }
        const double mean = q.mean();
        const double se = std::sqrt((q.array() - mean).square().sum() / (n_tr - 1) / n_tr);
        const double sig = std::abs(mean - (C * K).trace()) / se;
        worst_sigmas = std::max(worst_sigmas, sig);
        if (sig > 3.0) sampling_ok = false;
    }

    std::ostringstream d;
    d << "trace identity dev " << worst_trace << ", low-rank update dev " << worst_update
      << " (tol 1e-10); sampling estimator worst " << worst_sigmas << " standard errors";
    return report(2, worst_trace <= 1e-10 && worst_update <= 1e-10 && sampling_ok, d.str());
}

int criterion_3() {
    double worst_smw = 0.0, worst_marg = 0.0;
    for (int i = 0; i < 20; ++i) {
        RngStream stream(23, "acc3", i);
        const LinearModel model = random_linear_model(6 + i % 5, 4, 1 + i % 4, stream);
        worst_smw = std::max(worst_smw, smw_check(model));
        const Mat a = analytic_posterior_cov(model);
        const Mat b = marginal_posterior_cov(model);
        worst_marg = std::max(worst_marg, (a - b).norm() / a.norm());
    }
    std::ostringstream d;
    d << "max SMW deviation " << worst_smw << ", max posterior Frobenius deviation " << worst_marg
      << ", tol 1e-10";
    return report(3, worst_smw <= 1e-10 && worst_marg <= 1e-10, d.str());
}

int criterion_4() {
    RefScale ps;
    const ErrorModel em = unaware_error_model(ps.sigma, ps.problem.n_obs());
    RngStream dstream(29, "acc4-design", 0);
    const Design w = random_design(10, ps.problem.n_obs(), dstream);
    const RestrictedLikelihood rl(em, w);

    RngStream truth_m(29, "acc4-truth-m", 0);
    RngStream truth_xi(29, "acc4-truth-xi", 0);
    RngStream truth_eta(29, "acc4-truth-eta", 0);
    const Vec y = ps.problem.forward_full(ps.problem.sample_m(truth_m),
                                          ps.problem.sample_xi(truth_xi)) +
                  ps.sigma * truth_eta.gaussian_vector(ps.problem.n_obs());

    double worst_fd = 0.0;
    for (int pt = 0; pt < 3; ++pt) {
        RngStream sm(31, "acc4-m", pt);
        const Vec m = ps.m_prior.sample(sm);
        const Vec g = inversion_gradient(ps.forward, ps.m_prior, rl, m, y);
        for (int dir = 0; dir < 5; ++dir) {
            RngStream sd(31, "acc4-dir", 5 * pt + dir);
            Vec dm = ps.m_prior.sample(sd) - ps.m_prior.mean();
            dm /= dm.norm();
            const double predicted = g.dot(dm);
            double best = std::numeric_limits<double>::infinity();
            for (const double h : {1e-3, 3e-4, 1e-4, 3e-5, 1e-5}) {
                const auto cp = inversion_cost(ps.forward, ps.m_prior, rl, Vec(m + h * dm), y);
                const auto cm = inversion_cost(ps.forward, ps.m_prior, rl, Vec(m - h * dm), y);
                const double fd = (cp.first + cp.second - cm.first - cm.second) / (2.0 * h);
                best = std::min(best, std::abs(fd - predicted) / std::abs(predicted));
            }
            worst_fd = std::max(worst_fd, best);
            std::cerr << "point " << pt << " dir " << dir << ": fd rel err " << best << "\n";
        }
    }

    double worst_sym = 0.0;
    {
        RngStream sm(37, "acc4-herm-m", 0);
        const auto lin = ps.forward.linearize(ps.m_prior.sample(sm));
        for (int probe = 0; probe < 5; ++probe) {
            RngStream sp(37, "acc4-herm", probe);
            const Vec u = sp.gaussian_vector(ps.m_prior.dim());
            const Vec v = sp.gaussian_vector(ps.m_prior.dim());
            const double a = u.dot(gn_hessian_apply(*lin, rl, v));
            const double b = v.dot(gn_hessian_apply(*lin, rl, u));
            worst_sym = std::max(worst_sym, std::abs(a - b) / std::max(1.0, std::abs(a)));
        }
    }

    std::ostringstream d;
    d << "max gradient FD rel err " << worst_fd << " (tol 1e-5), max Hessian asymmetry "
      << worst_sym << " (tol 1e-8)";
    return report(4, worst_fd <= 1e-5 && worst_sym <= 1e-8, d.str());
}

int criterion_5() {
    SmallScale sc;
    const ErrorModel em = estimate_bae(sc.problem, 16, 41, 1e-3);
    const TrainingSet training = make_training_set(sc.problem, 2, 42, 1e-3);
    OedObjectiveConfig cfg;
    cfg.forward = &sc.forward;
    cfg.prior = &sc.m_prior;
    cfg.training = &training;
    cfg.error_model = &em;

    bool counts_ok = true;
    for (int K = 1; K <= 4; ++K) {
        const GreedyTrace trace = greedy(K, cfg);
        const long expected = long(K) * sc.problem.n_obs() - long(K) * (K - 1) / 2;
        if (trace.evaluations != expected) counts_ok = false;
        std::cerr << "K=" << K << ": evaluations " << trace.evaluations << " expected " << expected
                  << "\n";
    }

    // Evaluation count also on sandbox problems with different n_s.
    RngStream stream(43, "acc5-sandbox", 0);
    for (int n_s : {5, 12}) {
        const LinearModel model = random_linear_model(n_s, 4, 2, stream);
        const LinearSampled sampled(model);
        const LinearForward fwd(model);
        ErrorModel lem;
        lem.sigma = std::sqrt(model.sigma2);
        lem.eps0 = Vec::Zero(n_s);
        lem.Gamma_eps = model.T * model.C_xi * model.T.transpose();
        lem.Gamma_nu = lem.Gamma_eps + model.sigma2 * Mat::Identity(n_s, n_s);
        const TrainingSet tr = make_training_set(sampled, 2, 44, lem.sigma);
        OedObjectiveConfig lcfg;
        lcfg.forward = &fwd;
        lcfg.prior = &sampled.m_prior();
        lcfg.training = &tr;
        lcfg.error_model = &lem;
        for (int K = 1; K <= 5; ++K) {
            const GreedyTrace trace = greedy(K, lcfg);
            if (trace.evaluations != long(K) * n_s - long(K) * (K - 1) / 2) counts_ok = false;
        }
    }

    const GreedyTrace trace = greedy(1, cfg);
    int best = -1;
    double best_val = std::numeric_limits<double>::infinity();
    for (int j = 0; j < sc.problem.n_obs(); ++j) {
        const double v = phi_eig(Design::from_indices(sc.problem.n_obs(), {j}), cfg);
        if (v < best_val) {
            best_val = v;
            best = j;
        }
    }
    const bool first_ok = trace.picks[0] == best;

    std::ostringstream d;
    d << "evaluation counts " << (counts_ok ? "exact" : "WRONG") << "; first pick "
      << trace.picks[0] << " vs singleton argmin " << best;
    return report(5, counts_ok && first_ok, d.str());
}

int criterion_6() {
    RefScale ps;
    Timer timer;
    const ErrorModel em = estimate_bae(ps.problem, 1000, 47, ps.sigma);
    std::cerr << "estimate_bae(n_mc=1000) took " << timer.seconds() << " s\n";
    const Vec std_eps = em.Gamma_eps.diagonal().cwiseSqrt();
    const double max_std = std_eps.maxCoeff();
    double max_corr = 0.0;
    for (int i = 0; i < em.n_obs(); ++i)
        for (int j = 0; j < i; ++j)
            max_corr = std::max(max_corr,
                                std::abs(em.Gamma_eps(i, j)) / (std_eps[i] * std_eps[j]));
    std::ostringstream d;
    d << "max marginal std(eps) " << max_std << " vs 10*sigma " << 10 * ps.sigma
      << "; max off-diagonal correlation " << max_corr << " vs 0.5";
    return report(6, max_std > 10 * ps.sigma && max_corr > 0.5, d.str());
}

int criterion_7() {
    RefScale ps;
    Timer total;
    const ErrorModel aware = estimate_bae(ps.problem, 1000, 53, ps.sigma);
    const ErrorModel unaware = unaware_error_model(ps.sigma, ps.problem.n_obs());
    std::cerr << "BAE estimation done at " << total.seconds() << " s\n";

    const int K = 10, n_d = 5, n_v = 100, n_random = 50, n_seeds = 20;
    int aware_beats_median_V = 0, aware_beats_median_E = 0, aware_beats_unaware_E = 0;

    ValidationSetup setup;
    setup.model = &ps.problem;
    setup.forward = &ps.forward;
    setup.prior = &ps.m_prior;
    setup.aware = &aware;
    setup.sigma = ps.sigma;

    for (int s = 0; s < n_seeds; ++s) {
        Timer seed_timer;
        const std::uint64_t train_seed = 1000 + s, val_seed = 2000 + s;
        const TrainingSet training =
            make_training_set(ps.problem, n_d, train_seed, ps.sigma);

        OedObjectiveConfig cfg;
        cfg.forward = &ps.forward;
        cfg.prior = &ps.m_prior;
        cfg.training = &training;
        cfg.error_model = &aware;
        cfg.trace_seed = 7000 + s;
        const GreedyTrace aware_trace = greedy(K, cfg);
        cfg.error_model = &unaware;
        const GreedyTrace unaware_trace = greedy(K, cfg);

        const ValidationReport aware_rep =
            validate(aware_trace.design(), setup, n_v, InversionMode::Aware, val_seed);
        const ValidationReport unaware_rep =
            validate(unaware_trace.design(), setup, n_v, InversionMode::Aware, val_seed);

        std::vector<double> rand_V, rand_E;
        for (int r = 0; r < n_random; ++r) {
            RngStream stream(train_seed, "acc7-random", r);
            const Design d = random_design(K, ps.problem.n_obs(), stream);
            const ValidationReport rep = validate(d, setup, n_v, InversionMode::Aware, val_seed);
            rand_V.push_back(rep.V_bar);
            rand_E.push_back(rep.E_map_bar);
        }
        std::sort(rand_V.begin(), rand_V.end());
        std::sort(rand_E.begin(), rand_E.end());
        const double med_V = 0.5 * (rand_V[24] + rand_V[25]);
        const double med_E = 0.5 * (rand_E[24] + rand_E[25]);

        if (aware_rep.V_bar < med_V) ++aware_beats_median_V;
        if (aware_rep.E_map_bar < med_E) ++aware_beats_median_E;
        if (aware_rep.E_map_bar <= unaware_rep.E_map_bar) ++aware_beats_unaware_E;
        std::cerr << "seed " << s << " (" << seed_timer.seconds() << " s): aware V="
                  << aware_rep.V_bar << " E=" << aware_rep.E_map_bar << " | median V=" << med_V
                  << " E=" << med_E << " | unaware-design E=" << unaware_rep.E_map_bar << "\n";
    }

    std::ostringstream d;
    d << "aware design below random median: V " << aware_beats_median_V << "/20, E "
      << aware_beats_median_E << "/20; aware E <= unaware-design E " << aware_beats_unaware_E
      << "/20; need >= 15 each";
    return report(7,
                  aware_beats_median_V >= 15 && aware_beats_median_E >= 15 &&
                      aware_beats_unaware_E >= 15,
                  d.str());
}

int criterion_8() {
    RefScale ps;
    const ErrorModel aware = estimate_bae(ps.problem, 1000, 59, ps.sigma);
    const ErrorModel unaware_em = unaware_error_model(ps.sigma, ps.problem.n_obs());
    const TrainingSet training = make_training_set(ps.problem, 5, 60, ps.sigma);
    // The hazard shows at the unaware design: sensors placed ignoring model
    // error sit where the approximation error is largest.
    OedObjectiveConfig cfg;
    cfg.forward = &ps.forward;
    cfg.prior = &ps.m_prior;
    cfg.training = &training;
    cfg.error_model = &unaware_em;
    const GreedyTrace trace = greedy(10, cfg);
    std::cerr << "greedy design:";
    for (int p : trace.picks) std::cerr << " " << p;
    std::cerr << "\n";

    ValidationSetup setup;
    setup.model = &ps.problem;
    setup.forward = &ps.forward;
    setup.prior = &ps.m_prior;
    setup.aware = &aware;
    setup.sigma = ps.sigma;

    // Paired replicates: the same 20 truth/data draws inverted in both modes.
    const ValidationReport a =
        validate(trace.design(), setup, 20, InversionMode::Aware, 61);
    const ValidationReport u =
        validate(trace.design(), setup, 20, InversionMode::Unaware, 61);
    int lower_var = 0, higher_err = 0, both = 0;
    for (int i = 0; i < 20; ++i) {
        if (a.per_sample[i].failed || u.per_sample[i].failed) continue;
        const bool lv = u.per_sample[i].trace < a.per_sample[i].trace;
        const bool he = u.per_sample[i].rel_error > a.per_sample[i].rel_error;
        lower_var += lv;
        higher_err += he;
        both += lv && he;
    }
    std::ostringstream d;
    d << "unaware inversion: lower reported variance " << lower_var << "/20, higher MAP error "
      << higher_err << "/20, both " << both << "/20; need >= 15";
    return report(8, both >= 15, d.str());
}

int criterion_9() {
    RefScale ps;
    Timer total;
    const ErrorModel aware = estimate_bae(ps.problem, 1000, 67, ps.sigma);

    ValidationSetup setup;
    setup.model = &ps.problem;
    setup.forward = &ps.forward;
    setup.prior = &ps.m_prior;
    setup.aware = &aware;
    setup.sigma = ps.sigma;

    OedObjectiveConfig base;
    base.forward = &ps.forward;
    base.prior = &ps.m_prior;
    base.error_model = &aware;
    base.trace_seed = 68;

    const std::vector<int> nd_values{3, 5, 10, 20, 30};
    const auto rows = nd_study(nd_values, 10, setup, base, 69, 100, 70);
    bool ok = true;
    std::ostringstream d;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::cerr << "n_d=" << rows[i].n_d << ": V_bar=" << rows[i].V_bar << " +/- "
                  << rows[i].V_std_err << " (at " << total.seconds() << " s)\n";
        d << (i ? ", " : "") << rows[i].n_d << ": " << rows[i].V_bar;
        if (i > 0) {
            const double slack = std::sqrt(rows[i].V_std_err * rows[i].V_std_err +
                                           rows[i - 1].V_std_err * rows[i - 1].V_std_err);
            if (rows[i].V_bar > rows[i - 1].V_bar + slack) ok = false;
        }
    }
    d << "; non-increasing within one combined standard error: " << (ok ? "yes" : "no");
    return report(9, ok, d.str());
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: acceptance <criterion 1..9>\n";
        return 2;
    }
    const int c = std::atoi(argv[1]);
    try {
        switch (c) {
            case 1: return criterion_1();
            case 2: return criterion_2();
            case 3: return criterion_3();
            case 4: return criterion_4();
            case 5: return criterion_5();
            case 6: return criterion_6();
            case 7: return criterion_7();
            case 8: return criterion_8();
            case 9: return criterion_9();
        }
    } catch (const std::exception& e) {
        return report(c, false, std::string("exception: ") + e.what());
    }
    std::cerr << "usage: acceptance <criterion 1..9>\n";
    return 2;
}
