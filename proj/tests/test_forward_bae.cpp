#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>

#include "boed/forward.hpp"
#include "boed/io.hpp"
#include "boed/linear_sandbox.hpp"

using namespace boed;

namespace {

struct SmallProblem {
    Mesh mesh;
    SensorGrid sensors;
    GaussianFieldPrior m_prior;
    GaussianFieldPrior xi_prior;
    PdeProblem problem;

    explicit SmallProblem(int nx = 4, int ny = 4, int nz = 2, int grid = 3)
        : mesh(build_box_mesh(nx, ny, nz)),
          sensors(make_sensor_grid(grid, 0.2)),
          m_prior(make_m_prior(mesh)),
          xi_prior(make_xi_prior(mesh)),
          problem(mesh, sensors, m_prior, xi_prior) {}
};

}  // namespace

TEST_CASE("approximate model is the accurate model at the nominal secondary field") {
    SmallProblem sp;
    RngStream stream(41, "fb-nominal", 0);
    const Vec m = sp.m_prior.sample(stream);
    const Vec xi_bar = sp.xi_prior.mean();
    CHECK((sp.problem.forward_full(m, xi_bar) - sp.problem.forward_approx(m)).cwiseAbs().maxCoeff() <=
          1e-13);
    // And xi_bar is identically zero here, so the zero field gives the same.
    CHECK((sp.problem.forward_full(m, Vec::Zero(sp.mesh.n_nodes())) - sp.problem.forward_approx(m))
              .cwiseAbs()
              .maxCoeff() <= 1e-13);
}

TEST_CASE("forward map is nonlinear in m") {
    SmallProblem sp;
    RngStream stream(41, "fb-nonlinear", 0);
    const Vec m = sp.m_prior.mean();
    const Vec d = stream.gaussian_vector(sp.mesh.n_bottom());
    const Vec second_diff = sp.problem.forward_approx(m + d) - 2.0 * sp.problem.forward_approx(m) +
                            sp.problem.forward_approx(m - d);
    CHECK(second_diff.cwiseAbs().maxCoeff() > 1e-10);
}

TEST_CASE("stronger Robin sink lowers the observed state pointwise") {
    SmallProblem sp;
    const Vec strong = Vec::Constant(sp.mesh.n_bottom(), 10.0);
    const Vec weak = Vec::Constant(sp.mesh.n_bottom(), -10.0);
    const Vec y_strong = sp.problem.forward_approx(strong);
    const Vec y_weak = sp.problem.forward_approx(weak);
    for (int i = 0; i < y_strong.size(); ++i) CHECK(y_strong[i] < y_weak[i]);
}

TEST_CASE("forward evaluations are deterministic") {
    SmallProblem sp;
    RngStream stream(41, "fb-det", 0);
    const Vec m = sp.m_prior.sample(stream);
    const Vec a = sp.problem.forward_approx(m);
    const Vec b = sp.problem.forward_approx(m);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("approximation error exceeds the noise scale at the reference setup") {
    const Mesh mesh = build_box_mesh(20, 20, 4);
    const SensorGrid sensors = make_sensor_grid();
    const GaussianFieldPrior m_prior = make_m_prior(mesh);
    const GaussianFieldPrior xi_prior = make_xi_prior(mesh);
    const PdeProblem problem(mesh, sensors, m_prior, xi_prior);
    RngStream sm(43, "fb-noise-scale-m", 0);
    RngStream sxi(43, "fb-noise-scale-xi", 0);
    const Vec m = m_prior.sample(sm);
    const Vec xi = xi_prior.sample(sxi);
    const Vec eps = problem.forward_full(m, xi) - problem.forward_approx(m);
    CHECK(eps.cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("estimate_bae determinism, PSD repair, and noise floor") {
    SmallProblem sp;
    const ErrorModel a = estimate_bae(sp.problem, 12, 57, 1e-3);
    const ErrorModel b = estimate_bae(sp.problem, 12, 57, 1e-3);
    CHECK((a.eps0 - b.eps0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.Gamma_nu - b.Gamma_nu).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.n_mc_used == 12);

    CHECK((a.Gamma_eps - a.Gamma_eps.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(a.Gamma_eps);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * std::max(1.0, a.Gamma_eps.trace()));
    Eigen::SelfAdjointEigenSolver<Mat> esn(a.Gamma_nu);
    CHECK(esn.eigenvalues().minCoeff() >= 1e-6 * (1.0 - 1e-8));

    CHECK_THROWS_AS(estimate_bae(sp.problem, 1, 57, 1e-3), std::invalid_argument);
}

TEST_CASE("worker count does not change the estimate") {
    SmallProblem sp;
    const ErrorModel serial = estimate_bae(sp.problem, 16, 58, 1e-3, 1);
    const ErrorModel parallel = estimate_bae(sp.problem, 16, 58, 1e-3, 4);
    CHECK((serial.eps0 - parallel.eps0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((serial.Gamma_nu - parallel.Gamma_nu).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sandbox bridge: sampled error statistics converge to the analytic ones") {
    RngStream stream(59, "fb-sandbox", 0);
    const LinearModel model = random_linear_model(6, 4, 3, stream);
    const LinearSampled sampled(model);
    const Mat analytic = model.T * model.C_xi * model.T.transpose();
    const int n_mc = 4000;
    const ErrorModel em = estimate_bae(sampled, n_mc, 61, 1e-3);
    CHECK((em.Gamma_eps - analytic).norm() <= 4.0 / std::sqrt(double(n_mc)) * analytic.norm());
    // eps0 -> 0 because xi_bar is the xi mean; CLT-scale tolerance.
    const double sd_scale = std::sqrt(analytic.diagonal().maxCoeff() / n_mc);
    CHECK(em.eps0.cwiseAbs().maxCoeff() <= 5.0 * sd_scale);
}

TEST_CASE("estimator consistency: more samples, smaller spread") {
    RngStream stream(59, "fb-consistency", 0);
    const LinearModel model = random_linear_model(5, 3, 2, stream);
    const LinearSampled sampled(model);
    int wins = 0;
    for (int rep = 0; rep < 5; ++rep) {
        const Mat g1a = estimate_bae(sampled, 200, 100 + 2 * rep, 1e-3).Gamma_eps;
        const Mat g1b = estimate_bae(sampled, 200, 101 + 2 * rep, 1e-3).Gamma_eps;
        const Mat g2a = estimate_bae(sampled, 400, 200 + 2 * rep, 1e-3).Gamma_eps;
        const Mat g2b = estimate_bae(sampled, 400, 201 + 2 * rep, 1e-3).Gamma_eps;
        if ((g2a - g2b).norm() < (g1a - g1b).norm()) ++wins;
    }
    CHECK(wins >= 3);  // median improvement
}

TEST_CASE("training sets are consistent and stream-separated") {
    SmallProblem sp;
    const TrainingSet set = make_training_set(sp.problem, 5, 63, 1e-3);
    REQUIRE(set.size() == 5);
    for (const TrainingSample& s : set.samples) {
        const Vec y = sp.problem.forward_full(s.m, s.xi) + s.eta;
        CHECK((y - s.y).cwiseAbs().maxCoeff() <= 1e-15);
    }
    for (int i = 1; i < 5; ++i)
        CHECK((set.samples[i].eta - set.samples[0].eta).cwiseAbs().maxCoeff() > 0.0);
    // Disjoint from the BAE streams: the first training m differs from the
    // first BAE m at the same master seed.
    RngStream bae_m(63, "bae-m", 0);
    CHECK((sp.problem.sample_m(bae_m) - set.samples[0].m).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("error model round-trips bit-exactly through CSV") {
    SmallProblem sp;
    const ErrorModel em = estimate_bae(sp.problem, 8, 67, 1e-3);
    const auto dir = std::filesystem::temp_directory_path() / "boed_em_roundtrip";
    save_error_model(em, dir, "bae");
    const ErrorModel back = load_error_model(dir, "bae");
    CHECK((em.eps0 - back.eps0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((em.Gamma_nu - back.Gamma_nu).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.n_mc_used == em.n_mc_used);
    CHECK(back.seed == em.seed);
    CHECK(back.sigma == em.sigma);
    std::filesystem::remove_all(dir);
}
