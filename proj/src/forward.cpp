#include "boed/forward.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

#include "boed/parallel.hpp"

namespace boed {

PdeProblem::PdeProblem(const Mesh& mesh, const SensorGrid& sensors,
                       const GaussianFieldPrior& m_prior, const GaussianFieldPrior& xi_prior)
    : mesh_(&mesh),
      sensors_(&sensors),
      m_prior_(&m_prior),
      xi_prior_(&xi_prior),
      B_(observation_matrix(mesh, sensors)),
      load_(neumann_load(mesh, default_source)),
      nominal_(mesh, xi_prior.mean()) {}

Vec PdeProblem::forward_full(const Vec& m, const Vec& xi) const {
    PdeAssembler assembler(*mesh_, xi);
    const SparseSymOp op = assembler.make_operator(m, "pde-full");
    return B_ * op.solve_direct(load_);
}

Vec PdeProblem::forward_approx(const Vec& m) const {
    const SparseSymOp op = nominal_.make_operator(m, "pde-approx");
    return B_ * op.solve_direct(load_);
}

namespace {

class PdeLinearization : public Linearization {
public:
    PdeLinearization(const PdeProblem& problem, const Vec& m)
        : problem_(&problem),
          op_(problem.nominal_assembler().make_operator(m, "pde-approx")) {
        u_ = op_.solve_direct(problem.load());
        value_ = problem.observation() * u_;
        W_ = robin_coupling(problem.mesh(), m, u_);
    }

    const Vec& value() const override { return value_; }

    Vec apply_jacobian(const Vec& dm) const override {
        const Mesh& mesh = problem_->mesh();
        Vec rhs = -scatter_bottom(mesh, Vec(W_.selfadjointView<Eigen::Lower>() * dm));
        zero_dirichlet(rhs);
        return problem_->observation() * op_.solve_direct(rhs);
    }

    Vec apply_jacobian_adjoint(const Vec& r) const override {
        const Mesh& mesh = problem_->mesh();
        Vec rhs = problem_->observation().transpose() * r;
        zero_dirichlet(rhs);
        const Vec q = op_.solve_direct(rhs);
        return -(W_.selfadjointView<Eigen::Lower>() * restrict_bottom(mesh, q));
    }

private:
    void zero_dirichlet(Vec& v) const {
        const Mesh& mesh = problem_->mesh();
        for (int n = 0; n < mesh.n_nodes(); ++n)
            if (mesh.dirichlet_mask[n]) v[n] = 0.0;
    }

    const PdeProblem* problem_;
    SparseSymOp op_;
    Vec u_;
    Vec value_;
    SpMat W_;
};

}  // namespace

std::unique_ptr<Linearization> PdeApproxForward::linearize(const Vec& m) const {
    return std::make_unique<PdeLinearization>(*problem_, m);
}

ErrorModel noise_only_error_model(double sigma, int n_s) {
    if (sigma <= 0.0) throw std::invalid_argument("noise_only_error_model: sigma must be positive");
    ErrorModel em;
    em.eps0 = Vec::Zero(n_s);
    em.Gamma_eps = Mat::Zero(n_s, n_s);
    em.sigma = sigma;
    em.Gamma_nu = sigma * sigma * Mat::Identity(n_s, n_s);
    return em;
}

ErrorModel estimate_bae(const SampledModel& model, int n_mc, std::uint64_t master_seed,
                        double sigma, int workers) {
    if (n_mc < 2) throw std::invalid_argument("estimate_bae: n_mc must be at least 2");
    const int n_s = model.n_obs();
    std::vector<Vec> eps(n_mc);
    parallel_for(n_mc, workers, [&](long i) {
        RngStream sm(master_seed, "bae-m", i);
        RngStream sxi(master_seed, "bae-xi", i);
        const Vec m = model.sample_m(sm);
        const Vec xi = model.sample_xi(sxi);
        eps[i] = model.forward_full(m, xi) - model.forward_approx(m);
    });
    // Fixed summation order keeps the reduction worker-count independent.
    Vec mean = Vec::Zero(n_s);
    for (int i = 0; i < n_mc; ++i) mean += eps[i];
    mean /= n_mc;
    Mat cov = Mat::Zero(n_s, n_s);
    for (int i = 0; i < n_mc; ++i) {
        const Vec d = eps[i] - mean;
        cov.selfadjointView<Eigen::Lower>().rankUpdate(d, 1.0);
    }
    cov = Mat(cov.selfadjointView<Eigen::Lower>()) / (n_mc - 1);
    // Symmetrize, then clip negative eigenvalues of the rank-deficient estimate.
    cov = 0.5 * (cov + cov.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(cov);
    if (es.eigenvalues().minCoeff() < 0.0) {
        const Vec clipped = es.eigenvalues().cwiseMax(0.0);
        cov = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
        cov = 0.5 * (cov + cov.transpose()).eval();
    }
    ErrorModel em;
    em.eps0 = mean;
    em.Gamma_eps = cov;
    em.sigma = sigma;
    em.Gamma_nu = cov + sigma * sigma * Mat::Identity(n_s, n_s);
    em.n_mc_used = n_mc;
    em.seed = master_seed;
    return em;
}

TrainingSet make_training_set(const SampledModel& model, int n_d, std::uint64_t master_seed,
                              double sigma, int workers) {
    if (n_d < 1) throw std::invalid_argument("make_training_set: n_d must be at least 1");
    TrainingSet set;
    set.samples.resize(n_d);
    set.seed = master_seed;
    set.sigma = sigma;
    parallel_for(n_d, workers, [&](long i) {
        RngStream sm(master_seed, "train-m", i);
        RngStream sxi(master_seed, "train-xi", i);
        RngStream seta(master_seed, "train-eta", i);
        TrainingSample& s = set.samples[i];
        s.m = model.sample_m(sm);
        s.xi = model.sample_xi(sxi);
        s.eta = sigma * seta.gaussian_vector(model.n_obs());
        s.y = model.forward_full(s.m, s.xi) + s.eta;
    });
    return set;
}

}  // namespace boed
