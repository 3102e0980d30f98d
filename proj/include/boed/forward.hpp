#pragma once

#include <cstdint>
#include <vector>

#include "boed/fem.hpp"
#include "boed/model.hpp"
#include "boed/prior.hpp"

namespace boed {

// The elliptic parameter-to-observable maps: G(m, xi) solves the state
// problem with conductivity e^xi and Robin coefficient e^m, then reads the
// state at the sensors; F(m) = G(m, xi_bar) is the approximate model.
class PdeProblem : public SampledModel {
public:
    PdeProblem(const Mesh& mesh, const SensorGrid& sensors, const GaussianFieldPrior& m_prior,
               const GaussianFieldPrior& xi_prior);

    int n_obs() const override { return static_cast<int>(B_.rows()); }
    Vec forward_full(const Vec& m, const Vec& xi) const override;
    Vec forward_approx(const Vec& m) const override;
    Vec sample_m(RngStream& stream) const override { return m_prior_->sample(stream); }
    Vec sample_xi(RngStream& stream) const override { return xi_prior_->sample(stream); }

    const Mesh& mesh() const { return *mesh_; }
    const SensorGrid& sensors() const { return *sensors_; }
    const SpMat& observation() const { return B_; }
    const Vec& load() const { return load_; }
    const GaussianFieldPrior& m_prior() const { return *m_prior_; }
    const GaussianFieldPrior& xi_prior() const { return *xi_prior_; }
    const PdeAssembler& nominal_assembler() const { return nominal_; }

private:
    const Mesh* mesh_;
    const SensorGrid* sensors_;
    const GaussianFieldPrior* m_prior_;
    const GaussianFieldPrior* xi_prior_;
    SpMat B_;
    Vec load_;
    PdeAssembler nominal_;  // volume operator at the xi-prior mean
};

// ForwardModel view of the approximate map F(m), with adjoint-based
// Jacobian actions through the incremental state/adjoint problems.
class PdeApproxForward : public ForwardModel {
public:
    explicit PdeApproxForward(const PdeProblem& problem) : problem_(&problem) {}

    int n_obs() const override { return problem_->n_obs(); }
    int n_param() const override { return problem_->mesh().n_bottom(); }
    Vec apply(const Vec& m) const override { return problem_->forward_approx(m); }
    std::unique_ptr<Linearization> linearize(const Vec& m) const override;

private:
    const PdeProblem* problem_;
};

// BAE mean and total-error covariance over all candidate sensors.
struct ErrorModel {
    Vec eps0;
    Mat Gamma_eps;
    double sigma = 0.0;
    Mat Gamma_nu;  // Gamma_eps + sigma^2 I
    int n_mc_used = 0;
    std::uint64_t seed = 0;

    int n_obs() const { return static_cast<int>(eps0.size()); }
};

// Model-error free likelihood: eps0 = 0, Gamma_nu = sigma^2 I.
ErrorModel noise_only_error_model(double sigma, int n_s);

// Monte Carlo estimate of the error statistics: mean and unbiased sample
// covariance of eps_i = G(m_i, xi_i) - F(m_i) over prior draws, followed by
// symmetrization and eigenvalue clipping before the noise shift is added.
ErrorModel estimate_bae(const SampledModel& model, int n_mc, std::uint64_t master_seed,
                        double sigma, int workers = 1);

struct TrainingSample {
    Vec m, xi, eta, y;  // y = G(m, xi) + eta
};

struct TrainingSet {
    std::vector<TrainingSample> samples;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    int size() const { return static_cast<int>(samples.size()); }
};

// Training triples drawn from streams disjoint from the BAE streams.
TrainingSet make_training_set(const SampledModel& model, int n_d, std::uint64_t master_seed,
                              double sigma, int workers = 1);

}  // namespace boed
