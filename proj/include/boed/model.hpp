#pragma once

#include <memory>

#include "boed/rng.hpp"
#include "boed/sparse_ops.hpp"

namespace boed {

// Parameter space with a Gaussian measure on it. Operators follow the
// mass-weighted duality convention: covariance maps duals to primal fields,
// precision maps primal fields to duals, and the Cameron-Martin inner product
// of primal fields a, b is a^T (precision) b.
class ParamSpace {
public:
    virtual ~ParamSpace() = default;
    virtual int dim() const = 0;
    virtual Vec mean() const = 0;
    virtual Vec apply_mass(const Vec& f) const = 0;
    virtual Vec apply_cov(const Vec& dual) const = 0;
    virtual Vec apply_precision(const Vec& primal) const = 0;
    virtual double cm_inner(const Vec& a, const Vec& b) const = 0;
    virtual Vec sample(RngStream& stream) const = 0;
    virtual double trace_cov() const = 0;  // tr of the covariance in the weighted space
    virtual Vec cov_diag() const = 0;      // pointwise prior variance

    double mass_inner(const Vec& a, const Vec& b) const { return a.dot(apply_mass(b)); }
    double mass_norm(const Vec& a) const { return std::sqrt(std::max(0.0, mass_inner(a, a))); }
};

// Linearization of a parameter-to-observable map at a fixed parameter.
// The Jacobian adjoint returns a dual vector on the parameter space.
class Linearization {
public:
    virtual ~Linearization() = default;
    virtual const Vec& value() const = 0;
    virtual Vec apply_jacobian(const Vec& dm) const = 0;
    virtual Vec apply_jacobian_adjoint(const Vec& r) const = 0;
};

class ForwardModel {
public:
    virtual ~ForwardModel() = default;
    virtual int n_obs() const = 0;
    virtual int n_param() const = 0;
    virtual Vec apply(const Vec& m) const = 0;
    virtual std::unique_ptr<Linearization> linearize(const Vec& m) const = 0;
};

// Accurate/approximate model pair with its parameter priors; the sampling
// interface the error-statistics estimation and training-data generation use.
class SampledModel {
public:
    virtual ~SampledModel() = default;
    virtual int n_obs() const = 0;
    virtual Vec forward_full(const Vec& m, const Vec& xi) const = 0;
    virtual Vec forward_approx(const Vec& m) const = 0;
    virtual Vec sample_m(RngStream& stream) const = 0;
    virtual Vec sample_xi(RngStream& stream) const = 0;
};

}  // namespace boed
