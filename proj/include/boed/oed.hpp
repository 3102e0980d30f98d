#pragma once

#include <string>
#include <vector>

#include "boed/inversion.hpp"

namespace boed {

enum class ObjectiveKind { Eig, Trace };

// Everything an objective evaluation needs: the model pair, the training data,
// the error statistics, and the solver knobs.
struct OedObjectiveConfig {
    ObjectiveKind kind = ObjectiveKind::Eig;
    const ForwardModel* forward = nullptr;
    const ParamSpace* prior = nullptr;
    const TrainingSet* training = nullptr;
    const ErrorModel* error_model = nullptr;
    int n_tr = 30;
    int fixed_rank = 0;  // 0: rank follows the number of active sensors
    std::uint64_t trace_seed = 0;
    GnOptions gn;
    LanczosOptions lanczos = [] {
        LanczosOptions o;
        o.check_symmetry = false;  // probed separately; too costly per evaluation
        return o;
    }();
    double trace_cg_rtol = 1e-6;
    int trace_cg_maxiter = 500;
    int workers = 1;

    int n_d() const { return training ? training->size() : 0; }
    void require_valid() const;
};

struct ObjectiveEval {
    double value = 0.0;
    bool valid = false;
    std::string message;
    std::vector<Vec> maps;  // per-training-sample MAP points (eig kind)
};

// One objective evaluation at design w; init, when given, supplies warm-start
// points per training sample.
ObjectiveEval evaluate_objective(const Design& w, const OedObjectiveConfig& cfg,
                                 const std::vector<Vec>* init = nullptr);

// Expected-uncertainty-reduction objective: minus the average over training
// samples of the low-rank posterior trace reduction. Always <= 0; throws on
// MAP failure.
double phi_eig(const Design& w, const OedObjectiveConfig& cfg);

// Randomized estimator of the average posterior trace. The probing vectors
// z_j ~ N(0, C_pr) depend only on (trace_seed, j), so evaluations at different
// designs share randomness bitwise.
double phi_trace(const Design& w, const OedObjectiveConfig& cfg);

struct GreedyOptions {
    bool warm_start = true;
    int workers = 1;
};

struct GreedyTrace {
    int n_s = 0;
    std::vector<int> picks;              // in selection order
    std::vector<double> objective_values;
    long evaluations = 0;
    std::vector<std::string> warnings;

    Design design() const;
};

// Greedy minimization: at every step score all remaining candidates and take
// the argmin, breaking ties toward the lowest sensor index.
GreedyTrace greedy(int K, const OedObjectiveConfig& cfg, const GreedyOptions& opts = {});

// The model-error-blind likelihood used for "unaware" designs and inversions.
ErrorModel unaware_error_model(double sigma, int n_s);

// Uniform random K-subset of the candidate sensors.
Design random_design(int K, int n_s, RngStream& stream);

}  // namespace boed
