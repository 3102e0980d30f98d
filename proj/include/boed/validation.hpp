#pragma once

#include <cstdint>
#include <vector>

#include "boed/oed.hpp"

namespace boed {

enum class InversionMode { Aware, Unaware };

struct ValidationSample {
    double trace = 0.0;      // reported posterior trace under the chosen mode
    double rel_error = 0.0;  // M-norm MAP error relative to the drawn truth
    bool failed = false;
};

struct ValidationReport {
    Design design;
    InversionMode mode = InversionMode::Aware;
    int n_v = 0;
    std::uint64_t seed = 0;
    double V_bar = 0.0;
    double E_map_bar = 0.0;
    double V_std_err = 0.0;
    double E_std_err = 0.0;
    std::vector<ValidationSample> per_sample;
    int failures = 0;
    bool untrusted = false;  // more than 5% of the samples failed
};

// Model context shared by the validation diagnostics.
struct ValidationSetup {
    const SampledModel* model = nullptr;    // generates truth and data
    const ForwardModel* forward = nullptr;  // approximate map used in inversion
    const ParamSpace* prior = nullptr;
    const ErrorModel* aware = nullptr;      // estimated error statistics
    double sigma = 1e-3;
    GnOptions gn;
    LanczosOptions lanczos = [] {
        LanczosOptions o;
        o.check_symmetry = false;
        return o;
    }();
    int workers = 1;

    void require_valid() const;
};

// Expected posterior variance and expected relative MAP error at a design:
// draws n_v validation triples (m, xi, eta), inverts each data vector under
// the mode's error model, and averages the reported posterior trace and the
// relative M-norm error of the MAP point. Failed solves are excluded and
// counted.
ValidationReport validate(const Design& design, const ValidationSetup& setup, int n_v,
                          InversionMode mode, std::uint64_t seed);

struct NdStudyRow {
    int n_d = 0;
    std::vector<int> picks;
    double objective = 0.0;  // greedy objective at the final design
    double V_bar = 0.0;
    double V_std_err = 0.0;
    double E_map_bar = 0.0;
};

// Training-set-size sweep: for each n_d run greedy on a fresh training set and
// score the resulting design against one common validation set.
std::vector<NdStudyRow> nd_study(const std::vector<int>& nd_values, int K,
                                 const ValidationSetup& setup, const OedObjectiveConfig& base,
                                 std::uint64_t train_seed, int n_v, std::uint64_t val_seed);

}  // namespace boed
