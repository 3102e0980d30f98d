#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "boed/forward.hpp"
#include "boed/oed.hpp"
#include "boed/validation.hpp"

namespace boed {

// Flat key-value configuration with [section] headers; keys are stored as
// "section.key". Blank lines and '#' comments are ignored.
class ConfigFile {
public:
    static ConfigFile parse(const std::string& text);
    static ConfigFile load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback) const;
    double get(const std::string& key, double fallback) const;
    int get(const std::string& key, int fallback) const;
    std::uint64_t get(const std::string& key, std::uint64_t fallback) const;
    bool get(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    std::string serialize() const;  // round-trips losslessly through parse()

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// Full experiment configuration; the defaults reproduce the reference setup
// at the 20x20x4 mesh.
struct RunConfig {
    int nx = 20, ny = 20, nz = 4;
    int sensor_grid = 10;
    double sensor_margin = 0.05;
    double sigma = 1e-3;
    std::optional<double> m_theta, m_alpha, m_beta;
    std::optional<double> xi_theta_h, xi_theta_v, xi_gamma, xi_beta;
    int n_mc = 1000;
    int n_d = 5;
    int n_tr = 30;
    int n_v = 100;
    int K = 10;
    ObjectiveKind objective = ObjectiveKind::Eig;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    bool unaware = false;
    bool warm_start = true;
    InversionMode inversion_mode = InversionMode::Aware;
    int workers = 0;  // 0: hardware default

    static RunConfig from_config(const ConfigFile& cfg);
    ConfigFile to_config() const;
    PriorOverrides m_prior_overrides() const;
    PriorOverrides xi_prior_overrides() const;
};

// Error-statistics persistence: eps0 and Gamma_nu as CSV plus a metadata
// header; values round-trip bit-exactly through 17 significant digits.
void save_error_model(const ErrorModel& em, const std::filesystem::path& dir,
                      const std::string& stem);
ErrorModel load_error_model(const std::filesystem::path& dir, const std::string& stem);

// Greedy output: JSON record plus a newline-separated design file.
void save_greedy(const GreedyTrace& trace, const RunConfig& cfg,
                 const std::filesystem::path& dir, const std::string& stem);
std::vector<int> load_design_file(const std::filesystem::path& path);

void save_validation_report(const ValidationReport& report, const std::filesystem::path& dir,
                            const std::string& stem);

void save_vector_csv(const Vec& v, const std::filesystem::path& path);
Vec load_vector_csv(const std::filesystem::path& path);

std::string format_full(double v);  // 17 significant digits

}  // namespace boed
