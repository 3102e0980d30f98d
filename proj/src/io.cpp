#include "boed/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace boed {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace

std::string format_full(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

ConfigFile ConfigFile::parse(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        const std::string full = section.empty() ? key : section + "." + key;
        cfg.values_[full] = trim(line.substr(eq + 1));
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string ConfigFile::get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double ConfigFile::get(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": not a number: " + it->second);
    }
}

int ConfigFile::get(const std::string& key, int fallback) const {
    const double v = get(key, static_cast<double>(fallback));
    const int i = static_cast<int>(v);
    if (v != i) throw std::invalid_argument("config key " + key + ": not an integer");
    return i;
}

std::uint64_t ConfigFile::get(const std::string& key, std::uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::uint64_t v = 0;
    const auto [p, ec] =
        std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc() || p != it->second.data() + it->second.size())
        throw std::invalid_argument("config key " + key + ": not an unsigned integer");
    return v;
}

bool ConfigFile::get(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw std::invalid_argument("config key " + key + ": expected true/false");
}

std::string ConfigFile::serialize() const {
    // Group by section; the map ordering keeps output stable.
    std::ostringstream out;
    std::string section;
    bool first = true;
    for (const auto& [full, value] : values_) {
        const auto dot = full.rfind('.');
        const std::string sec = dot == std::string::npos ? "" : full.substr(0, dot);
        const std::string key = dot == std::string::npos ? full : full.substr(dot + 1);
        if (sec != section || first) {
            if (!first) out << "\n";
            if (!sec.empty()) out << "[" << sec << "]\n";
            section = sec;
        }
        out << key << " = " << value << "\n";
        first = false;
    }
    return out.str();
}

RunConfig RunConfig::from_config(const ConfigFile& cfg) {
    RunConfig rc;
    rc.nx = cfg.get("mesh.nx", rc.nx);
    rc.ny = cfg.get("mesh.ny", rc.ny);
    rc.nz = cfg.get("mesh.nz", rc.nz);
    rc.sensor_grid = cfg.get("sensors.grid", rc.sensor_grid);
    rc.sensor_margin = cfg.get("sensors.margin", rc.sensor_margin);
    rc.sigma = cfg.get("noise.sigma", rc.sigma);
    if (cfg.has("prior_m.theta")) rc.m_theta = cfg.get("prior_m.theta", 0.0);
    if (cfg.has("prior_m.alpha")) rc.m_alpha = cfg.get("prior_m.alpha", 0.0);
    if (cfg.has("prior_m.beta")) rc.m_beta = cfg.get("prior_m.beta", 0.0);
    if (cfg.has("prior_xi.theta_h")) rc.xi_theta_h = cfg.get("prior_xi.theta_h", 0.0);
    if (cfg.has("prior_xi.theta_v")) rc.xi_theta_v = cfg.get("prior_xi.theta_v", 0.0);
    if (cfg.has("prior_xi.gamma")) rc.xi_gamma = cfg.get("prior_xi.gamma", 0.0);
    if (cfg.has("prior_xi.beta")) rc.xi_beta = cfg.get("prior_xi.beta", 0.0);
    rc.n_mc = cfg.get("run.n_mc", rc.n_mc);
    rc.n_d = cfg.get("run.n_d", rc.n_d);
    rc.n_tr = cfg.get("run.n_tr", rc.n_tr);
    rc.n_v = cfg.get("run.n_v", rc.n_v);
    rc.K = cfg.get("run.K", rc.K);
    const std::string obj = cfg.get("run.objective", std::string("eig"));
    if (obj == "eig")
        rc.objective = ObjectiveKind::Eig;
    else if (obj == "trace")
        rc.objective = ObjectiveKind::Trace;
    else
        throw std::invalid_argument("config key run.objective: expected eig or trace");
    rc.seed = cfg.get("run.seed", rc.seed);
    rc.out_dir = cfg.get("run.out_dir", rc.out_dir);
    rc.unaware = cfg.get("run.unaware", rc.unaware);
    rc.warm_start = cfg.get("run.warm_start", rc.warm_start);
    const std::string mode = cfg.get("run.inversion_mode", std::string("aware"));
    if (mode == "aware")
        rc.inversion_mode = InversionMode::Aware;
    else if (mode == "unaware")
        rc.inversion_mode = InversionMode::Unaware;
    else
        throw std::invalid_argument("config key run.inversion_mode: expected aware or unaware");
    rc.workers = cfg.get("run.workers", rc.workers);
    if (rc.nx < 2 || rc.ny < 2 || rc.nz < 1)
        throw std::invalid_argument("config: mesh must be at least 2x2x1");
    if (rc.sensor_grid < 1) throw std::invalid_argument("config: sensors.grid must be positive");
    if (rc.sigma <= 0.0) throw std::invalid_argument("config: noise.sigma must be positive");
    if (rc.n_mc < 2 || rc.n_d < 1 || rc.n_tr < 1 || rc.n_v < 1 || rc.K < 1)
        throw std::invalid_argument("config: counts must be positive (n_mc at least 2)");
    return rc;
}

ConfigFile RunConfig::to_config() const {
    ConfigFile cfg;
    cfg.set("mesh.nx", std::to_string(nx));
    cfg.set("mesh.ny", std::to_string(ny));
    cfg.set("mesh.nz", std::to_string(nz));
    cfg.set("sensors.grid", std::to_string(sensor_grid));
    cfg.set("sensors.margin", format_full(sensor_margin));
    cfg.set("noise.sigma", format_full(sigma));
    if (m_theta) cfg.set("prior_m.theta", format_full(*m_theta));
    if (m_alpha) cfg.set("prior_m.alpha", format_full(*m_alpha));
    if (m_beta) cfg.set("prior_m.beta", format_full(*m_beta));
    if (xi_theta_h) cfg.set("prior_xi.theta_h", format_full(*xi_theta_h));
    if (xi_theta_v) cfg.set("prior_xi.theta_v", format_full(*xi_theta_v));
    if (xi_gamma) cfg.set("prior_xi.gamma", format_full(*xi_gamma));
    if (xi_beta) cfg.set("prior_xi.beta", format_full(*xi_beta));
    cfg.set("run.n_mc", std::to_string(n_mc));
    cfg.set("run.n_d", std::to_string(n_d));
    cfg.set("run.n_tr", std::to_string(n_tr));
    cfg.set("run.n_v", std::to_string(n_v));
    cfg.set("run.K", std::to_string(K));
    cfg.set("run.objective", objective == ObjectiveKind::Eig ? "eig" : "trace");
    cfg.set("run.seed", std::to_string(seed));
    cfg.set("run.out_dir", out_dir);
    cfg.set("run.unaware", unaware ? "true" : "false");
    cfg.set("run.warm_start", warm_start ? "true" : "false");
    cfg.set("run.inversion_mode", inversion_mode == InversionMode::Aware ? "aware" : "unaware");
    cfg.set("run.workers", std::to_string(workers));
    return cfg;
}

PriorOverrides RunConfig::m_prior_overrides() const {
    PriorOverrides ov;
    ov.theta = m_theta;
    ov.alpha = m_alpha;
    ov.robin_beta = m_beta;
    return ov;
}

PriorOverrides RunConfig::xi_prior_overrides() const {
    PriorOverrides ov;
    if (xi_theta_h || xi_theta_v) {
        const double h = xi_theta_h.value_or(0.25);
        const double v = xi_theta_v.value_or(0.25 / 100.0);
        ov.Theta_diag = Eigen::Vector3d(h, h, v);
    }
    ov.gamma = xi_gamma;
    ov.robin_beta = xi_beta;
    return ov;
}

void save_error_model(const ErrorModel& em, const std::filesystem::path& dir,
                      const std::string& stem) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out = open_out(dir / (stem + "_eps0.csv"));
        out << "# n_mc=" << em.n_mc_used << " seed=" << em.seed
            << " sigma=" << format_full(em.sigma) << "\n";
        for (int i = 0; i < em.eps0.size(); ++i)
            out << format_full(em.eps0[i]) << (i + 1 < em.eps0.size() ? "," : "");
        out << "\n";
    }
    {
        std::ofstream out = open_out(dir / (stem + "_gamma_nu.csv"));
        out << "# n_mc=" << em.n_mc_used << " seed=" << em.seed
            << " sigma=" << format_full(em.sigma) << "\n";
        for (int i = 0; i < em.Gamma_nu.rows(); ++i) {
            for (int j = 0; j < em.Gamma_nu.cols(); ++j)
                out << format_full(em.Gamma_nu(i, j)) << (j + 1 < em.Gamma_nu.cols() ? "," : "");
            out << "\n";
        }
    }
}

namespace {

std::vector<double> parse_csv_row(const std::string& line) {
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    return row;
}

void parse_meta(const std::string& line, ErrorModel& em) {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        if (tok.rfind("n_mc=", 0) == 0) em.n_mc_used = std::stoi(tok.substr(5));
        if (tok.rfind("seed=", 0) == 0) em.seed = std::stoull(tok.substr(5));
        if (tok.rfind("sigma=", 0) == 0) em.sigma = std::stod(tok.substr(6));
    }
}

}  // namespace

ErrorModel load_error_model(const std::filesystem::path& dir, const std::string& stem) {
    ErrorModel em;
    {
        std::ifstream in = open_in(dir / (stem + "_eps0.csv"));
        std::string line;
        std::getline(in, line);
        parse_meta(line, em);
        std::getline(in, line);
        const std::vector<double> row = parse_csv_row(line);
        em.eps0 = Eigen::Map<const Vec>(row.data(), static_cast<Eigen::Index>(row.size()));
    }
    {
        std::ifstream in = open_in(dir / (stem + "_gamma_nu.csv"));
        std::string line;
        std::getline(in, line);  // metadata, already read
        std::vector<std::vector<double>> rows;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            rows.push_back(parse_csv_row(line));
        }
        const int n = static_cast<int>(rows.size());
        em.Gamma_nu = Mat(n, n);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(rows[i].size()) != n)
                throw std::runtime_error("load_error_model: ragged covariance matrix");
            for (int j = 0; j < n; ++j) em.Gamma_nu(i, j) = rows[i][j];
        }
    }
    if (em.eps0.size() != em.Gamma_nu.rows())
        throw std::runtime_error("load_error_model: eps0 and covariance size mismatch");
    em.Gamma_eps = em.Gamma_nu - em.sigma * em.sigma * Mat::Identity(em.Gamma_nu.rows(),
                                                                     em.Gamma_nu.cols());
    return em;
}

void save_greedy(const GreedyTrace& trace, const RunConfig& cfg,
                 const std::filesystem::path& dir, const std::string& stem) {
    std::filesystem::create_directories(dir);
    nlohmann::json j;
    j["picks"] = trace.picks;
    j["objective_values"] = trace.objective_values;
    j["evaluations"] = trace.evaluations;
    j["warnings"] = trace.warnings;
    j["seed"] = cfg.seed;
    nlohmann::json echo;
    const ConfigFile echo_cfg = cfg.to_config();
    for (const auto& [k, v] : echo_cfg.values()) echo[k] = v;
    j["config"] = echo;
    {
        std::ofstream out = open_out(dir / (stem + ".json"));
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out = open_out(dir / (stem + "_design.txt"));
        for (int p : trace.picks) out << p << "\n";
    }
    {
        std::ofstream out = open_out(dir / (stem + "_objective.csv"));
        out << "step,sensor,objective\n";
        for (std::size_t i = 0; i < trace.picks.size(); ++i)
            out << i + 1 << "," << trace.picks[i] << "," << format_full(trace.objective_values[i])
                << "\n";
    }
}

std::vector<int> load_design_file(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<int> picks;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        picks.push_back(std::stoi(line));
    }
    return picks;
}

void save_validation_report(const ValidationReport& report, const std::filesystem::path& dir,
                            const std::string& stem) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out = open_out(dir / (stem + ".csv"));
        out << "sample,trace,rel_error,failed\n";
        for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
            const ValidationSample& s = report.per_sample[i];
            out << i << "," << format_full(s.trace) << "," << format_full(s.rel_error) << ","
                << (s.failed ? 1 : 0) << "\n";
        }
    }
    nlohmann::json j;
    j["n_v"] = report.n_v;
    j["seed"] = report.seed;
    j["mode"] = report.mode == InversionMode::Aware ? "aware" : "unaware";
    j["V_bar"] = report.V_bar;
    j["E_map_bar"] = report.E_map_bar;
    j["V_std_err"] = report.V_std_err;
    j["E_std_err"] = report.E_std_err;
    j["failures"] = report.failures;
    j["untrusted"] = report.untrusted;
    j["design"] = report.design.active;
    std::ofstream out = open_out(dir / (stem + "_summary.json"));
    out << j.dump(2) << "\n";
}

void save_vector_csv(const Vec& v, const std::filesystem::path& path) {
    std::ofstream out = open_out(path);
    for (int i = 0; i < v.size(); ++i) out << format_full(v[i]) << "\n";
}

Vec load_vector_csv(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        vals.push_back(std::stod(line));
    }
    return Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

}  // namespace boed
