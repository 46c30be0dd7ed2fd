#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfp/model.hpp"

namespace kfp {

// Parse/validation failure with the offending config line (0 when the problem
// is not tied to one line).
class ConfigError : public std::runtime_error {
  public:
    ConfigError(int line, const std::string& message)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message
                                      : message),
          line_(line) {}
    int line() const { return line_; }

  private:
    int line_;
};

// Sections of key = value pairs, kept in file order so the JSON echo
// reproduces the input faithfully.
struct RawConfig {
    using Entries = std::vector<std::pair<std::string, std::string>>;
    std::vector<std::pair<std::string, Entries>> sections;

    const std::string* find(const std::string& section, const std::string& key) const {
        for (const auto& [name, entries] : sections) {
            if (name != section) continue;
            for (const auto& [k, v] : entries)
                if (k == key) return &v;
        }
        return nullptr;
    }
};

namespace detail {
inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
}  // namespace detail

// Flat INI-style text: [section] headers, key = value lines, # or ; comments.
inline RawConfig parse_config_text(const std::string& text) {
    RawConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    RawConfig::Entries* current = nullptr;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(lineno, "unterminated section header");
            std::string name = detail::trim(line.substr(1, line.size() - 2));
            if (name.empty()) throw ConfigError(lineno, "empty section name");
            cfg.sections.emplace_back(name, RawConfig::Entries{});
            current = &cfg.sections.back().second;
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(lineno, "expected key = value");
        if (current == nullptr)
            throw ConfigError(lineno, "key outside of any [section]");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(lineno, "empty key");
        current->emplace_back(key, value);
    }
    return cfg;
}

inline RawConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// Fully resolved experiment description.
struct ExperimentConfig {
    RawConfig raw;

    std::string system_name = "linear_ou";  // linear_ou | cubic | kinetic_fp | custom
    std::string v_kind = "power";           // kinetic_fp potential family
    double l = 1.0;
    int dim = 1;
    Eigen::MatrixXd custom_A, custom_sigma, custom_zx, custom_zy;  // custom system
    Eigen::VectorXd custom_z0;

    std::string kind = "simulate";
    double t = 1.0;
    Eigen::VectorXd initial_x, initial_y;
    Eigen::VectorXd h1, h2;
    double alpha = 2.0;
    double delta = 1.0;
    double epsilon = 0.1;
    double k1 = 0.0, k2 = 0.0;
    bool has_constants = false;
    double fd_step = 0.0;
    double clip_radius = 1e6;
    std::string f_name = "tanh_x";
    std::string weight = "cubic";  // cubic | zhang | both
    Eigen::VectorXd a_x, a_y, b_x, b_y;
    bool has_point_b = false;
    std::vector<double> t_list;
    std::optional<double> expected_mean;
    double grid_lo = -3.0, grid_hi = 3.0;
    int grid_points = 10;
    double tw_a = 0.5, tw_b = 0.1, tw_eps = 1.0;

    std::int64_t n_paths = 1000;
    int n_steps = 256;
    std::uint64_t master_seed = 1;

    std::string out_path = "results";
    std::string format = "csv+json";  // csv | json | csv+json
};

namespace detail {
inline double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(0, "invalid number for " + key + ": '" + v + "'");
    }
}

inline std::vector<double> parse_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::string token;
    std::istringstream ss(v);
    while (std::getline(ss, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        out.push_back(parse_double(token, key));
    }
    if (out.empty()) throw ConfigError(0, "empty list for " + key);
    return out;
}

inline Eigen::VectorXd parse_vector(const std::string& v, const std::string& key) {
    std::vector<double> vals = parse_list(v, key);
    Eigen::VectorXd out(static_cast<int>(vals.size()));
    for (int i = 0; i < out.size(); ++i) out(i) = vals[i];
    return out;
}

inline Eigen::MatrixXd parse_matrix(const std::string& v, int rows, int cols,
                                    const std::string& key) {
    std::vector<double> vals = parse_list(v, key);
    if (static_cast<int>(vals.size()) != rows * cols)
        throw ConfigError(0, key + " needs " + std::to_string(rows * cols) + " entries");
    Eigen::MatrixXd out(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) out(r, c) = vals[r * cols + c];
    return out;
}
}  // namespace detail

// Typed view of the raw sections plus range validation. Throws ConfigError on
// anything out of contract.
inline ExperimentConfig resolve_config(const RawConfig& raw) {
    ExperimentConfig cfg;
    cfg.raw = raw;

    auto get = [&raw](const std::string& sec, const std::string& key) {
        return raw.find(sec, key);
    };
    auto num = [&](const std::string& sec, const std::string& key, double& slot) {
        if (const std::string* v = get(sec, key)) slot = detail::parse_double(*v, key);
    };
    auto str = [&](const std::string& sec, const std::string& key, std::string& slot) {
        if (const std::string* v = get(sec, key)) slot = *v;
    };
    auto vec = [&](const std::string& sec, const std::string& key, Eigen::VectorXd& slot) {
        if (const std::string* v = get(sec, key)) slot = detail::parse_vector(*v, key);
    };

    str("system", "name", cfg.system_name);
    str("system", "v_kind", cfg.v_kind);
    num("system", "l", cfg.l);
    double dim_val = cfg.dim;
    num("system", "dim", dim_val);
    cfg.dim = static_cast<int>(dim_val);
    if (cfg.system_name != "linear_ou" && cfg.system_name != "cubic" &&
        cfg.system_name != "kinetic_fp" && cfg.system_name != "custom")
        throw ConfigError(0, "unknown system: " + cfg.system_name);
    if (cfg.system_name == "kinetic_fp") {
        if (cfg.dim < 1) throw ConfigError(0, "dim must be positive");
        if (cfg.v_kind != "power" && cfg.v_kind != "zero")
            throw ConfigError(0, "unknown v_kind: " + cfg.v_kind);
    }
    if (cfg.system_name == "custom") {
        double md = 1, dd = 1;
        num("system", "m", md);
        num("system", "d", dd);
        int m = static_cast<int>(md), d = static_cast<int>(dd);
        if (m < 1 || d < 1 || m > 8 || d > 8)
            throw ConfigError(0, "custom dimensions must be in [1, 8]");
        const std::string* av = get("system", "A");
        const std::string* sv = get("system", "sigma");
        const std::string* zxv = get("system", "drift_x");
        const std::string* zyv = get("system", "drift_y");
        if (!av || !sv || !zxv || !zyv)
            throw ConfigError(0, "custom system needs A, sigma, drift_x, drift_y");
        cfg.custom_A = detail::parse_matrix(*av, m, d, "A");
        cfg.custom_sigma = detail::parse_matrix(*sv, d, d, "sigma");
        cfg.custom_zx = detail::parse_matrix(*zxv, d, m, "drift_x");
        cfg.custom_zy = detail::parse_matrix(*zyv, d, d, "drift_y");
        cfg.custom_z0 = Eigen::VectorXd::Zero(d);
        if (const std::string* zv = get("system", "drift_const"))
            cfg.custom_z0 = detail::parse_vector(*zv, "drift_const");
    }

    str("experiment", "kind", cfg.kind);
    const std::vector<std::string> kinds = {"simulate", "gradient",  "couple",
                                            "harnack",  "bounds",    "lyapunov",
                                            "variance-compare"};
    bool known = false;
    for (const auto& k : kinds) known = known || k == cfg.kind;
    if (!known) throw ConfigError(0, "unknown experiment kind: " + cfg.kind);

    num("experiment", "t", cfg.t);
    if (!(cfg.t > 0.0)) throw ConfigError(0, "t must be positive");
    vec("experiment", "initial_x", cfg.initial_x);
    vec("experiment", "initial_y", cfg.initial_y);
    vec("experiment", "h1", cfg.h1);
    vec("experiment", "h2", cfg.h2);
    num("experiment", "alpha", cfg.alpha);
    num("experiment", "delta", cfg.delta);
    num("experiment", "epsilon", cfg.epsilon);
    num("experiment", "fd_step", cfg.fd_step);
    num("experiment", "clip_radius", cfg.clip_radius);
    str("experiment", "f", cfg.f_name);
    str("experiment", "weight", cfg.weight);
    if (cfg.weight != "cubic" && cfg.weight != "zhang" && cfg.weight != "both")
        throw ConfigError(0, "weight must be cubic, zhang, or both");
    if (const std::string* v = get("experiment", "k1")) {
        cfg.k1 = detail::parse_double(*v, "k1");
        cfg.has_constants = true;
    }
    if (const std::string* v = get("experiment", "k2")) {
        cfg.k2 = detail::parse_double(*v, "k2");
        cfg.has_constants = true;
    }
    vec("experiment", "a_x", cfg.a_x);
    vec("experiment", "a_y", cfg.a_y);
    if (get("experiment", "b_x") || get("experiment", "b_y")) {
        cfg.has_point_b = true;
        vec("experiment", "b_x", cfg.b_x);
        vec("experiment", "b_y", cfg.b_y);
    }
    if (const std::string* v = get("experiment", "t_list"))
        cfg.t_list = detail::parse_list(*v, "t_list");
    if (const std::string* v = get("experiment", "expected_mean"))
        cfg.expected_mean = detail::parse_double(*v, "expected_mean");
    num("experiment", "grid_lo", cfg.grid_lo);
    num("experiment", "grid_hi", cfg.grid_hi);
    double gp = cfg.grid_points;
    num("experiment", "grid_points", gp);
    cfg.grid_points = static_cast<int>(gp);
    num("experiment", "tilde_a", cfg.tw_a);
    num("experiment", "tilde_b", cfg.tw_b);
    num("experiment", "tilde_eps", cfg.tw_eps);

    if (cfg.kind == "harnack" && !(cfg.alpha > 1.0))
        throw ConfigError(0, "alpha must exceed 1");
    if (!(cfg.delta > 0.0)) throw ConfigError(0, "delta must be positive");
    if (cfg.kind == "variance-compare" && cfg.t_list.empty())
        throw ConfigError(0, "variance-compare needs t_list");
    if (cfg.grid_points < 2) throw ConfigError(0, "grid_points must be at least 2");
    if (!(cfg.grid_hi > cfg.grid_lo)) throw ConfigError(0, "grid_hi must exceed grid_lo");

    double np = static_cast<double>(cfg.n_paths), ns = cfg.n_steps, seed = 1;
    num("mc", "n_paths", np);
    num("mc", "n_steps", ns);
    if (const std::string* v = get("mc", "master_seed"))
        seed = detail::parse_double(*v, "master_seed");
    cfg.n_paths = static_cast<std::int64_t>(np);
    cfg.n_steps = static_cast<int>(ns);
    cfg.master_seed = static_cast<std::uint64_t>(seed);
    if (cfg.n_paths < 100) throw ConfigError(0, "n_paths must be at least 100");
    if (cfg.n_steps < 1) throw ConfigError(0, "n_steps must be positive");

    str("output", "path", cfg.out_path);
    str("output", "format", cfg.format);
    if (cfg.format != "csv" && cfg.format != "json" && cfg.format != "csv+json")
        throw ConfigError(0, "format must be csv, json, or csv+json");
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    return resolve_config(parse_config_file(path));
}

// Instantiate the system the config names.
inline SystemSpec build_system(const ExperimentConfig& cfg) {
    if (cfg.system_name == "linear_ou") return linear_ou();
    if (cfg.system_name == "cubic") return cubic_example();
    if (cfg.system_name == "kinetic_fp") {
        PotentialSpec pot;
        if (cfg.v_kind == "zero") {
            pot.V = [](const Eigen::VectorXd&) { return 0.0; };
            pot.gradV = [](const Eigen::VectorXd& x) {
                return Eigen::VectorXd::Zero(x.size()).eval();
            };
        } else {
            pot = power_potential(cfg.l);
        }
        return kinetic_fokker_planck(pot, cfg.dim);
    }
    auto zx = cfg.custom_zx;
    auto zy = cfg.custom_zy;
    auto z0 = cfg.custom_z0;
    auto drift = [zx, zy, z0](double, const State& p) -> Eigen::VectorXd {
        return zx * p.x + zy * p.y + z0;
    };
    auto dd = [zx, zy](double, const State&, const Direction& th) -> Eigen::VectorXd {
        return zx * th.h1 + zy * th.h2;
    };
    return SystemSpec("custom", cfg.custom_A, cfg.custom_sigma, drift, dd);
}

}  // namespace kfp
