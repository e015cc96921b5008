#pragma once

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pmshoot/continuation.hpp"
#include "pmshoot/ode.hpp"
#include "pmshoot/shooting.hpp"

namespace pmshoot {

/// Full run configuration: problem parameters, scan window and resolutions,
/// solver tolerances, sweep setup, and output switches. Defaults follow the
/// module design decisions (coarse 0.1 / dense 0.005, eps 1e-6, IVP tolerances
/// 1e-8 / 1e-10).
struct RunConfig {
    ProblemParams problem{};

    double du_min = 0.0;
    double du_max = 2.0;
    double dv_min = 0.0;
    double dv_max = 2.0;
    double coarse_delta = 0.1;  // 0 = auto from window extent
    double dense_delta = 0.005; // 0 = auto (coarse / 20)
    int meeting_k = 3;

    double eps = 1e-6;
    double ivp_rel_tol = 1e-8;
    double ivp_abs_tol = 1e-10;
    unsigned threads = 0;

    double lambda_from = 1.0;
    double lambda_to = 50.0;
    double lambda_step = 1.0;
    double inflation = 1.5;
    ScanWindow lower_window{0.0, 30.0, 0.0, 15.0, 1.0};
    ScanWindow upper_window{10.0, 80.0, 1.0, 40.0, 1.0};

    std::string out_dir = "out";
    bool emit_grids = false;
    bool emit_profiles = false;

    void validate() const {
        problem.validate();
        if (!(du_min < du_max))
            throw std::invalid_argument("scan.du_min (" + std::to_string(du_min) +
                                        ") must be < scan.du_max (" + std::to_string(du_max) + ")");
        if (!(dv_min < dv_max))
            throw std::invalid_argument("scan.dv_min (" + std::to_string(dv_min) +
                                        ") must be < scan.dv_max (" + std::to_string(dv_max) + ")");
        if (coarse_delta > 0.0 && dense_delta > 0.0 && !(coarse_delta > dense_delta))
            throw std::invalid_argument("scan.coarse_delta (" + std::to_string(coarse_delta) +
                                        ") must exceed scan.dense_delta (" +
                                        std::to_string(dense_delta) + ")");
        if (!(eps > 10.0 * ivp_abs_tol))
            throw std::invalid_argument("solver.eps (" + std::to_string(eps) +
                                        ") must exceed 10 x solver.ivp_abs_tol (" +
                                        std::to_string(ivp_abs_tol) + ")");
        if (!(ivp_rel_tol > 0.0) || !(ivp_abs_tol > 0.0))
            throw std::invalid_argument("solver.ivp_rel_tol and solver.ivp_abs_tol must be > 0");
        if (!(lambda_step > 0.0))
            throw std::invalid_argument("sweep.lambda_step (" + std::to_string(lambda_step) +
                                        ") must be > 0");
        if (meeting_k < 2)
            throw std::invalid_argument("scan.meeting_k (" + std::to_string(meeting_k) +
                                        ") must be >= 2");
    }

    ScanWindow scan_window() const {
        return ScanWindow{du_min, du_max, dv_min, dv_max, coarse_delta > 0.0 ? coarse_delta : 0.1};
    }

    IvpSettings ivp() const {
        IvpSettings s;
        s.rel_tol = ivp_rel_tol;
        s.abs_tol = ivp_abs_tol;
        return s;
    }

    ScanPolicy scan_policy() const {
        ScanPolicy p;
        p.coarse_delta = coarse_delta;
        p.dense_delta = dense_delta;
        p.meeting_k = meeting_k;
        p.polish.eps = eps;
        p.ivp = ivp();
        p.threads = threads;
        return p;
    }

    SweepConfig sweep_config() const {
        SweepConfig c;
        c.lambda_from = lambda_from;
        c.lambda_to = lambda_to;
        c.lambda_step = lambda_step;
        c.inflation = inflation;
        c.lower_window = lower_window;
        c.upper_window = upper_window;
        return c;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": '" + value + "'");
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parses the sectioned key=value config text ('#' comments). Unknown keys are
/// rejected by name; values start from the documented defaults.
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: malformed section header: " + line);
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value, got: " + line);
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;

        const auto d = [&]() { return detail::parse_double(full, value); };
        const auto b = [&]() { return detail::parse_bool(full, value); };

        if (full == "problem.lambda") cfg.problem.lambda = d();
        else if (full == "problem.p") cfg.problem.p = d();
        else if (full == "problem.q") cfg.problem.q = d();
        else if (full == "problem.r") cfg.problem.r = d();
        else if (full == "scan.du_min") cfg.du_min = d();
        else if (full == "scan.du_max") cfg.du_max = d();
        else if (full == "scan.dv_min") cfg.dv_min = d();
        else if (full == "scan.dv_max") cfg.dv_max = d();
        else if (full == "scan.coarse_delta") cfg.coarse_delta = d();
        else if (full == "scan.dense_delta") cfg.dense_delta = d();
        else if (full == "scan.meeting_k") cfg.meeting_k = static_cast<int>(d());
        else if (full == "solver.eps") cfg.eps = d();
        else if (full == "solver.ivp_rel_tol") cfg.ivp_rel_tol = d();
        else if (full == "solver.ivp_abs_tol") cfg.ivp_abs_tol = d();
        else if (full == "solver.threads") cfg.threads = static_cast<unsigned>(d());
        else if (full == "sweep.lambda_from") cfg.lambda_from = d();
        else if (full == "sweep.lambda_to") cfg.lambda_to = d();
        else if (full == "sweep.lambda_step") cfg.lambda_step = d();
        else if (full == "sweep.inflation") cfg.inflation = d();
        else if (full == "sweep.lower_du_min") cfg.lower_window.du_min = d();
        else if (full == "sweep.lower_du_max") cfg.lower_window.du_max = d();
        else if (full == "sweep.lower_dv_min") cfg.lower_window.dv_min = d();
        else if (full == "sweep.lower_dv_max") cfg.lower_window.dv_max = d();
        else if (full == "sweep.upper_du_min") cfg.upper_window.du_min = d();
        else if (full == "sweep.upper_du_max") cfg.upper_window.du_max = d();
        else if (full == "sweep.upper_dv_min") cfg.upper_window.dv_min = d();
        else if (full == "sweep.upper_dv_max") cfg.upper_window.dv_max = d();
        else if (full == "output.dir") cfg.out_dir = value;
        else if (full == "output.emit_grids") cfg.emit_grids = b();
        else if (full == "output.emit_profiles") cfg.emit_profiles = b();
        else throw std::invalid_argument("config: unknown key: " + full);
    }
    cfg.validate();
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Inverse of parse_config: parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& cfg) {
    using detail::fmt_double;
    std::ostringstream o;
    o << "[problem]\n"
      << "lambda = " << fmt_double(cfg.problem.lambda) << "\n"
      << "p = " << fmt_double(cfg.problem.p) << "\n"
      << "q = " << fmt_double(cfg.problem.q) << "\n"
      << "r = " << fmt_double(cfg.problem.r) << "\n\n"
      << "[scan]\n"
      << "du_min = " << fmt_double(cfg.du_min) << "\n"
      << "du_max = " << fmt_double(cfg.du_max) << "\n"
      << "dv_min = " << fmt_double(cfg.dv_min) << "\n"
      << "dv_max = " << fmt_double(cfg.dv_max) << "\n"
      << "coarse_delta = " << fmt_double(cfg.coarse_delta) << "\n"
      << "dense_delta = " << fmt_double(cfg.dense_delta) << "\n"
      << "meeting_k = " << cfg.meeting_k << "\n\n"
      << "[solver]\n"
      << "eps = " << fmt_double(cfg.eps) << "\n"
      << "ivp_rel_tol = " << fmt_double(cfg.ivp_rel_tol) << "\n"
      << "ivp_abs_tol = " << fmt_double(cfg.ivp_abs_tol) << "\n"
      << "threads = " << cfg.threads << "\n\n"
      << "[sweep]\n"
      << "lambda_from = " << fmt_double(cfg.lambda_from) << "\n"
      << "lambda_to = " << fmt_double(cfg.lambda_to) << "\n"
      << "lambda_step = " << fmt_double(cfg.lambda_step) << "\n"
      << "inflation = " << fmt_double(cfg.inflation) << "\n"
      << "lower_du_min = " << fmt_double(cfg.lower_window.du_min) << "\n"
      << "lower_du_max = " << fmt_double(cfg.lower_window.du_max) << "\n"
      << "lower_dv_min = " << fmt_double(cfg.lower_window.dv_min) << "\n"
      << "lower_dv_max = " << fmt_double(cfg.lower_window.dv_max) << "\n"
      << "upper_du_min = " << fmt_double(cfg.upper_window.du_min) << "\n"
      << "upper_du_max = " << fmt_double(cfg.upper_window.du_max) << "\n"
      << "upper_dv_min = " << fmt_double(cfg.upper_window.dv_min) << "\n"
      << "upper_dv_max = " << fmt_double(cfg.upper_window.dv_max) << "\n\n"
      << "[output]\n"
      << "dir = " << cfg.out_dir << "\n"
      << "emit_grids = " << (cfg.emit_grids ? "true" : "false") << "\n"
      << "emit_profiles = " << (cfg.emit_profiles ? "true" : "false") << "\n";
    return o.str();
}

}  // namespace pmshoot
