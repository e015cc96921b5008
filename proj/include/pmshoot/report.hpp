#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmshoot/config.hpp"
#include "pmshoot/continuation.hpp"
#include "pmshoot/shooting.hpp"
#include "pmshoot/version.hpp"

namespace pmshoot {

namespace detail {

inline std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace detail

/// FNV-1a 64-bit content hash used by the run manifest.
inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& data) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
    return buf;
}

inline const char* kSolutionCsvHeader =
    "lambda,branch,du0,dv0,sup_v,sup_u,energy,residue_u1,residue_v1,symmetry_defect";

inline std::string solution_csv_row(const SolutionRecord& r) {
    using detail::fmt_num;
    std::ostringstream o;
    o << fmt_num(r.lambda) << "," << branch_name(r.branch) << "," << fmt_num(r.du0) << ","
      << fmt_num(r.dv0) << "," << fmt_num(r.sup_v) << "," << fmt_num(r.sup_u) << ","
      << fmt_num(r.energy) << "," << fmt_num(r.residue_u1) << "," << fmt_num(r.residue_v1) << ","
      << fmt_num(r.symmetry_defect);
    return o.str();
}

inline std::string solutions_csv(const std::vector<SolutionRecord>& recs) {
    std::ostringstream o;
    o << kSolutionCsvHeader << "\n";
    for (const auto& r : recs) o << solution_csv_row(r) << "\n";
    return o.str();
}

/// CSV form of a color grid: evaluated vertices only.
inline std::string grid_csv(const ColorGrid& grid) {
    using detail::fmt_num;
    std::ostringstream o;
    o << "du0,dv0,u1,v1,quadrant\n";
    for (std::size_t j = 0; j < grid.ny; ++j)
        for (std::size_t i = 0; i < grid.nx; ++i) {
            if (!grid.is_evaluated(i, j)) continue;
            const Residue& r = grid.residues[grid.idx(i, j)];
            o << fmt_num(grid.window.du_at(i)) << "," << fmt_num(grid.window.dv_at(j)) << ","
              << fmt_num(r.u1) << "," << fmt_num(r.v1) << "," << quadrant_name(grid.label(i, j))
              << "\n";
        }
    return o.str();
}

inline nlohmann::json record_json(const SolutionRecord& r, const ProblemParams& prm) {
    return nlohmann::json{{"lambda", r.lambda},
                          {"p", prm.p},
                          {"q", prm.q},
                          {"r", prm.r},
                          {"du0", r.du0},
                          {"dv0", r.dv0},
                          {"sup_v", r.sup_v},
                          {"sup_u", r.sup_u},
                          {"energy", r.energy},
                          {"residue_u1", r.residue_u1},
                          {"residue_v1", r.residue_v1},
                          {"branch", branch_name(r.branch)},
                          {"symmetry_defect", r.symmetry_defect}};
}

inline nlohmann::json threshold_json(const ThresholdReport& t) {
    return nlohmann::json{{"T", t.T},
                          {"hT", t.hT},
                          {"lambda0_basic", t.lambda0_basic},
                          {"gamma", t.gamma},
                          {"gamma_prime", t.gamma_prime},
                          {"k_emb", t.k_emb},
                          {"lambda0_improved", t.lambda0_improved}};
}

/// Writes run outputs under one directory and maintains manifest.json: config
/// echo, tool version, per-lambda outcomes, and a hashed file inventory. The
/// manifest is rewritten after every addition so an interrupted run still
/// describes exactly what landed on disk.
class RunWriter {
  public:
    RunWriter(std::string out_dir, std::string config_echo)
        : dir_(std::move(out_dir)), config_echo_(std::move(config_echo)) {
        std::filesystem::create_directories(dir_);
    }

    const std::string& dir() const { return dir_; }

    std::string write(const std::string& name, const std::string& content) {
        const std::string path = dir_ + "/" + name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << content;
        out.close();
        if (!out) throw std::runtime_error("write failed for " + path);
        const std::string hash = fnv1a64_hex(content);
        for (auto& f : files_)
            if (f.first == name) {
                f.second = hash;
                return path;
            }
        files_.push_back({name, hash});
        return path;
    }

    /// Same as write; named for call sites that rewrite a growing file.
    std::string write_incremental(const std::string& name, const std::string& content) {
        return write(name, content);
    }

    void add_outcome(const LambdaOutcome& o) {
        outcomes_.push_back(o);
        write_manifest(false);
    }

    void set_lambda_bif(double v) { lambda_bif_ = v; }

    void finalize() { write_manifest(true); }

    void write_manifest(bool complete) {
        nlohmann::json j;
        j["tool"] = "pmshoot";
        j["version"] = kVersion;
        j["config"] = config_echo_;
        j["complete"] = complete;
        j["hash_algorithm"] = "fnv1a64";
        if (lambda_bif_) j["lambda_bif"] = *lambda_bif_;
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& o : outcomes_)
            outs.push_back({{"lambda", o.lambda},
                            {"lower_found", o.lower_found},
                            {"upper_found", o.upper_found},
                            {"bisection_probe", o.bisection_probe}});
        j["outcomes"] = outs;
        nlohmann::json files = nlohmann::json::array();
        for (const auto& f : files_) files.push_back({{"path", f.first}, {"hash", f.second}});
        j["files"] = files;
        const std::string path = dir_ + "/manifest.json";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << j.dump(2) << "\n";
    }

  private:
    std::string dir_;
    std::string config_echo_;
    std::vector<LambdaOutcome> outcomes_;
    std::vector<std::pair<std::string, std::string>> files_;
    std::optional<double> lambda_bif_;
};

}  // namespace pmshoot
