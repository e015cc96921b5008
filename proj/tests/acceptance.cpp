// Acceptance suite: every criterion prints one [PASS]/[FAIL] line. Criteria
// 1-4 drive the CLI binary end to end; 5-8 re-verify the solutions it found.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "oracles.hpp"
#include "pmshoot/analysis.hpp"
#include "pmshoot/ode.hpp"

#ifndef PMSHOOT_CLI
#error "PMSHOOT_CLI must point at the CLI binary"
#endif

using namespace pmshoot;

namespace {

struct CsvRow {
    double lambda = 0, du0 = 0, dv0 = 0, sup_v = 0, sup_u = 0, energy = 0;
    double residue_u1 = 0, residue_v1 = 0, symmetry_defect = 0;
    std::string branch;
};

std::string out_root() {
    const auto dir = std::filesystem::temp_directory_path() / "pmshoot_acceptance";
    std::filesystem::create_directories(dir);
    return dir.string();
}

int run_cli(const std::string& args, const std::string& log_name) {
    const std::string log = out_root() + "/" + log_name;
    const std::string cmd = std::string(PMSHOOT_CLI) + " " + args + " > " + log + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<CsvRow> read_solution_csv(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));  // header
    std::vector<CsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        REQUIRE(fields.size() == 10);
        CsvRow r;
        r.lambda = std::strtod(fields[0].c_str(), nullptr);
        r.branch = fields[1];
        r.du0 = std::strtod(fields[2].c_str(), nullptr);
        r.dv0 = std::strtod(fields[3].c_str(), nullptr);
        r.sup_v = std::strtod(fields[4].c_str(), nullptr);
        r.sup_u = std::strtod(fields[5].c_str(), nullptr);
        r.energy = std::strtod(fields[6].c_str(), nullptr);
        r.residue_u1 = std::strtod(fields[7].c_str(), nullptr);
        r.residue_v1 = std::strtod(fields[8].c_str(), nullptr);
        r.symmetry_defect = std::strtod(fields[9].c_str(), nullptr);
        rows.push_back(r);
    }
    return rows;
}

void banner(int n, const std::string& what, bool pass) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", n, what.c_str());
    std::fflush(stdout);
}

const std::string kSweepDir = out_root() + "/sweep_1_48";

// The lambda in [1,48] sweep backs criteria 4-7; run it once.
const std::vector<CsvRow>& sweep_rows() {
    static std::vector<CsvRow> rows = [] {
        const int rc = run_cli("trace --p 3 --q 1.5 --r 0.3333333333333333 "
                               "--lambda-from 1 --lambda-to 48 --lambda-step 1 --threads 2 "
                               "--out " + kSweepDir,
                               "trace_1_48.log");
        REQUIRE(rc == 0);
        return read_solution_csv(kSweepDir + "/bifurcation.csv");
    }();
    return rows;
}

ProblemParams params_at(double lambda) { return ProblemParams{lambda, 3.0, 1.5, 1.0 / 3.0}; }

}  // namespace

TEST_CASE("criterion 1: analytic thresholds via the bounds command") {
    const int rc = run_cli("bounds --p 3 --q 1.5 --r 0.3333333333333333 --json", "bounds.json");
    REQUIRE(rc == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(out_root() + "/bounds.json"));
    const double basic = j.at("lambda0_basic").get<double>();
    const double improved = j.at("lambda0_improved").get<double>();
    const bool ok = std::fabs(basic - 2.21) < 0.01 && std::fabs(improved - 16.02) < 0.05;
    CHECK(std::fabs(basic - 2.21) < 0.01);
    CHECK(std::fabs(improved - 16.02) < 0.05);
    banner(1, "lambda0 ~ 2.21 (+-0.01) and improved lambda0 ~ 16.02 (+-0.05)", ok);
}

TEST_CASE("criterion 2: both lambda=10 solutions from the solve command") {
    const std::string lower_dir = out_root() + "/solve_lower";
    const std::string upper_dir = out_root() + "/solve_upper";
    REQUIRE(run_cli("solve --lambda 10 --p 3 --q 1.5 --r 0.3333333333333333 "
                    "--du-min 0 --du-max 5 --dv-min 0 --dv-max 1 --threads 2 --out " + lower_dir,
                    "solve_lower.log") == 0);
    REQUIRE(run_cli("solve --lambda 10 --p 3 --q 1.5 --r 0.3333333333333333 "
                    "--du-min 30 --du-max 60 --dv-min 5 --dv-max 30 --threads 2 --out " + upper_dir,
                    "solve_upper.log") == 0);
    const auto lower = read_solution_csv(lower_dir + "/solutions.csv");
    const auto upper = read_solution_csv(upper_dir + "/solutions.csv");
    REQUIRE(lower.size() == 1);
    REQUIRE(upper.size() == 1);

    const bool lower_ok = std::fabs(lower[0].du0 - 1.0) < 0.1 &&
                          std::fabs(lower[0].dv0 - 0.03) < 0.1 &&
                          std::fabs(lower[0].residue_u1) < 1e-6 &&
                          std::fabs(lower[0].residue_v1) < 1e-6;
    const bool upper_ok = std::fabs(upper[0].du0 - 44.0) < 1.5 &&
                          std::fabs(upper[0].dv0 - 16.5) < 1.5 &&
                          std::fabs(upper[0].residue_u1) < 1e-6 &&
                          std::fabs(upper[0].residue_v1) < 1e-6;
    CHECK(lower_ok);
    CHECK(upper_ok);
    banner(2, "roots near (1, 0.03) and (44, 16.5) with residues < 1e-6", lower_ok && upper_ok);
}

TEST_CASE("criterion 3: fold location from trace over [40, 52]") {
    const std::string dir = out_root() + "/trace_fold";
    REQUIRE(run_cli("trace --p 3 --q 1.5 --r 0.3333333333333333 "
                    "--lambda-from 40 --lambda-to 52 --lambda-step 0.5 --threads 2 --out " + dir,
                    "trace_fold.log") == 0);
    const nlohmann::json j = nlohmann::json::parse(slurp(dir + "/manifest.json"));
    REQUIRE(j.contains("lambda_bif"));
    const double bif = j["lambda_bif"].get<double>();
    const bool ok = bif >= 46.0 && bif <= 51.0;
    CHECK(ok);
    banner(3, "lambda_bif = " + std::to_string(bif) + " inside [46, 51]", ok);
}

TEST_CASE("criterion 4: branch ordering and approach on the [1, 48] sweep") {
    const auto& rows = sweep_rows();
    REQUIRE_FALSE(rows.empty());

    std::map<double, std::pair<const CsvRow*, const CsvRow*>> by_lambda;  // lower, upper
    for (const auto& r : rows) {
        auto& slot = by_lambda[r.lambda];
        if (r.branch == "lower") slot.first = &r;
        if (r.branch == "upper") slot.second = &r;
    }

    bool ordering_ok = true;
    std::vector<std::pair<double, double>> gaps;  // (lambda, gap) where both present
    for (const auto& [lambda, pair] : by_lambda) {
        if (!pair.first || !pair.second) continue;
        if (!(pair.first->sup_v < pair.second->sup_v)) ordering_ok = false;
        gaps.emplace_back(lambda, pair.second->sup_v - pair.first->sup_v);
    }
    REQUIRE(gaps.size() >= 40);  // the sweep grid has 48 lambdas

    bool approach_ok = true;
    for (std::size_t i = 0; i + 1 < gaps.size(); ++i)
        if (gaps[i + 1].second > gaps[i].second + 1e-3) approach_ok = false;

    CHECK(ordering_ok);
    CHECK(approach_ok);
    banner(4, "sup_v(lower) < sup_v(upper) everywhere; gap non-increasing (1e-3)",
           ordering_ok && approach_ok);
}

TEST_CASE("criterion 5: symmetry of every polished solution") {
    const auto& rows = sweep_rows();
    bool all_ok = true;
    for (const auto& r : rows) {
        const Trajectory traj = integrate(r.du0, r.dv0, params_at(r.lambda));
        REQUIRE(traj.ok());
        const SymmetryReport rep = verify_symmetry(traj);
        const double sup_v = traj.sup_abs_v();
        const double rel = sup_v > 0.0 ? rep.v_sym_defect / sup_v : 0.0;
        const bool ok = rel < 1e-4 && std::fabs(rep.v_max_location - 0.5) <= 1.0 / 512.0 + 1e-12 &&
                        std::fabs(rep.u_max_location - 0.5) <= 1.0 / 512.0 + 1e-12 &&
                        rep.critical_point_count == 1 && rep.u_critical_point_count == 1;
        INFO("lambda=" << r.lambda << " branch=" << r.branch << " rel defect=" << rel
                       << " v_max at " << rep.v_max_location
                       << " crit=" << rep.critical_point_count);
        CHECK(ok);
        all_ok = all_ok && ok;
    }
    banner(5, "relative symmetry defect < 1e-4, max at 1/2, one critical point (" +
                  std::to_string(rows.size()) + " solutions)",
           all_ok);
}

TEST_CASE("criterion 6: residual decay and nonnegativity of every solution") {
    const auto& rows = sweep_rows();
    bool all_ok = true;
    for (const auto& r : rows) {
        const ProblemParams prm = params_at(r.lambda);
        // Tightened integration so the measured decay is the second-difference
        // truncation, not the dense-output interpolation floor.
        IvpSettings s256, s512, s1024;
        s256.rel_tol = s512.rel_tol = s1024.rel_tol = 1e-10;
        s256.abs_tol = s512.abs_tol = s1024.abs_tol = 1e-12;
        s256.grid_cells = 256;
        s512.grid_cells = 512;
        s1024.grid_cells = 1024;
        const Trajectory t256 = integrate(r.du0, r.dv0, prm, s256);
        const Trajectory t512 = integrate(r.du0, r.dv0, prm, s512);
        const Trajectory t1024 = integrate(r.du0, r.dv0, prm, s1024);
        REQUIRE(t512.ok());
        // Fixed interior margin: there the solution has bounded fourth
        // derivatives and the second-difference defect decays at order 2 (the
        // concave term's derivatives blow up at the endpoints, where no fixed
        // order holds).
        const double d256 = verify_residual(t256, prm).interior_max_defect;
        const double d512 = verify_residual(t512, prm).interior_max_defect;
        const double d1024 = verify_residual(t1024, prm).interior_max_defect;
        bool ok = t256.ok() && t1024.ok();
        if (ok && d1024 > 5e-9) {  // above the integrator noise floor
            const double r1 = d256 / d512;
            const double r2 = d512 / d1024;
            ok = r1 > 2.0 && r1 < 8.0 && r2 > 2.0 && r2 < 8.0;
        }
        const bool nonneg = t512.min_u() > -1e-5 && t512.min_v() > -1e-5;
        INFO("lambda=" << r.lambda << " branch=" << r.branch << " defects " << d256 << " / "
                       << d512 << " / " << d1024 << " min_u=" << t512.min_u()
                       << " min_v=" << t512.min_v());
        CHECK(ok);
        CHECK(nonneg);
        all_ok = all_ok && ok && nonneg;
    }
    banner(6, "order-2 interior residual decay and min u, v > -1e-5 (" +
                  std::to_string(rows.size()) + " solutions)",
           all_ok);
}

TEST_CASE("criterion 7: energy signs on the lambda=1 solutions") {
    const auto& rows = sweep_rows();
    const CsvRow* lower = nullptr;
    const CsvRow* upper = nullptr;
    for (const auto& r : rows) {
        if (r.lambda == 1.0 && r.branch == "lower") lower = &r;
        if (r.lambda == 1.0 && r.branch == "upper") upper = &r;
    }
    REQUIRE(lower != nullptr);
    const bool ok = lower->energy < 0.0;
    CHECK(ok);
    if (upper != nullptr)
        std::printf("  (report) upper-branch energy at lambda=1: J = %.8g (sign %s, not asserted)\n",
                    upper->energy, upper->energy > 0 ? "+" : "-");
    char jbuf[40];
    std::snprintf(jbuf, sizeof(jbuf), "%.6g", lower->energy);
    banner(7, std::string("lower-branch J(lambda=1) = ") + jbuf + " < 0", ok);
}

TEST_CASE("external interfaces: scan and verify round out the CLI surface") {
    const std::string dir = out_root() + "/scan_upper";
    REQUIRE(run_cli("scan --lambda 10 --p 3 --q 1.5 --r 0.3333333333333333 "
                    "--du-min 43.5 --du-max 44 --dv-min 16.2 --dv-max 16.7 "
                    "--coarse-delta 0.05 --dense-delta 0.005 --threads 2 --out " + dir,
                    "scan_upper.log") == 0);
    CHECK(std::filesystem::exists(dir + "/scan_coarse.csv"));
    CHECK(std::filesystem::exists(dir + "/scan_coarse.svg"));
    CHECK(std::filesystem::exists(dir + "/scan_dense.csv"));
    CHECK(std::filesystem::exists(dir + "/scan_dense.svg"));
    const std::string svg = slurp(dir + "/scan_dense.svg");
    CHECK(svg.find("circle") != std::string::npos);  // the root marker

    // verify re-checks the record solve wrote earlier.
    REQUIRE(run_cli("verify --solution " + out_root() + "/solve_lower/solution_0.json --json",
                    "verify.json") == 0);
    const nlohmann::json v = nlohmann::json::parse(slurp(out_root() + "/verify.json"));
    CHECK(v["residue_ok"] == true);
    CHECK(v["nonneg_ok"] == true);
    CHECK(v["symmetry"]["critical_point_count"] == 1);
    CHECK(v["energy"]["total"].get<double>() < 0.0);

    // bifurcation.csv from the sweep is byte-stable against a re-run slice:
    // re-running solve with the same config reproduces identical bytes.
    const std::string again = out_root() + "/solve_lower_again";
    REQUIRE(run_cli("solve --lambda 10 --p 3 --q 1.5 --r 0.3333333333333333 "
                    "--du-min 0 --du-max 5 --dv-min 0 --dv-max 1 --threads 1 --out " + again,
                    "solve_again.log") == 0);
    CHECK(slurp(again + "/solutions.csv") == slurp(out_root() + "/solve_lower/solutions.csv"));
}

TEST_CASE("criterion 8: oracle suites") {
    bool rk4_ok = true;
    {
        IvpSettings tight;
        tight.rel_tol = 1e-9;
        tight.abs_tol = 1e-12;
        oracles::Rng rng(20240817);
        for (double lambda : {0.0, 1.0, 10.0}) {
            for (int k = 0; k < 3; ++k) {
                const double du0 = rng.uniform(0.0, 5.0);
                const double dv0 = rng.uniform(0.0, 5.0);
                const ProblemParams prm = params_at(lambda);
                const Trajectory traj = integrate(du0, dv0, prm, tight);
                REQUIRE(traj.ok());
                const auto [u1, v1] = oracles::rk4_final(prm, du0, dv0, 1e-5);
                if (std::fabs(traj.final_state().u - u1) > 1e-6 ||
                    std::fabs(traj.final_state().v - v1) > 1e-6)
                    rk4_ok = false;
            }
        }
        CHECK(rk4_ok);
    }

    bool quad_ok = true;
    {
        // Simpson vs trapezoid on 4096 cells for the lambda=10 upper solution.
        const ProblemParams prm = params_at(10.0);
        IvpSettings fine;
        fine.grid_cells = 4096;
        const Trajectory traj = integrate(43.7385381688, 16.4267758452, prm, fine);
        REQUIRE(traj.ok());
        const std::size_t n = traj.grid.size();
        const double h = 1.0 / static_cast<double>(n - 1);
        std::vector<double> fb(n), fc(n), fx(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = traj.grid[i];
            const double vp = s.v > 0.0 ? s.v : 0.0;
            fb[i] = std::pow(std::fabs(s.u), prm.q + 1.0);
            fc[i] = std::pow(vp, prm.r + 1.0);
            fx[i] = std::pow(vp, prm.p + 1.0);
        }
        for (const auto& f : {fb, fc, fx}) {
            const double simpson = simpson_uniform(f, h);
            const double trap = oracles::trapezoid_uniform(f, h);
            if (std::fabs(simpson - trap) > 1e-6 * std::fabs(simpson)) quad_ok = false;
        }
        CHECK(quad_ok);
    }

    bool gamma_ok = true;
    {
        oracles::Rng rng(11);
        for (int i = 0; i < 50; ++i) {
            const double z = rng.uniform(0.1, 20.0);
            const double lhs = gamma_fn(z + 1.0);
            if (std::fabs(lhs - z * gamma_fn(z)) > 1e-10 * std::fabs(lhs)) gamma_ok = false;
        }
        CHECK(gamma_ok);
    }

    bool argmax_ok = true;
    {
        const double T = threshold_T(3.0, 1.5, 1.0 / 3.0);
        const double gs = static_cast<double>(oracles::golden_section_max(
            [](long double t) { return oracles::h_threshold_ld(t, 3.0L, 1.5L, 1.0L / 3.0L); },
            0.0L, 10.0L * static_cast<long double>(T), 1e-11L));
        argmax_ok = std::fabs(gs - T) < 1e-8;
        CHECK(argmax_ok);
    }

    banner(8, "RK4 (1e-6), Simpson/trapezoid (1e-6 rel), Gamma equation (1e-10), argmax (1e-8)",
           rk4_ok && quad_ok && gamma_ok && argmax_ok);
}
