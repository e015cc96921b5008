// Command-line front end: scan / solve / trace / bounds / verify.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmshoot/analysis.hpp"
#include "pmshoot/config.hpp"
#include "pmshoot/continuation.hpp"
#include "pmshoot/report.hpp"
#include "pmshoot/svg.hpp"

using namespace pmshoot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoSolution = 2;

struct FlagSet {
    CLI::App* cmd = nullptr;
    std::string config_path;

    double lambda = 0, p = 0, q = 0, r = 0;
    double du_min = 0, du_max = 0, dv_min = 0, dv_max = 0;
    double coarse_delta = 0, dense_delta = 0, eps = 0;
    double ivp_rel = 0, ivp_abs = 0;
    unsigned threads = 0;
    int meeting_k = 0;
    double lambda_from = 0, lambda_to = 0, lambda_step = 0, inflation = 0;
    std::string out_dir;
    bool emit_grids = false, emit_profiles = false;

    void add_problem(CLI::App* c) {
        cmd = c;
        c->add_option("--config", config_path, "config file (sectioned key=value)");
        c->add_option("--lambda", lambda, "parameter lambda");
        c->add_option("--p", p, "convex exponent p");
        c->add_option("--q", q, "coupling exponent q");
        c->add_option("--r", r, "concave exponent r");
    }
    void add_scan(CLI::App* c) {
        c->add_option("--du-min", du_min, "window lower bound for du0");
        c->add_option("--du-max", du_max, "window upper bound for du0");
        c->add_option("--dv-min", dv_min, "window lower bound for dv0");
        c->add_option("--dv-max", dv_max, "window upper bound for dv0");
        c->add_option("--coarse-delta", coarse_delta, "coarse grid spacing (0 = auto)");
        c->add_option("--dense-delta", dense_delta, "dense grid spacing (0 = auto)");
        c->add_option("--meeting-k", meeting_k, "meeting neighborhood size");
    }
    void add_solver(CLI::App* c) {
        c->add_option("--eps", eps, "residue acceptance tolerance");
        c->add_option("--ivp-rel-tol", ivp_rel, "integrator relative tolerance");
        c->add_option("--ivp-abs-tol", ivp_abs, "integrator absolute tolerance");
        c->add_option("--threads", threads, "worker threads (0 = hardware)");
    }
    void add_sweep(CLI::App* c) {
        c->add_option("--lambda-from", lambda_from, "sweep start");
        c->add_option("--lambda-to", lambda_to, "sweep end");
        c->add_option("--lambda-step", lambda_step, "sweep step");
        c->add_option("--inflation", inflation, "warm-start window inflation factor");
    }
    void add_output(CLI::App* c) {
        c->add_option("--out", out_dir, "output directory");
        c->add_flag("--emit-grids", emit_grids, "write per-solution color diagrams");
        c->add_flag("--emit-profiles", emit_profiles, "write solution profile plots");
    }

    RunConfig build() const {
        RunConfig cfg = config_path.empty() ? RunConfig{} : parse_config_file(config_path);
        const auto set = [&](const char* name, auto& dst, const auto& src) {
            const CLI::Option* opt = cmd->get_option_no_throw(name);
            if (opt != nullptr && opt->count() > 0) dst = src;
        };
        set("--lambda", cfg.problem.lambda, lambda);
        set("--p", cfg.problem.p, p);
        set("--q", cfg.problem.q, q);
        set("--r", cfg.problem.r, r);
        set("--du-min", cfg.du_min, du_min);
        set("--du-max", cfg.du_max, du_max);
        set("--dv-min", cfg.dv_min, dv_min);
        set("--dv-max", cfg.dv_max, dv_max);
        set("--coarse-delta", cfg.coarse_delta, coarse_delta);
        set("--dense-delta", cfg.dense_delta, dense_delta);
        set("--meeting-k", cfg.meeting_k, meeting_k);
        set("--eps", cfg.eps, eps);
        set("--ivp-rel-tol", cfg.ivp_rel_tol, ivp_rel);
        set("--ivp-abs-tol", cfg.ivp_abs_tol, ivp_abs);
        set("--threads", cfg.threads, threads);
        set("--lambda-from", cfg.lambda_from, lambda_from);
        set("--lambda-to", cfg.lambda_to, lambda_to);
        set("--lambda-step", cfg.lambda_step, lambda_step);
        set("--inflation", cfg.inflation, inflation);
        set("--out", cfg.out_dir, out_dir);
        set("--emit-grids", cfg.emit_grids, emit_grids);
        set("--emit-profiles", cfg.emit_profiles, emit_profiles);
        cfg.validate();
        return cfg;
    }
};

std::string lambda_tag(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lambda);
    std::string s = buf;
    for (auto& c : s)
        if (c == '.') c = 'p';
    return s;
}

void emit_solution_files(RunWriter& writer, const RunConfig& cfg,
                         const std::vector<SolutionRecord>& recs) {
    writer.write("solutions.csv", solutions_csv(recs));
    for (std::size_t i = 0; i < recs.size(); ++i) {
        ProblemParams prm = cfg.problem;
        prm.lambda = recs[i].lambda;
        writer.write("solution_" + std::to_string(i) + ".json",
                     record_json(recs[i], prm).dump(2) + "\n");
        if (cfg.emit_profiles) {
            IvpSettings ivp = cfg.ivp();
            const Trajectory traj = integrate(recs[i].du0, recs[i].dv0, prm, ivp);
            writer.write("profile_" + std::to_string(i) + ".svg", render_profile(traj));
        }
        if (cfg.emit_grids) {
            ScanPolicy pol = cfg.scan_policy();
            pol.always_refine = true;
            const double hx = 0.12 * (1.0 + std::fabs(recs[i].du0));
            const double hy = 0.12 * (1.0 + std::fabs(recs[i].dv0));
            ScanWindow w{recs[i].du0 - hx, recs[i].du0 + hx, recs[i].dv0 - hy,
                         recs[i].dv0 + hy, 0.1};
            auto res = solve_window(w, prm, pol);
            const std::string tag =
                "grid_l" + lambda_tag(recs[i].lambda) + "_" + branch_name(recs[i].branch) +
                "_" + std::to_string(i);
            writer.write(tag + ".csv", grid_csv(res.dense));
            writer.write(tag + ".svg",
                         render_color_diagram(res.dense, {{recs[i].du0, recs[i].dv0}}));
        }
    }
}

int cmd_bounds(const FlagSet& flags, bool as_json) {
    const RunConfig cfg = flags.build();
    const ThresholdReport rep = compute_thresholds(cfg.problem.p, cfg.problem.q, cfg.problem.r);
    if (as_json) {
        std::cout << threshold_json(rep).dump(2) << "\n";
    } else {
        std::printf("T                : %.10g\n", rep.T);
        std::printf("h(T)             : %.10g\n", rep.hT);
        std::printf("lambda0 (basic)  : %.10g\n", rep.lambda0_basic);
        std::printf("gamma            : %.10g\n", rep.gamma);
        std::printf("gamma'           : %.10g\n", rep.gamma_prime);
        std::printf("K_emb            : %.10g\n", rep.k_emb);
        std::printf("lambda0 (K_emb)  : %.10g\n", rep.lambda0_improved);
    }
    return kExitOk;
}

int cmd_scan(const FlagSet& flags) {
    const RunConfig cfg = flags.build();
    ScanPolicy pol = cfg.scan_policy();
    pol.always_refine = true;
    RunWriter writer(cfg.out_dir, serialize_config(cfg));
    auto res = solve_window(cfg.scan_window(), cfg.problem, pol);
    writer.write("scan_coarse.csv", grid_csv(res.coarse));
    writer.write("scan_coarse.svg", render_color_diagram(res.coarse));
    std::vector<std::pair<double, double>> roots;
    for (const auto& r : res.records) roots.emplace_back(r.du0, r.dv0);
    writer.write("scan_dense.csv", grid_csv(res.dense));
    writer.write("scan_dense.svg", render_color_diagram(res.dense, roots));
    emit_solution_files(writer, cfg, res.records);
    writer.finalize();
    std::printf("coarse %zux%zu, dense %zux%zu (%zu evaluated), meetings: %zu\n", res.coarse.nx,
                res.coarse.ny, res.dense.nx, res.dense.ny, res.dense.evaluated_count(),
                res.meetings.size());
    for (const auto& r : res.records)
        std::printf("root: du0=%.10g dv0=%.10g  residue=(%.3g, %.3g)  sup_v=%.6g\n", r.du0, r.dv0,
                    r.residue_u1, r.residue_v1, r.sup_v);
    if (res.records.empty()) std::printf("no roots located in the window\n");
    return kExitOk;
}

int cmd_solve(const FlagSet& flags) {
    const RunConfig cfg = flags.build();
    const ScanPolicy pol = cfg.scan_policy();
    RunWriter writer(cfg.out_dir, serialize_config(cfg));
    auto res = solve_window(cfg.scan_window(), cfg.problem, pol);
    emit_solution_files(writer, cfg, res.records);
    writer.finalize();
    for (const auto& r : res.records)
        std::printf("root: du0=%.10g dv0=%.10g  residue=(%.3g, %.3g)  sup_v=%.6g  J=%.6g\n",
                    r.du0, r.dv0, r.residue_u1, r.residue_v1, r.sup_v, r.energy);
    if (res.records.empty()) {
        std::printf("no solution found\n");
        return kExitNoSolution;
    }
    return kExitOk;
}

int cmd_trace(const FlagSet& flags) {
    const RunConfig cfg = flags.build();
    const ScanPolicy pol = cfg.scan_policy();
    SweepConfig sweep = cfg.sweep_config();
    RunWriter writer(cfg.out_dir, serialize_config(cfg));

    std::vector<SolutionRecord> all;
    std::ostringstream csv;
    csv << kSolutionCsvHeader << "\n";
    const TraceCallback on_lambda = [&](const LambdaOutcome& o,
                                        const std::vector<SolutionRecord>& recs) {
        for (const auto& r : recs) {
            all.push_back(r);
            csv << solution_csv_row(r) << "\n";
        }
        writer.write_incremental("bifurcation.csv", csv.str());
        writer.add_outcome(o);
        std::printf("lambda=%-8.4g%s lower=%s upper=%s\n", o.lambda,
                    o.bisection_probe ? " (bisection)" : "", o.lower_found ? "yes" : "no",
                    o.upper_found ? "yes" : "no");
        std::fflush(stdout);
    };

    const TraceResult res = trace_branches(sweep, cfg.problem, pol, on_lambda);

    const auto rows = emit_bifurcation_data(res.lower, res.upper);
    writer.write("bifurcation.svg", render_bifurcation(rows));
    if (cfg.emit_profiles || cfg.emit_grids) emit_solution_files(writer, cfg, all);
    if (res.lambda_bif) {
        writer.set_lambda_bif(*res.lambda_bif);
        std::printf("lambda_bif estimate: %.6g\n", *res.lambda_bif);
    } else {
        std::printf("lambda_bif estimate: none (no bracket inside the range)\n");
    }
    writer.finalize();
    std::printf("lower branch: %zu records, upper branch: %zu records\n",
                res.lower.records.size(), res.upper.records.size());
    return kExitOk;
}

int cmd_verify(const std::string& path, bool as_json) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open solution file " + path);
    nlohmann::json j;
    in >> j;
    ProblemParams prm;
    prm.lambda = j.at("lambda").get<double>();
    prm.p = j.at("p").get<double>();
    prm.q = j.at("q").get<double>();
    prm.r = j.at("r").get<double>();
    const double du0 = j.at("du0").get<double>();
    const double dv0 = j.at("dv0").get<double>();

    IvpSettings ivp;
    const Trajectory traj = integrate(du0, dv0, prm, ivp);
    if (!traj.ok()) throw std::runtime_error("verify: trajectory did not reach x=1");
    const SymmetryReport sym = verify_symmetry(traj);
    const ResidualReport resid = verify_residual(traj, prm);
    const EnergyBreakdown e = energy(traj, prm);
    const double sup_v = traj.sup_abs_v();
    const double res_u = traj.final_state().u;
    const double res_v = traj.final_state().v;
    const bool residue_ok = std::max(std::fabs(res_u), std::fabs(res_v)) < 1e-5;
    const bool nonneg_ok = traj.min_u() > -1e-5 && traj.min_v() > -1e-5;

    if (as_json) {
        nlohmann::json out{
            {"residue_u1", res_u},
            {"residue_v1", res_v},
            {"residue_ok", residue_ok},
            {"nonneg_ok", nonneg_ok},
            {"min_u", traj.min_u()},
            {"min_v", traj.min_v()},
            {"symmetry",
             {{"v_sym_defect", sym.v_sym_defect},
              {"u_sym_defect", sym.u_sym_defect},
              {"v_max_location", sym.v_max_location},
              {"u_max_location", sym.u_max_location},
              {"critical_point_count", sym.critical_point_count},
              {"u_critical_point_count", sym.u_critical_point_count}}},
            {"residual", {{"max_defect", resid.max_defect},
                          {"interior_max_defect", resid.interior_max_defect},
                          {"interior_margin", resid.interior_margin}}},
            {"energy", {{"bending", e.bending},
                        {"concave", e.concave},
                        {"convex", e.convex},
                        {"total", e.total}}}};
        std::cout << out.dump(2) << "\n";
    } else {
        std::printf("residues           : u(1)=%.6g v(1)=%.6g (%s)\n", res_u, res_v,
                    residue_ok ? "ok" : "FAIL");
        std::printf("nonnegativity      : min u=%.6g min v=%.6g (%s)\n", traj.min_u(),
                    traj.min_v(), nonneg_ok ? "ok" : "FAIL");
        std::printf("symmetry defect    : v=%.6g (%.6g relative) u=%.6g\n", sym.v_sym_defect,
                    sup_v > 0 ? sym.v_sym_defect / sup_v : 0.0, sym.u_sym_defect);
        std::printf("max locations      : v at x=%.6g, u at x=%.6g\n", sym.v_max_location,
                    sym.u_max_location);
        std::printf("critical points    : v'=%d u'=%d\n", sym.critical_point_count,
                    sym.u_critical_point_count);
        std::printf("residual defect    : %.6g (interior %.6g)\n", resid.max_defect,
                    resid.interior_max_defect);
        std::printf("energy             : J=%.8g (bending %.6g concave %.6g convex %.6g)\n",
                    e.total, e.bending, e.concave, e.convex);
    }
    return (residue_ok && nonneg_ok) ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shooting and Poincare-Miranda root localization for the concave-convex "
                 "Hamiltonian ODE system"};
    app.require_subcommand(1);

    FlagSet scan_flags, solve_flags, trace_flags, bounds_flags;
    bool bounds_json = false, verify_json = false;
    std::string verify_path;

    CLI::App* scan = app.add_subcommand("scan", "color-classify one window at a fixed lambda");
    scan_flags.add_problem(scan);
    scan_flags.add_scan(scan);
    scan_flags.add_solver(scan);
    scan_flags.add_output(scan);

    CLI::App* solve = app.add_subcommand("solve", "locate and polish roots in one window");
    solve_flags.add_problem(solve);
    solve_flags.add_scan(solve);
    solve_flags.add_solver(solve);
    solve_flags.add_output(solve);

    CLI::App* trace = app.add_subcommand("trace", "sweep lambda and trace both branches");
    trace_flags.add_problem(trace);
    trace_flags.add_scan(trace);
    trace_flags.add_solver(trace);
    trace_flags.add_sweep(trace);
    trace_flags.add_output(trace);

    CLI::App* bounds = app.add_subcommand("bounds", "analytic thresholds for (p, q, r)");
    bounds_flags.add_problem(bounds);
    bounds->add_flag("--json", bounds_json, "print as JSON");

    CLI::App* verify = app.add_subcommand("verify", "re-check a stored solution record");
    verify->add_option("--solution", verify_path, "solution JSON file")->required();
    verify->add_flag("--json", verify_json, "print as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (scan->parsed()) return cmd_scan(scan_flags);
        if (solve->parsed()) return cmd_solve(solve_flags);
        if (trace->parsed()) return cmd_trace(trace_flags);
        if (bounds->parsed()) return cmd_bounds(bounds_flags, bounds_json);
        if (verify->parsed()) return cmd_verify(verify_path, verify_json);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
