#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "pmshoot/shooting.hpp"

namespace pmshoot {

inline PolishOptions pipeline_polish_defaults() {
    PolishOptions p;
    p.nontrivial_floor = 1e-3;
    return p;
}

/// Grid resolution and refinement policy for one window solve. Zero deltas
/// resolve automatically from the window extent (coarse = extent/40, dense =
/// coarse/20, matching the coarse:dense ratio of 0.1 : 0.005).
struct ScanPolicy {
    double coarse_delta = 0.0;
    double dense_delta = 0.0;
    int meeting_k = 3;
    int dilate = 1;
    bool always_refine = false;        // emit the dense grid even when the coarse
                                       // scan already pins the meeting cells
    bool best_seed_fallback = true;    // Broyden from the best-scoring vertex when
                                       // no four-color meeting is found
    bool discovery_fallback = true;    // sheet-bisection hunt as the last resort
    PolishOptions polish = pipeline_polish_defaults();
    IvpSettings ivp{};
    unsigned threads = 0;

    double resolve_coarse(const ScanWindow& w) const {
        if (coarse_delta > 0.0) return coarse_delta;
        const double ext = std::max(w.du_max - w.du_min, w.dv_max - w.dv_min);
        return std::clamp(ext / 40.0, 1e-4, 2.0);
    }
    double resolve_dense(double coarse) const {
        return dense_delta > 0.0 ? dense_delta : coarse / 20.0;
    }
};

namespace detail {

inline void dedupe_records(std::vector<SolutionRecord>& recs) {
    std::sort(recs.begin(), recs.end(), [](const SolutionRecord& a, const SolutionRecord& b) {
        return a.du0 != b.du0 ? a.du0 < b.du0 : a.dv0 < b.dv0;
    });
    std::vector<SolutionRecord> out;
    for (const auto& r : recs) {
        bool dup = false;
        for (const auto& o : out) {
            const double tol = 1e-4 * (1.0 + std::max(std::fabs(o.du0), std::fabs(o.dv0)));
            if (std::fabs(r.du0 - o.du0) < tol && std::fabs(r.dv0 - o.dv0) < tol) {
                dup = true;
                break;
            }
        }
        if (!dup) out.push_back(r);
    }
    recs = std::move(out);
}

// Seed vertex for the quasi-Newton fallback: smallest residue relative to the
// slope magnitude, which keeps seeds away from the trivial zero at the origin
// where the plain residue is also small.
inline std::optional<std::pair<double, double>> best_seed_vertex(const ColorGrid& g,
                                                                 double floor) {
    double best = std::numeric_limits<double>::infinity();
    std::optional<std::pair<double, double>> at;
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            if (!g.is_evaluated(i, j)) continue;
            const Residue& r = g.residues[g.idx(i, j)];
            if (!r.ok()) continue;
            const double x = g.window.du_at(i);
            const double y = g.window.dv_at(j);
            const double mag = std::fabs(x) + std::fabs(y);
            if (mag <= std::max(floor, 1e-9)) continue;
            const double score = r.max_abs() / mag;
            if (score < best) {
                best = score;
                at = std::make_pair(x, y);
            }
        }
    return at;
}

}  // namespace detail

/// Scale-free root discovery by nested bisection: for a ladder of du0 values
/// (linear plus geometric, so the concave branch's tiny slopes are reachable),
/// bisect each sign change of v(1) along dv0 onto the v(1) = 0 sheet, then
/// bisect sign changes of u(1) along the sheet in du0. Every hit is polished
/// to the residue tolerance.
struct DiscoveryOptions {
    int du_linear = 48;
    int du_geometric = 24;
    int dv_samples = 32;
    int inner_bisect = 60;
    int outer_bisect = 36;
    int max_sheets = 4;
};

namespace detail {

struct SheetPoint {
    double dv0 = 0.0;
    double u1 = 0.0;
};

inline std::vector<SheetPoint> sheet_points(const ShootFn& fn, double du0, double dv_lo,
                                            double dv_hi, const DiscoveryOptions& opt) {
    std::vector<SheetPoint> pts;
    double prev_dv = dv_lo;
    Residue prev = fn(du0, dv_lo);
    for (int i = 1; i <= opt.dv_samples; ++i) {
        const double dv = dv_lo + (dv_hi - dv_lo) * i / opt.dv_samples;
        const Residue cur = fn(du0, dv);
        if ((prev.v1 < 0.0) != (cur.v1 < 0.0)) {
            double a = prev_dv, b = dv;
            bool a_neg = prev.v1 < 0.0;
            Residue rm = cur;
            double m = b;
            for (int it = 0; it < opt.inner_bisect; ++it) {
                m = 0.5 * (a + b);
                rm = fn(du0, m);
                if ((rm.v1 < 0.0) == a_neg)
                    a = m;
                else
                    b = m;
            }
            pts.push_back(SheetPoint{m, rm.u1});
            if (static_cast<int>(pts.size()) >= opt.max_sheets) break;
        }
        prev = cur;
        prev_dv = dv;
    }
    return pts;
}

}  // namespace detail

inline std::vector<SolutionRecord> discover_roots(const ScanWindow& rect,
                                                  const ProblemParams& prm,
                                                  const ScanPolicy& policy = {},
                                                  const DiscoveryOptions& dopt = {}) {
    prm.validate();
    const ShootFn fn = make_shooter(prm, policy.ivp);
    const double lo = rect.du_min, hi = rect.du_max;

    std::set<double> dus;
    for (int k = 0; k < dopt.du_linear; ++k)
        dus.insert(lo + (hi - lo) * (k + 1.0) / dopt.du_linear);
    // Geometric ladder toward small du0 when the window reaches there.
    if (lo < 1e-3 * hi && hi > 0.0) {
        const double tiny = std::max(lo, 1e-7 * hi);
        if (tiny < hi)
            for (int k = 0; k <= dopt.du_geometric; ++k)
                dus.insert(tiny * std::pow(hi / tiny,
                                           static_cast<double>(k) / dopt.du_geometric));
    }

    struct Column {
        double du0;
        std::vector<detail::SheetPoint> sheets;
    };
    std::vector<Column> cols;
    cols.reserve(dus.size());
    for (double du0 : dus)
        cols.push_back(Column{du0, detail::sheet_points(fn, du0, rect.dv_min, rect.dv_max, dopt)});

    std::vector<SolutionRecord> records;
    for (std::size_t c = 0; c + 1 < cols.size(); ++c) {
        const Column& A = cols[c];
        const Column& B = cols[c + 1];
        for (const auto& sa : A.sheets) {
            // Pair with the dv0-closest sheet of the next column.
            const detail::SheetPoint* sb = nullptr;
            double bestd = std::numeric_limits<double>::infinity();
            for (const auto& s : B.sheets) {
                const double d = std::fabs(s.dv0 - sa.dv0);
                if (d < bestd) {
                    bestd = d;
                    sb = &s;
                }
            }
            if (!sb) continue;
            if ((sa.u1 < 0.0) == (sb->u1 < 0.0)) continue;

            double a = A.du0, b = B.du0;
            bool a_neg = sa.u1 < 0.0;
            double root_du = 0.5 * (a + b), root_dv = 0.5 * (sa.dv0 + sb->dv0);
            for (int it = 0; it < dopt.outer_bisect; ++it) {
                const double m = 0.5 * (a + b);
                const auto pts = detail::sheet_points(fn, m, rect.dv_min, rect.dv_max, dopt);
                if (pts.empty()) break;
                const detail::SheetPoint* sm = nullptr;
                double bd = std::numeric_limits<double>::infinity();
                for (const auto& s : pts) {
                    const double d = std::fabs(s.dv0 - root_dv);
                    if (d < bd) {
                        bd = d;
                        sm = &s;
                    }
                }
                root_du = m;
                root_dv = sm->dv0;
                if ((sm->u1 < 0.0) == a_neg)
                    a = m;
                else
                    b = m;
            }
            const double half = std::max(1e-6, 1e-3 * std::fabs(root_du));
            const MeetingCell cell{root_du - half, root_du + half,
                                   std::max(rect.dv_min, root_dv - half), root_dv + half};
            if (auto rec = polish_root(cell, prm, policy.polish, policy.ivp))
                records.push_back(*rec);
        }
    }
    detail::dedupe_records(records);
    return records;
}

/// Everything produced while hunting roots inside one window.
struct WindowSolveResult {
    ColorGrid coarse;
    ColorGrid dense;  // may be empty when the coarse pass already succeeded
    std::vector<MeetingCell> meetings;
    std::vector<SolutionRecord> records;
    bool dense_ran = false;
};

/// Scan -> refine -> locate meetings -> polish over one window, escalating the
/// meeting neighborhood before falling back to a seeded quasi-Newton hunt and
/// finally to sheet bisection. The dense pass runs only when the coarse grid
/// yields no converged root (or when the policy demands it for rendering).
inline WindowSolveResult solve_window(ScanWindow window, const ProblemParams& prm,
                                      const ScanPolicy& policy = {}) {
    WindowSolveResult out;
    const double coarse_delta = policy.resolve_coarse(window);
    window.delta = coarse_delta;
    window.validate();
    const ShootFn fn = make_shooter(prm, policy.ivp);

    out.coarse = scan_grid_with(window, fn, policy.threads);

    const auto polish_cells = [&](const std::vector<MeetingCell>& cells) {
        std::vector<SolutionRecord> recs;
        for (const auto& cell : cells)
            if (auto rec = polish_root(cell, prm, policy.polish, policy.ivp))
                recs.push_back(*rec);
        detail::dedupe_records(recs);
        return recs;
    };

    // k-escalation: thin sign sectors near ill-conditioned roots need a wider
    // neighborhood than the default before all four colors show up.
    const auto meetings_escalated = [&](const ColorGrid& grid) {
        std::vector<MeetingCell> cells;
        const std::size_t dim = std::min(grid.nx, grid.ny);
        for (int k = policy.meeting_k; static_cast<std::size_t>(k) <= dim; k = 2 * k + 1) {
            cells = find_meeting_points(grid, k);
            if (!cells.empty()) break;
        }
        return cells;
    };

    const std::vector<MeetingCell> coarse_meetings = meetings_escalated(out.coarse);
    if (!coarse_meetings.empty() && !policy.always_refine) {
        out.meetings = coarse_meetings;
        out.records = polish_cells(coarse_meetings);
        if (!out.records.empty()) return out;
    }

    const double dense_delta = policy.resolve_dense(coarse_delta);
    out.dense = refine_to_dense_with(out.coarse, dense_delta, fn, policy.threads, policy.dilate);
    out.dense_ran = true;
    out.meetings = meetings_escalated(out.dense);
    out.records = polish_cells(out.meetings);
    if (!out.records.empty()) return out;

    if (policy.best_seed_fallback) {
        auto seed = detail::best_seed_vertex(out.dense, policy.polish.nontrivial_floor);
        if (!seed) seed = detail::best_seed_vertex(out.coarse, policy.polish.nontrivial_floor);
        if (seed) {
            const double hx = 2.0 * dense_delta;
            const MeetingCell around{seed->first - hx, seed->first + hx, seed->second - hx,
                                     seed->second + hx};
            if (auto rec = polish_root(around, prm, policy.polish, policy.ivp)) {
                out.records.push_back(*rec);
                return out;
            }
        }
    }

    if (policy.discovery_fallback) {
        out.records = discover_roots(window, prm, policy);
        detail::dedupe_records(out.records);
    }
    return out;
}

/// Sweep setup: lambda range, the two starting windows, and the recovery
/// window consulted before declaring a branch dead.
struct SweepConfig {
    double lambda_from = 1.0;
    double lambda_to = 50.0;
    double lambda_step = 1.0;
    ScanWindow lower_window{0.0, 30.0, 0.0, 15.0, 1.0};
    ScanWindow upper_window{10.0, 80.0, 1.0, 40.0, 1.0};
    double inflation = 1.5;
    double min_window_half = 0.25;
    double max_window_half = 10.0;
    ScanWindow fallback_window{0.0, 100.0, 0.0, 100.0, 1.0};
    bool use_fallback = true;
    int bisection_budget = 12;

    void validate() const {
        if (!(lambda_step > 0.0))
            throw std::invalid_argument("SweepConfig: lambda_step must be > 0");
        if (!(lambda_from <= lambda_to))
            throw std::invalid_argument("SweepConfig: lambda_from must be <= lambda_to");
        lower_window.validate();
        upper_window.validate();
        if (use_fallback) fallback_window.validate();
        if (!(inflation >= 1.0)) throw std::invalid_argument("SweepConfig: inflation must be >= 1");
    }
};

struct Branch {
    BranchLabel label = BranchLabel::unlabeled;
    std::vector<SolutionRecord> records;  // ordered by lambda, strictly increasing

    bool empty() const { return records.empty(); }
    const SolutionRecord& back() const { return records.back(); }
};

struct LambdaOutcome {
    double lambda = 0.0;
    bool lower_found = false;
    bool upper_found = false;
    bool bisection_probe = false;
};

struct TraceResult {
    Branch lower{BranchLabel::lower, {}};
    Branch upper{BranchLabel::upper, {}};
    std::optional<double> lambda_bif;
    std::vector<LambdaOutcome> outcomes;
    std::vector<SolutionRecord> extras;  // beyond-two roots flagged for review
};

/// Assignment of records at one lambda to branches: smaller sup_v is the lower
/// branch; a single record follows the nearest previous root when one is
/// known; more than two records keep the two sup_v extremes and flag the rest.
struct LabelResult {
    std::optional<SolutionRecord> lower;
    std::optional<SolutionRecord> upper;
    std::optional<SolutionRecord> unlabeled;
    std::vector<SolutionRecord> extras;
};

inline LabelResult label_branches(
    std::vector<SolutionRecord> recs,
    const std::optional<std::pair<double, double>>& prev_lower = std::nullopt,
    const std::optional<std::pair<double, double>>& prev_upper = std::nullopt) {
    LabelResult out;
    if (recs.empty()) return out;
    const auto sup_v_order = [](const SolutionRecord& a, const SolutionRecord& b) {
        if (std::fabs(a.sup_v - b.sup_v) > 1e-9) return a.sup_v < b.sup_v;
        return a.du0 < b.du0;  // deterministic tie-break
    };
    std::sort(recs.begin(), recs.end(), sup_v_order);
    if (recs.size() == 1) {
        SolutionRecord rec = recs.front();
        const auto dist = [&](const std::optional<std::pair<double, double>>& p) {
            if (!p) return std::numeric_limits<double>::infinity();
            return std::hypot(rec.du0 - p->first, rec.dv0 - p->second);
        };
        if (!prev_lower && !prev_upper) {
            rec.branch = BranchLabel::unlabeled;
            out.unlabeled = rec;
        } else if (dist(prev_lower) <= dist(prev_upper)) {
            rec.branch = BranchLabel::lower;
            out.lower = rec;
        } else {
            rec.branch = BranchLabel::upper;
            out.upper = rec;
        }
        return out;
    }
    SolutionRecord lo = recs.front();
    SolutionRecord hi = recs.back();
    lo.branch = BranchLabel::lower;
    hi.branch = BranchLabel::upper;
    out.lower = lo;
    out.upper = hi;
    for (std::size_t i = 1; i + 1 < recs.size(); ++i) out.extras.push_back(recs[i]);
    return out;
}

namespace detail {

struct BranchTracker {
    bool alive = false;
    double last_lambda = 0.0;
    std::pair<double, double> root{0.0, 0.0};
    std::optional<std::pair<double, double>> disp;  // root displacement per step
    std::optional<double> death_estimate;
};

inline std::optional<SolutionRecord> nearest_record(const std::vector<SolutionRecord>& recs,
                                                    const std::pair<double, double>& to) {
    std::optional<SolutionRecord> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& r : recs) {
        const double d = std::hypot(r.du0 - to.first, r.dv0 - to.second);
        if (d < best_d) {
            best_d = d;
            best = r;
        }
    }
    return best;
}

}  // namespace detail

using TraceCallback =
    std::function<void(const LambdaOutcome&, const std::vector<SolutionRecord>&)>;

/// Sweeps lambda over the configured range. Roots are discovered at the first
/// lambda that yields any (sheet bisection over the starting windows), then
/// each branch is continued by polishing a warm cell centered on its previous
/// root; a failing step retries with the scan pipeline on the inflated window
/// and the generous fallback window before the branch is declared dead, at
/// which point the fold is bracketed and bisected in lambda.
inline TraceResult trace_branches(const SweepConfig& cfg, ProblemParams base,
                                  const ScanPolicy& policy = {},
                                  const TraceCallback& on_lambda = {}) {
    cfg.validate();
    base.validate();
    TraceResult result;
    detail::BranchTracker lower_tr, upper_tr;

    const auto at_lambda = [&](double lambda) {
        ProblemParams prm = base;
        prm.lambda = lambda;
        return prm;
    };

    // Warm continuation step: polish a cell centered on the predicted root.
    const auto warm_polish = [&](const detail::BranchTracker& tr,
                                 double lambda) -> std::optional<SolutionRecord> {
        const double px = tr.root.first + (tr.disp ? tr.disp->first : 0.0);
        const double py = tr.root.second + (tr.disp ? tr.disp->second : 0.0);
        const auto half = [&](double base_c, double d) {
            return std::clamp(std::max(2.0 * std::fabs(d), 1e-3 * (1.0 + std::fabs(base_c))),
                              1e-6, cfg.max_window_half);
        };
        const double hx = half(px, tr.disp ? tr.disp->first : 0.0);
        const double hy = half(py, tr.disp ? tr.disp->second : 0.0);
        const MeetingCell cell{px - hx, px + hx, py - hy, py + hy};
        auto rec = polish_root(cell, at_lambda(lambda), policy.polish, policy.ivp);
        if (!rec) return std::nullopt;
        // Reject convergence onto a far-away root (e.g. the other branch).
        const double dist = std::hypot(rec->du0 - tr.root.first, rec->dv0 - tr.root.second);
        const double step_scale =
            tr.disp ? std::hypot(tr.disp->first, tr.disp->second) : 0.0;
        const double guard =
            std::max({10.0 * step_scale, 0.35 * (1.0 + std::hypot(tr.root.first, tr.root.second)),
                      1e-2});
        if (dist > guard) return std::nullopt;
        return rec;
    };

    // Hunt for a branch continuation. Bisection probes stay local (warm polish
    // plus sheet bisection around the last root); sweep steps escalate through
    // the scan pipeline on the inflated window and the generous fallback
    // window before giving up.
    const auto continue_branch = [&](const detail::BranchTracker& tr, double lambda,
                                     bool thorough) -> std::optional<SolutionRecord> {
        if (auto rec = warm_polish(tr, lambda)) return rec;
        const auto half = [&](double d) {
            return std::clamp(std::max(cfg.inflation * std::fabs(d), cfg.min_window_half),
                              cfg.min_window_half, cfg.max_window_half);
        };
        const double hx = half(tr.disp ? tr.disp->first : 0.0);
        const double hy = half(tr.disp ? tr.disp->second : 0.0);
        const ScanWindow w{tr.root.first - hx, tr.root.first + hx, tr.root.second - hy,
                           tr.root.second + hy, 0.1};
        if (!thorough) {
            auto local = discover_roots(w, at_lambda(lambda), policy);
            return detail::nearest_record(local, tr.root);
        }
        auto res = solve_window(w, at_lambda(lambda), policy);
        if (auto rec = detail::nearest_record(res.records, tr.root)) return rec;
        if (!cfg.use_fallback) return std::nullopt;
        auto far = discover_roots(cfg.fallback_window, at_lambda(lambda), policy);
        return detail::nearest_record(far, tr.root);
    };

    const auto advance = [&](detail::BranchTracker& tr, const SolutionRecord& rec) {
        if (tr.alive)
            tr.disp = std::make_pair(rec.du0 - tr.root.first, rec.dv0 - tr.root.second);
        tr.alive = true;
        tr.root = {rec.du0, rec.dv0};
        tr.last_lambda = rec.lambda;
    };

    const auto bisect_death = [&](detail::BranchTracker& tr, Branch& br, double lo, double hi) {
        for (int i = 0; i < cfg.bisection_budget; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (auto rec = continue_branch(tr, mid, false)) {
                lo = mid;
                SolutionRecord r = *rec;
                r.branch = br.label;
                br.records.push_back(r);
                advance(tr, r);
                result.outcomes.push_back(
                    LambdaOutcome{mid, br.label == BranchLabel::lower,
                                  br.label == BranchLabel::upper, true});
            } else {
                hi = mid;
                result.outcomes.push_back(LambdaOutcome{mid, false, false, true});
            }
        }
        tr.death_estimate = 0.5 * (lo + hi);
        tr.alive = false;
    };

    // Lambda grid.
    std::vector<double> lambdas;
    for (int k = 0;; ++k) {
        const double l = cfg.lambda_from + k * cfg.lambda_step;
        if (l > cfg.lambda_to + 1e-9 * std::max(1.0, cfg.lambda_step)) break;
        lambdas.push_back(l);
    }
    if (lambdas.empty()) return result;

    // Cold start: discovery at the first lambda of the grid that yields roots.
    std::size_t start_idx = lambdas.size();
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        std::vector<SolutionRecord> recs;
        for (const auto* w : {&cfg.lower_window, &cfg.upper_window}) {
            auto found = discover_roots(*w, at_lambda(lambdas[i]), policy);
            recs.insert(recs.end(), found.begin(), found.end());
        }
        detail::dedupe_records(recs);
        LambdaOutcome outcome;
        outcome.lambda = lambdas[i];
        std::vector<SolutionRecord> here;
        if (!recs.empty()) {
            LabelResult labeled = label_branches(recs);
            for (auto& e : labeled.extras) result.extras.push_back(e);
            if (labeled.lower && labeled.upper) {
                result.lower.records.push_back(*labeled.lower);
                result.upper.records.push_back(*labeled.upper);
                advance(lower_tr, *labeled.lower);
                advance(upper_tr, *labeled.upper);
                outcome.lower_found = outcome.upper_found = true;
                here = {*labeled.lower, *labeled.upper};
            } else if (labeled.unlabeled) {
                // One root only: seed both trackers and let the next step sort
                // the identity out.
                SolutionRecord rec = *labeled.unlabeled;
                result.extras.push_back(rec);
                advance(lower_tr, rec);
                advance(upper_tr, rec);
                here = {rec};
            }
        }
        result.outcomes.push_back(outcome);
        if (on_lambda) on_lambda(outcome, here);
        if (lower_tr.alive || upper_tr.alive) {
            start_idx = i;
            break;
        }
    }
    if (start_idx == lambdas.size()) return result;  // nothing anywhere in range

    // Continuation over the remaining lambda grid.
    for (std::size_t i = start_idx + 1; i < lambdas.size(); ++i) {
        const double lambda = lambdas[i];
        LambdaOutcome outcome;
        outcome.lambda = lambda;
        std::vector<SolutionRecord> here;

        std::optional<SolutionRecord> rec_lower, rec_upper;
        if (lower_tr.alive) rec_lower = continue_branch(lower_tr, lambda, true);
        if (upper_tr.alive) {
            rec_upper = continue_branch(upper_tr, lambda, true);
            if (rec_lower && rec_upper) {
                const double tol = 1e-4 * (1.0 + std::max(std::fabs(rec_upper->du0),
                                                          std::fabs(rec_upper->dv0)));
                if (std::fabs(rec_lower->du0 - rec_upper->du0) < tol &&
                    std::fabs(rec_lower->dv0 - rec_upper->dv0) < tol) {
                    // Both trackers landed on the same root near the fold;
                    // keep it with the closer branch.
                    const double dl = std::hypot(rec_lower->du0 - lower_tr.root.first,
                                                 rec_lower->dv0 - lower_tr.root.second);
                    const double du = std::hypot(rec_upper->du0 - upper_tr.root.first,
                                                 rec_upper->dv0 - upper_tr.root.second);
                    if (dl <= du)
                        rec_upper.reset();
                    else
                        rec_lower.reset();
                }
            }
        }

        // Enforce the sup_v ordering between the two records.
        if (rec_lower && rec_upper && rec_lower->sup_v > rec_upper->sup_v)
            std::swap(rec_lower, rec_upper);

        if (rec_lower && lower_tr.alive) {
            rec_lower->branch = BranchLabel::lower;
            result.lower.records.push_back(*rec_lower);
            advance(lower_tr, *rec_lower);
            outcome.lower_found = true;
            here.push_back(*rec_lower);
        }
        if (rec_upper && upper_tr.alive) {
            rec_upper->branch = BranchLabel::upper;
            result.upper.records.push_back(*rec_upper);
            advance(upper_tr, *rec_upper);
            outcome.upper_found = true;
            here.push_back(*rec_upper);
        }
        if (!outcome.lower_found && lower_tr.alive)
            bisect_death(lower_tr, result.lower, lower_tr.last_lambda, lambda);
        if (!outcome.upper_found && upper_tr.alive)
            bisect_death(upper_tr, result.upper, upper_tr.last_lambda, lambda);

        result.outcomes.push_back(outcome);
        if (on_lambda) on_lambda(outcome, here);
        if (!lower_tr.alive && !upper_tr.alive) break;
    }

    if (lower_tr.death_estimate && upper_tr.death_estimate)
        result.lambda_bif = std::max(*lower_tr.death_estimate, *upper_tr.death_estimate);
    else if (lower_tr.death_estimate)
        result.lambda_bif = lower_tr.death_estimate;
    else if (upper_tr.death_estimate)
        result.lambda_bif = upper_tr.death_estimate;
    return result;
}

/// Bifurcation-diagram table: one row per (lambda, branch) with the solution's
/// sup-norm of v.
struct BifRow {
    double lambda = 0.0;
    BranchLabel branch = BranchLabel::unlabeled;
    double sup_v = 0.0;
};

inline std::vector<BifRow> emit_bifurcation_data(const Branch& lower, const Branch& upper) {
    std::vector<BifRow> rows;
    for (const auto& r : lower.records)
        rows.push_back(BifRow{r.lambda, BranchLabel::lower, r.sup_v});
    for (const auto& r : upper.records)
        rows.push_back(BifRow{r.lambda, BranchLabel::upper, r.sup_v});
    std::sort(rows.begin(), rows.end(), [](const BifRow& a, const BifRow& b) {
        if (a.lambda != b.lambda) return a.lambda < b.lambda;
        return static_cast<int>(a.branch) < static_cast<int>(b.branch);
    });
    return rows;
}

}  // namespace pmshoot
