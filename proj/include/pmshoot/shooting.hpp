#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pmshoot/analysis.hpp"
#include "pmshoot/ode.hpp"
#include "pmshoot/parallel.hpp"

namespace pmshoot {

/// Residues below this magnitude classify as positive, so the color map is
/// total and deterministic.
inline constexpr double kSignZeroGuard = 1e-14;

/// Terminal values of the shooting map Phi(du0, dv0) = (u(1), v(1)). On
/// blow-up the components hold the last accepted state's u and v, whose signs
/// classify the shot.
struct Residue {
    double u1 = 0.0;
    double v1 = 0.0;
    IvpStatus status = IvpStatus::ok;

    bool ok() const { return status == IvpStatus::ok; }
    double max_abs() const { return std::max(std::fabs(u1), std::fabs(v1)); }
};

enum class Quadrant : std::uint8_t { green, yellow, blue, red };

inline const char* quadrant_name(Quadrant c) {
    switch (c) {
        case Quadrant::green: return "green";
        case Quadrant::yellow: return "yellow";
        case Quadrant::blue: return "blue";
        case Quadrant::red: return "red";
    }
    return "?";
}

inline bool residue_positive(double t) { return t > 0.0 || std::fabs(t) < kSignZeroGuard; }

/// Color legend: green u1>0 v1>0, yellow u1>0 v1<0, blue u1<0 v1>0,
/// red u1<0 v1<0 (zero counts as positive).
inline Quadrant classify(const Residue& res) {
    if (!(std::isfinite(res.u1) && std::isfinite(res.v1)))
        throw std::domain_error("classify: non-finite residue");
    const bool up = residue_positive(res.u1);
    const bool vp = residue_positive(res.v1);
    return up ? (vp ? Quadrant::green : Quadrant::yellow)
              : (vp ? Quadrant::blue : Quadrant::red);
}

/// Rectangle of the du0-dv0 plane with uniform vertex spacing delta.
struct ScanWindow {
    double du_min = 0.0;
    double du_max = 1.0;
    double dv_min = 0.0;
    double dv_max = 1.0;
    double delta = 0.1;

    void validate() const {
        if (!(du_min < du_max) || !(dv_min < dv_max))
            throw std::invalid_argument("ScanWindow: min must be < max on both axes");
        if (!(delta > 0.0)) throw std::invalid_argument("ScanWindow: delta must be > 0");
    }

    static std::size_t axis_count(double lo, double hi, double d) {
        return static_cast<std::size_t>(std::floor((hi - lo) / d + 1e-9)) + 1;
    }
    std::size_t nx() const { return axis_count(du_min, du_max, delta); }
    std::size_t ny() const { return axis_count(dv_min, dv_max, delta); }
    double du_at(std::size_t i) const { return du_min + static_cast<double>(i) * delta; }
    double dv_at(std::size_t j) const { return dv_min + static_cast<double>(j) * delta; }

    ScanWindow with_delta(double d) const {
        ScanWindow w = *this;
        w.delta = d;
        return w;
    }
};

/// Vertex classification over a window; row-major with vertex (i, j) at
/// (du_min + i delta, dv_min + j delta). A refinement pass leaves vertices far
/// from color boundaries unevaluated (mask 0).
struct ColorGrid {
    ScanWindow window;
    std::size_t nx = 0;
    std::size_t ny = 0;
    std::vector<Residue> residues;
    std::vector<Quadrant> labels;
    std::vector<std::uint8_t> evaluated;

    std::size_t idx(std::size_t i, std::size_t j) const { return j * nx + i; }
    bool is_evaluated(std::size_t i, std::size_t j) const { return evaluated[idx(i, j)] != 0; }
    Quadrant label(std::size_t i, std::size_t j) const { return labels[idx(i, j)]; }
    std::size_t evaluated_count() const {
        std::size_t n = 0;
        for (auto e : evaluated) n += e;
        return n;
    }
};

using ShootFn = std::function<Residue(double, double)>;

/// One evaluation of the shooting map.
inline Residue shoot(double du0, double dv0, const ProblemParams& prm,
                     const IvpSettings& opt = {}) {
    const Trajectory traj = integrate(du0, dv0, prm, opt);
    if (traj.ok()) {
        const ShootState& fin = traj.grid.empty() ? traj.last : traj.grid.back();
        return Residue{fin.u, fin.v, IvpStatus::ok};
    }
    // Sign inference from the last accepted state.
    return Residue{traj.last.u, traj.last.v, traj.status};
}

/// Shooting closure for grid work: dense output disabled, everything else as
/// configured. Safe to call concurrently.
inline ShootFn make_shooter(const ProblemParams& prm, IvpSettings opt = {}) {
    prm.validate();
    opt.grid_cells = 0;
    opt.keep_steps = false;
    return [prm, opt](double du0, double dv0) { return shoot(du0, dv0, prm, opt); };
}

/// Evaluates shoot+classify on every vertex of the window.
inline ColorGrid scan_grid_with(const ScanWindow& window, const ShootFn& fn,
                                unsigned threads = 0) {
    window.validate();
    ColorGrid grid;
    grid.window = window;
    grid.nx = window.nx();
    grid.ny = window.ny();
    const std::size_t n = grid.nx * grid.ny;
    grid.residues.resize(n);
    grid.labels.resize(n, Quadrant::green);
    grid.evaluated.assign(n, 1);
    parallel_for(n, threads, [&](std::size_t t) {
        const std::size_t i = t % grid.nx;
        const std::size_t j = t / grid.nx;
        const Residue res = fn(window.du_at(i), window.dv_at(j));
        grid.residues[t] = res;
        grid.labels[t] = classify(res);
    });
    return grid;
}

inline ColorGrid scan_grid(const ScanWindow& window, const ProblemParams& prm,
                           const IvpSettings& opt = {}, unsigned threads = 0) {
    return scan_grid_with(window, make_shooter(prm, opt), threads);
}

/// Re-scans at dense spacing only inside coarse cells that touch a color
/// boundary (dilated by `dilate` rings of cells); everything else stays
/// masked, which is what leaves the blank rectangles in the rendered diagram.
inline ColorGrid refine_to_dense_with(const ColorGrid& coarse, double dense_delta,
                                      const ShootFn& fn, unsigned threads = 0,
                                      int dilate = 1) {
    if (!(dense_delta < coarse.window.delta))
        throw std::invalid_argument("refine_to_dense: dense delta must be < coarse delta");

    ColorGrid grid;
    grid.window = coarse.window.with_delta(dense_delta);
    grid.nx = grid.window.nx();
    grid.ny = grid.window.ny();
    const std::size_t n = grid.nx * grid.ny;
    grid.residues.resize(n);
    grid.labels.resize(n, Quadrant::green);
    grid.evaluated.assign(n, 0);

    if (coarse.nx < 2 || coarse.ny < 2) return grid;
    const std::size_t ncx = coarse.nx - 1;
    const std::size_t ncy = coarse.ny - 1;
    std::vector<std::uint8_t> active(ncx * ncy, 0);
    for (std::size_t cj = 0; cj < ncy; ++cj)
        for (std::size_t ci = 0; ci < ncx; ++ci) {
            if (!coarse.is_evaluated(ci, cj) || !coarse.is_evaluated(ci + 1, cj) ||
                !coarse.is_evaluated(ci, cj + 1) || !coarse.is_evaluated(ci + 1, cj + 1))
                continue;
            const Quadrant c0 = coarse.label(ci, cj);
            if (coarse.label(ci + 1, cj) != c0 || coarse.label(ci, cj + 1) != c0 ||
                coarse.label(ci + 1, cj + 1) != c0)
                active[cj * ncx + ci] = 1;
        }
    for (int pass = 0; pass < dilate; ++pass) {
        std::vector<std::uint8_t> grown = active;
        for (std::size_t cj = 0; cj < ncy; ++cj)
            for (std::size_t ci = 0; ci < ncx; ++ci) {
                if (active[cj * ncx + ci] == 0) continue;
                for (int dj = -1; dj <= 1; ++dj)
                    for (int di = -1; di <= 1; ++di) {
                        const long ni = static_cast<long>(ci) + di;
                        const long nj = static_cast<long>(cj) + dj;
                        if (ni < 0 || nj < 0 || ni >= static_cast<long>(ncx) ||
                            nj >= static_cast<long>(ncy))
                            continue;
                        grown[static_cast<std::size_t>(nj) * ncx + static_cast<std::size_t>(ni)] = 1;
                    }
            }
        active = std::move(grown);
    }

    const double dc = coarse.window.delta;
    std::vector<std::size_t> todo;
    for (std::size_t j = 0; j < grid.ny; ++j)
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double x = grid.window.du_at(i);
            const double y = grid.window.dv_at(j);
            auto cell_of = [dc](double t, double lo, std::size_t count) {
                long c = static_cast<long>(std::floor((t - lo) / dc + 1e-12));
                if (c < 0) c = 0;
                if (c >= static_cast<long>(count)) c = static_cast<long>(count) - 1;
                return static_cast<std::size_t>(c);
            };
            const std::size_t ci = cell_of(x, coarse.window.du_min, ncx);
            const std::size_t cj = cell_of(y, coarse.window.dv_min, ncy);
            if (active[cj * ncx + ci]) todo.push_back(grid.idx(i, j));
        }

    parallel_for(todo.size(), threads, [&](std::size_t t) {
        const std::size_t id = todo[t];
        const std::size_t i = id % grid.nx;
        const std::size_t j = id / grid.nx;
        const Residue res = fn(grid.window.du_at(i), grid.window.dv_at(j));
        grid.residues[id] = res;
        grid.labels[id] = classify(res);
        grid.evaluated[id] = 1;
    });
    return grid;
}

inline ColorGrid refine_to_dense(const ColorGrid& coarse, double dense_delta,
                                 const ProblemParams& prm, const IvpSettings& opt = {},
                                 unsigned threads = 0, int dilate = 1) {
    return refine_to_dense_with(coarse, dense_delta, make_shooter(prm, opt), threads, dilate);
}

/// Rectangle in the du0-dv0 plane whose vertices carry all four colors: a
/// Poincare-Miranda candidate for a zero of Phi.
struct MeetingCell {
    double du_lo = 0.0;
    double du_hi = 0.0;
    double dv_lo = 0.0;
    double dv_hi = 0.0;

    double du_center() const { return 0.5 * (du_lo + du_hi); }
    double dv_center() const { return 0.5 * (dv_lo + dv_hi); }
    bool overlaps(const MeetingCell& o) const {
        return du_lo <= o.du_hi && o.du_lo <= du_hi && dv_lo <= o.dv_hi && o.dv_lo <= dv_hi;
    }
};

/// Scans k x k vertex neighborhoods for all four quadrants among evaluated
/// vertices; overlapping hits merge into one cell per cluster.
inline std::vector<MeetingCell> find_meeting_points(const ColorGrid& grid, int k = 3) {
    if (k < 2) throw std::invalid_argument("find_meeting_points: k must be >= 2");
    const std::size_t kk = static_cast<std::size_t>(k);
    std::vector<MeetingCell> hits;
    if (grid.nx < kk || grid.ny < kk) return hits;
    for (std::size_t j = 0; j + kk <= grid.ny; ++j)
        for (std::size_t i = 0; i + kk <= grid.nx; ++i) {
            bool seen[4] = {false, false, false, false};
            int distinct = 0;
            for (std::size_t dj = 0; dj < kk && distinct < 4; ++dj)
                for (std::size_t di = 0; di < kk && distinct < 4; ++di) {
                    if (!grid.is_evaluated(i + di, j + dj)) continue;
                    const auto c = static_cast<std::size_t>(grid.label(i + di, j + dj));
                    if (!seen[c]) {
                        seen[c] = true;
                        ++distinct;
                    }
                }
            if (distinct == 4)
                hits.push_back(MeetingCell{grid.window.du_at(i), grid.window.du_at(i + kk - 1),
                                           grid.window.dv_at(j), grid.window.dv_at(j + kk - 1)});
        }
    if (hits.empty()) return hits;

    // Merge overlapping candidates (union-find over pairwise overlap).
    std::vector<std::size_t> parent(hits.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    for (std::size_t a = 0; a < hits.size(); ++a)
        for (std::size_t b = a + 1; b < hits.size(); ++b)
            if (hits[a].overlaps(hits[b])) {
                const std::size_t ra = find(a), rb = find(b);
                if (ra != rb) parent[rb] = ra;
            }
    std::map<std::size_t, MeetingCell> merged;
    for (std::size_t a = 0; a < hits.size(); ++a) {
        const std::size_t root = find(a);
        auto it = merged.find(root);
        if (it == merged.end()) {
            merged[root] = hits[a];
        } else {
            it->second.du_lo = std::min(it->second.du_lo, hits[a].du_lo);
            it->second.du_hi = std::max(it->second.du_hi, hits[a].du_hi);
            it->second.dv_lo = std::min(it->second.dv_lo, hits[a].dv_lo);
            it->second.dv_hi = std::max(it->second.dv_hi, hits[a].dv_hi);
        }
    }
    std::vector<MeetingCell> out;
    out.reserve(merged.size());
    for (auto& kv : merged) out.push_back(kv.second);
    std::sort(out.begin(), out.end(), [](const MeetingCell& a, const MeetingCell& b) {
        return a.du_lo != b.du_lo ? a.du_lo < b.du_lo : a.dv_lo < b.dv_lo;
    });
    return out;
}

struct PolishOptions {
    double eps = 1e-6;        // acceptance: max(|u(1)|, |v(1)|) < eps
    int max_iter = 60;        // combined quadrisection + Broyden budget
    double fd_step = 1e-5;    // relative forward-difference step for the Jacobian
    double nontrivial_floor = 0.0;  // reject converged slopes with |du0|+|dv0| below
                                    // this (Phi(0,0) = 0 is always a zero)
};

/// A converged zero of the shooting map.
struct RootFix {
    double du0 = 0.0;
    double dv0 = 0.0;
    double u1 = 0.0;
    double v1 = 0.0;
    int iterations = 0;
};

namespace detail {

class ResidueCache {
  public:
    explicit ResidueCache(const ShootFn& fn) : fn_(fn) {}

    const Residue& eval(double x, double y) {
        const auto key = std::make_pair(x, y);
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, fn_(x, y)).first;
        return it->second;
    }

  private:
    const ShootFn& fn_;
    std::map<std::pair<double, double>, Residue> cache_;
};

inline bool all_four_colors(const std::vector<Quadrant>& cs) {
    bool seen[4] = {false, false, false, false};
    for (auto c : cs) seen[static_cast<std::size_t>(c)] = true;
    return seen[0] && seen[1] && seen[2] && seen[3];
}

struct Best {
    double floor = 0.0;
    double du0 = 0.0, dv0 = 0.0, norm = std::numeric_limits<double>::infinity();
    void offer(double x, double y, const Residue& r) {
        if (!r.ok()) return;
        if (std::fabs(x) + std::fabs(y) <= floor) return;
        const double n = r.max_abs();
        if (n < norm) {
            norm = n;
            du0 = x;
            dv0 = y;
        }
    }
};

}  // namespace detail

/// Quadrisection that preserves the four-color meeting, with a Broyden
/// fallback once no subcell keeps all colors. Accepts as soon as any
/// evaluation satisfies the residue tolerance.
inline std::optional<RootFix> polish_root_with(const ShootFn& fn, MeetingCell cell,
                                               const PolishOptions& opt = {}) {
    if (!(opt.eps > 0.0)) throw std::invalid_argument("polish_root: eps must be > 0");
    detail::ResidueCache cache(fn);
    detail::Best best;
    best.floor = opt.nontrivial_floor;
    int iters = 0;

    const auto accept = [&](double x, double y, const Residue& r) -> std::optional<RootFix> {
        if (r.ok() && r.max_abs() < opt.eps &&
            std::fabs(x) + std::fabs(y) > opt.nontrivial_floor)
            return RootFix{x, y, r.u1, r.v1, iters};
        return std::nullopt;
    };

    {
        const Residue rc = cache.eval(cell.du_center(), cell.dv_center());
        best.offer(cell.du_center(), cell.dv_center(), rc);
        if (auto hit = accept(cell.du_center(), cell.dv_center(), rc)) return hit;
    }

    // Quadrisection phase.
    while (iters < opt.max_iter) {
        const double w = cell.du_hi - cell.du_lo;
        const double h = cell.dv_hi - cell.dv_lo;
        if (w < 1e-12 && h < 1e-12) break;
        const double xs[5] = {cell.du_lo, cell.du_lo + 0.25 * w, cell.du_lo + 0.5 * w,
                              cell.du_lo + 0.75 * w, cell.du_hi};
        const double ys[5] = {cell.dv_lo, cell.dv_lo + 0.25 * h, cell.dv_lo + 0.5 * h,
                              cell.dv_lo + 0.75 * h, cell.dv_hi};
        Quadrant q[5][5];
        for (int a = 0; a < 5; ++a)
            for (int b = 0; b < 5; ++b) {
                const Residue& r = cache.eval(xs[a], ys[b]);
                best.offer(xs[a], ys[b], r);
                if (auto hit = accept(xs[a], ys[b], r)) return hit;
                q[a][b] = classify(r);
            }
        ++iters;

        // Subcells in fixed order: SW, SE, NW, NE; a subcell survives if its
        // corners and edge midpoints (plus center) still show all four colors.
        const int oa[4] = {0, 2, 0, 2};
        const int ob[4] = {0, 0, 2, 2};
        bool descended = false;
        for (int s = 0; s < 4 && !descended; ++s) {
            std::vector<Quadrant> cs;
            cs.reserve(9);
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) cs.push_back(q[oa[s] + a][ob[s] + b]);
            if (detail::all_four_colors(cs)) {
                cell = MeetingCell{xs[oa[s]], xs[oa[s] + 2], ys[ob[s]], ys[ob[s] + 2]};
                descended = true;
            }
        }
        if (!descended) break;  // stalled: hand over to Broyden
    }

    // Broyden phase from the best point seen so far (cell center if none).
    double x = best.norm < std::numeric_limits<double>::infinity() ? best.du0 : cell.du_center();
    double y = best.norm < std::numeric_limits<double>::infinity() ? best.dv0 : cell.dv_center();
    Residue f = cache.eval(x, y);
    if (auto hit = accept(x, y, f)) return hit;
    if (!f.ok()) return std::nullopt;

    double b11 = 0, b12 = 0, b21 = 0, b22 = 0;
    const auto numeric_jacobian = [&]() -> bool {
        const double hx = opt.fd_step * std::max(1.0, std::fabs(x));
        const double hy = opt.fd_step * std::max(1.0, std::fabs(y));
        const Residue fx = cache.eval(x + hx, y);
        const Residue fy = cache.eval(x, y + hy);
        if (!fx.ok() || !fy.ok()) return false;
        b11 = (fx.u1 - f.u1) / hx;
        b21 = (fx.v1 - f.v1) / hx;
        b12 = (fy.u1 - f.u1) / hy;
        b22 = (fy.v1 - f.v1) / hy;
        return true;
    };
    if (!numeric_jacobian()) return std::nullopt;

    while (iters < opt.max_iter) {
        ++iters;
        const double det = b11 * b22 - b12 * b21;
        if (!(std::fabs(det) > 1e-30)) {
            if (!numeric_jacobian()) return std::nullopt;
            continue;
        }
        double sx = -(b22 * f.u1 - b12 * f.v1) / det;
        double sy = -(-b21 * f.u1 + b11 * f.v1) / det;

        double nx = x, ny = y;
        Residue fn_new = f;
        bool moved = false;
        for (int damp = 0; damp < 7; ++damp) {
            const double tx = x + sx, ty = y + sy;
            const Residue ft = cache.eval(tx, ty);
            if (ft.ok() && (ft.max_abs() < f.max_abs() || damp == 6)) {
                nx = tx;
                ny = ty;
                fn_new = ft;
                moved = true;
                best.offer(tx, ty, ft);
                if (auto hit = accept(tx, ty, ft)) return hit;
                break;
            }
            sx *= 0.5;
            sy *= 0.5;
        }
        if (!moved) {
            if (!numeric_jacobian()) return std::nullopt;
            continue;
        }

        // Rank-one Broyden update.
        const double dx = nx - x, dy = ny - y;
        const double du = fn_new.u1 - f.u1, dv = fn_new.v1 - f.v1;
        const double ss = dx * dx + dy * dy;
        if (ss > 0.0) {
            const double ru = du - (b11 * dx + b12 * dy);
            const double rv = dv - (b21 * dx + b22 * dy);
            b11 += ru * dx / ss;
            b12 += ru * dy / ss;
            b21 += rv * dx / ss;
            b22 += rv * dy / ss;
        }
        x = nx;
        y = ny;
        f = fn_new;
    }
    return std::nullopt;
}

enum class BranchLabel : std::uint8_t { lower, upper, unlabeled };

inline const char* branch_name(BranchLabel b) {
    switch (b) {
        case BranchLabel::lower: return "lower";
        case BranchLabel::upper: return "upper";
        case BranchLabel::unlabeled: return "unlabeled";
    }
    return "?";
}

/// A converged root with its solution diagnostics.
struct SolutionRecord {
    double lambda = 0.0;
    double du0 = 0.0;
    double dv0 = 0.0;
    double sup_v = 0.0;
    double sup_u = 0.0;
    double energy = 0.0;
    double residue_u1 = 0.0;
    double residue_v1 = 0.0;
    BranchLabel branch = BranchLabel::unlabeled;
    double symmetry_defect = 0.0;
    int iterations = 0;
};

/// Polishes a meeting cell into a SolutionRecord (diagnostics from the
/// dense-output trajectory of the converged slopes).
inline std::optional<SolutionRecord> polish_root(const MeetingCell& cell,
                                                 const ProblemParams& prm,
                                                 const PolishOptions& popt = {},
                                                 IvpSettings ivp = {}) {
    const auto fix = polish_root_with(make_shooter(prm, ivp), cell, popt);
    if (!fix) return std::nullopt;
    if (ivp.grid_cells == 0) ivp.grid_cells = 512;
    const Trajectory traj = integrate(fix->du0, fix->dv0, prm, ivp);
    if (!traj.ok()) return std::nullopt;
    SolutionRecord rec;
    rec.lambda = prm.lambda;
    rec.du0 = fix->du0;
    rec.dv0 = fix->dv0;
    rec.sup_v = traj.sup_abs_v();
    rec.sup_u = traj.sup_abs_u();
    rec.energy = energy(traj, prm).total;
    rec.residue_u1 = traj.final_state().u;
    rec.residue_v1 = traj.final_state().v;
    rec.symmetry_defect = verify_symmetry(traj).v_sym_defect;
    rec.iterations = fix->iterations;
    return rec;
}

}  // namespace pmshoot
