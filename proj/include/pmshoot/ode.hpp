#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pmshoot {

/// Parameters of the concave-convex system
///   -u'' = lambda * (v+)^r + (v+)^p,   -v'' = |u|^{q-1} u   on (0,1).
struct ProblemParams {
    double lambda = 1.0;
    double p = 3.0;
    double q = 1.5;
    double r = 1.0 / 3.0;

    /// Basic sanity: lambda >= 0, q > 0, everything finite.
    void validate() const {
        if (!(std::isfinite(lambda) && std::isfinite(p) && std::isfinite(q) && std::isfinite(r)))
            throw std::invalid_argument("ProblemParams: non-finite parameter");
        if (lambda < 0.0) throw std::invalid_argument("ProblemParams: lambda must be >= 0");
        if (!(q > 0.0)) throw std::invalid_argument("ProblemParams: q must be > 0");
    }

    /// Exponent regime 0 < r < 1/q and p > max{1, 1/q} under which the
    /// analytic thresholds are defined.
    bool in_exponent_regime() const {
        return q > 0.0 && r > 0.0 && r < 1.0 / q && p > std::max(1.0, 1.0 / q);
    }

    void require_exponent_regime() const {
        validate();
        if (!in_exponent_regime())
            throw std::domain_error("ProblemParams: requires 0 < r < 1/q and p > max{1, 1/q}");
    }
};

/// State of the first-order system (u, v, w, z) = (u, v, u', v') at position x.
struct ShootState {
    double x = 0.0;
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;
    double z = 0.0;

    bool finite() const {
        return std::isfinite(x) && std::isfinite(u) && std::isfinite(v) &&
               std::isfinite(w) && std::isfinite(z);
    }
};

using Deriv = std::array<double, 4>;  // (u', v', w', z')

namespace detail {

// Core RHS without input checks; NaN-safe for integrator-internal trial states.
inline Deriv rhs_raw(double u, double v, double w, double z, const ProblemParams& prm) {
    const double vp = v > 0.0 ? v : 0.0;
    const double dw = -prm.lambda * std::pow(vp, prm.r) - std::pow(vp, prm.p);
    const double au = std::fabs(u);
    const double dz = -(u < 0.0 ? -1.0 : 1.0) * std::pow(au, prm.q);
    return {w, z, dw, dz};
}

}  // namespace detail

/// Right-hand side of the first-order system:
///   u' = w,  v' = z,  w' = -lambda (v+)^r - (v+)^p,  z' = -|u|^{q-1} u.
inline Deriv rhs(const ShootState& s, const ProblemParams& prm) {
    prm.validate();
    if (!s.finite()) throw std::domain_error("rhs: non-finite state");
    return detail::rhs_raw(s.u, s.v, s.w, s.z, prm);
}

enum class IvpStatus { ok, blowup, step_underflow };

/// Integrator controls. grid_cells is the number of uniform intervals of the
/// dense-output grid (grid_cells + 1 samples); 0 disables the dense grid.
struct IvpSettings {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double overflow_guard = 1e12;
    std::size_t grid_cells = 512;
    std::size_t max_steps = 200000;
    bool keep_steps = false;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw std::invalid_argument("IvpSettings: tolerances must be > 0");
        if (!(overflow_guard > 0.0))
            throw std::invalid_argument("IvpSettings: overflow_guard must be > 0");
    }

    IvpSettings tightened(double factor) const {
        IvpSettings s = *this;
        s.rel_tol *= factor;
        s.abs_tol *= factor;
        return s;
    }
};

/// Result of one initial-value solve over [0,1].
struct Trajectory {
    std::vector<ShootState> grid;   // uniform samples x_i = i/grid_cells (complete when ok)
    std::vector<ShootState> steps;  // accepted steps, when requested
    IvpStatus status = IvpStatus::ok;
    ShootState last;                // last accepted state
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t rhs_evals = 0;
    double rel_tol = 0.0;
    double abs_tol = 0.0;

    bool ok() const { return status == IvpStatus::ok; }

    const ShootState& final_state() const {
        if (!ok() || grid.empty())
            throw std::runtime_error("Trajectory: integration did not reach x=1");
        return grid.back();
    }

    double sup_abs_u() const {
        double m = 0.0;
        for (const auto& s : grid) m = std::max(m, std::fabs(s.u));
        return m;
    }

    double sup_abs_v() const {
        double m = 0.0;
        for (const auto& s : grid) m = std::max(m, std::fabs(s.v));
        return m;
    }

    double min_u() const {
        double m = grid.empty() ? 0.0 : grid.front().u;
        for (const auto& s : grid) m = std::min(m, s.u);
        return m;
    }

    double min_v() const {
        double m = grid.empty() ? 0.0 : grid.front().v;
        for (const auto& s : grid) m = std::min(m, s.v);
        return m;
    }
};

namespace detail {

// Dormand-Prince 5(4) coefficients.
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                        a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense-output coefficients.
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

using Vec4 = std::array<double, 4>;

inline ShootState to_state(double x, const Vec4& y) {
    return ShootState{x, y[0], y[1], y[2], y[3]};
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) solve of y' = f(x, y) over [0,1] with
/// y(0) = (0, 0, du0, dv0). f takes (x, Vec4) and returns Deriv; it must not
/// throw on non-finite trial states (return NaNs instead).
template <class Rhs>
Trajectory integrate_rhs(const Rhs& f, double du0, double dv0, const IvpSettings& opt = {}) {
    using detail::Vec4;
    opt.validate();
    if (!(std::isfinite(du0) && std::isfinite(dv0)))
        throw std::invalid_argument("integrate: non-finite initial slopes");

    constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
    constexpr double facc1 = 5.0;   // 1/facl, max growth
    constexpr double facc2 = 0.1;   // 1/facr, max shrink
    const double hmin = 1e-14;

    Trajectory traj;
    traj.rel_tol = opt.rel_tol;
    traj.abs_tol = opt.abs_tol;

    const std::size_t n_grid = opt.grid_cells;
    if (n_grid > 0) traj.grid.reserve(n_grid + 1);

    double x = 0.0;
    Vec4 y{0.0, 0.0, du0, dv0};
    traj.last = detail::to_state(x, y);
    if (n_grid > 0) traj.grid.push_back(traj.last);
    if (opt.keep_steps) traj.steps.push_back(traj.last);
    std::size_t next_grid = 1;

    Vec4 k1 = f(x, y);
    traj.rhs_evals = 1;

    // Starting step from the scaled sizes of y and f(y).
    double h;
    {
        double d0 = 0.0, d1n = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double sc = opt.abs_tol + opt.rel_tol * std::fabs(y[i]);
            d0 += (y[i] / sc) * (y[i] / sc);
            d1n += (k1[i] / sc) * (k1[i] / sc);
        }
        d0 = std::sqrt(d0 / 4.0);
        d1n = std::sqrt(d1n / 4.0);
        h = (d0 < 1e-10 || d1n < 1e-10) ? 1e-6 : 0.01 * (d0 / d1n);
        h = std::min(h, 1.0);
    }

    double facold = 1e-4;
    bool finished = false;

    while (!finished) {
        if (traj.accepted + traj.rejected >= opt.max_steps) {
            traj.status = IvpStatus::step_underflow;
            return traj;
        }
        if (h < hmin) {
            traj.status = IvpStatus::step_underflow;
            return traj;
        }
        bool last_step = false;
        if (x + h >= 1.0) {
            h = 1.0 - x;
            last_step = true;
        }

        Vec4 yt, k2, k3, k4, k5, k6, k7, ynew;
        using namespace detail;
        for (int i = 0; i < 4; ++i) yt[i] = y[i] + h * a21 * k1[i];
        k2 = f(x + c2 * h, yt);
        for (int i = 0; i < 4; ++i) yt[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        k3 = f(x + c3 * h, yt);
        for (int i = 0; i < 4; ++i) yt[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        k4 = f(x + c4 * h, yt);
        for (int i = 0; i < 4; ++i)
            yt[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        k5 = f(x + c5 * h, yt);
        for (int i = 0; i < 4; ++i)
            yt[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        k6 = f(x + h, yt);
        for (int i = 0; i < 4; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        k7 = f(x + h, ynew);
        traj.rhs_evals += 6;

        double err = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double ei =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc =
                opt.abs_tol + opt.rel_tol * std::max(std::fabs(y[i]), std::fabs(ynew[i]));
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(err / 4.0);

        if (!std::isfinite(err)) {
            // Trial state escaped to inf/NaN; retry with a much smaller step.
            ++traj.rejected;
            h *= 0.1;
            continue;
        }

        const double fac11 = std::pow(err, expo1);
        if (err <= 1.0) {
            // Accept.
            facold = std::max(err, 1e-4);
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(facc2, std::min(facc1, fac / safe));
            const double hnew = h / fac;

            const double xold = x;
            x = last_step ? 1.0 : x + h;
            ++traj.accepted;

            if (n_grid > 0 && next_grid <= n_grid) {
                // Dense output for grid points inside (xold, x].
                Vec4 rc2, rc3, rc4, rc5;
                for (int i = 0; i < 4; ++i) {
                    const double dy = ynew[i] - y[i];
                    const double bspl = h * k1[i] - dy;
                    rc2[i] = dy;
                    rc3[i] = bspl;
                    rc4[i] = dy - h * k7[i] - bspl;
                    rc5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                  d6 * k6[i] + d7 * k7[i]);
                }
                while (next_grid <= n_grid) {
                    const double xg = static_cast<double>(next_grid) / static_cast<double>(n_grid);
                    if (xg > x && !(last_step && next_grid == n_grid)) break;
                    if (last_step && next_grid == n_grid) {
                        traj.grid.push_back(detail::to_state(1.0, ynew));
                    } else {
                        const double th = (xg - xold) / h;
                        Vec4 yg;
                        for (int i = 0; i < 4; ++i)
                            yg[i] = y[i] + th * (rc2[i] + (1.0 - th) * (rc3[i] + th * (rc4[i] + (1.0 - th) * rc5[i])));
                        traj.grid.push_back(detail::to_state(xg, yg));
                    }
                    ++next_grid;
                }
            }

            y = ynew;
            k1 = k7;  // FSAL
            traj.last = detail::to_state(x, y);
            if (opt.keep_steps) traj.steps.push_back(traj.last);

            double amax = 0.0;
            for (int i = 0; i < 4; ++i) amax = std::max(amax, std::fabs(y[i]));
            if (amax > opt.overflow_guard) {
                traj.status = IvpStatus::blowup;
                return traj;
            }

            if (last_step) {
                finished = true;
            } else {
                h = hnew;
            }
        } else {
            // Reject.
            ++traj.rejected;
            h /= std::min(facc1, fac11 / safe);
        }
    }

    traj.status = IvpStatus::ok;
    return traj;
}

/// Shoot the concave-convex system from (u,v,w,z)(0) = (0,0,du0,dv0) to x=1.
inline Trajectory integrate(double du0, double dv0, const ProblemParams& prm,
                            const IvpSettings& opt = {}) {
    prm.validate();
    return integrate_rhs(
        [&prm](double, const detail::Vec4& y) {
            return detail::rhs_raw(y[0], y[1], y[2], y[3], prm);
        },
        du0, dv0, opt);
}

}  // namespace pmshoot
