#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pmshoot/ode.hpp"

namespace pmshoot {

/// Composite Simpson rule on a uniform grid with an even number of intervals.
inline double simpson_uniform(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("simpson_uniform: needs an odd sample count (even intervals)");
    double s = f.front() + f.back();
    for (std::size_t i = 1; i + 1 < n; ++i) s += f[i] * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Terms of the energy functional
///   J(v) = q/(q+1) int |v''|^{(q+1)/q} - lambda/(r+1) int (v+)^{r+1}
///          - 1/(p+1) int (v+)^{p+1}.
struct EnergyBreakdown {
    double bending = 0.0;
    double concave = 0.0;
    double convex = 0.0;
    double total = 0.0;
};

/// Energy of a trajectory of the first-order system. Along the flow
/// v'' = -|u|^{q-1} u, so |v''|^{(q+1)/q} = |u|^{q+1} and the bending term
/// avoids numerical second derivatives. Quadrature: composite Simpson on the
/// uniform dense grid.
inline EnergyBreakdown energy(const Trajectory& traj, const ProblemParams& prm) {
    prm.validate();
    if (!traj.ok() || traj.grid.size() < 3)
        throw std::invalid_argument("energy: trajectory does not reach x=1");
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
    EnergyBreakdown e;
    e.bending = prm.q / (prm.q + 1.0) * simpson_uniform(fb, h);
    e.concave = prm.lambda / (prm.r + 1.0) * simpson_uniform(fc, h);
    e.convex = 1.0 / (prm.p + 1.0) * simpson_uniform(fx, h);
    e.total = e.bending - e.concave - e.convex;
    return e;
}

namespace detail {

inline void require_threshold_domain(double p, double q, double r) {
    if (!(q > 0.0)) throw std::domain_error("thresholds: q must be > 0");
    if (!(p * q > 1.0)) throw std::domain_error("thresholds: pq must be > 1");
    if (!(q * r < 1.0)) throw std::domain_error("thresholds: qr must be < 1");
}

}  // namespace detail

/// h(t) = q/(q+1) t^{1/q-r} - 1/(2^{p+1}(p+1)) t^{p-r}, whose maximiser
/// defines the threshold radius T.
inline double threshold_h(double t, double p, double q, double r) {
    detail::require_threshold_domain(p, q, r);
    if (!(t >= 0.0)) throw std::domain_error("threshold_h: t must be >= 0");
    return q / (q + 1.0) * std::pow(t, 1.0 / q - r) -
           std::pow(t, p - r) / (std::pow(2.0, p + 1.0) * (p + 1.0));
}

/// Closed-form maximiser of h:
///   T = ( 2^{p+1} (1-qr) (p+1) / ((q+1)(p-r)) )^{q/(pq-1)}.
inline double threshold_T(double p, double q, double r) {
    detail::require_threshold_domain(p, q, r);
    const double base = std::pow(2.0, p + 1.0) * (1.0 - q * r) * (p + 1.0) / ((q + 1.0) * (p - r));
    return std::pow(base, q / (p * q - 1.0));
}

/// lambda_0 = 2^{r+1} (r+1) h(T): below this value two distinct nonnegative
/// solutions are guaranteed.
inline double lambda0_basic(double p, double q, double r) {
    const double T = threshold_T(p, q, r);
    return std::pow(2.0, r + 1.0) * (r + 1.0) * threshold_h(T, p, q, r);
}

/// Euler Gamma via the Lanczos approximation (g = 7, 9 terms).
inline double gamma_fn(double z) {
    if (!(z > 0.0) || !std::isfinite(z)) throw std::domain_error("gamma_fn: z must be > 0");
    static constexpr double coef[9] = {
        0.99999999999980993,    676.5203681218851,      -1259.1392167224028,
        771.32342877765313,     -176.61502916214059,    12.507343278686905,
        -0.13857109526572012,   9.9843695780195716e-6,  1.5056327351493116e-7};
    constexpr double pi = 3.14159265358979323846;
    if (z < 0.5) return pi / (std::sin(pi * z) * gamma_fn(1.0 - z));
    z -= 1.0;
    double x = coef[0];
    for (int i = 1; i < 9; ++i) x += coef[i] / (z + i);
    const double t = z + 7.5;
    return std::sqrt(2.0 * pi) * std::pow(t, z + 0.5) * std::exp(-t) * x;
}

/// Upper bound K_emb for the optimal embedding constant of X into L^{(q+1)/q},
/// with gamma = (q+1)/q and gamma' its conjugate exponent.
inline double k_emb(double q) {
    if (!(q > 0.0)) throw std::domain_error("k_emb: q must be > 0");
    constexpr double pi = 3.14159265358979323846;
    const double gam = (q + 1.0) / q;
    const double gam_p = gam / (gam - 1.0);
    const auto arg = [&](double s) {
        return std::pow(std::sqrt(pi) * gamma_fn(s) / gamma_fn(s + 0.5) - 1.0 / s, 1.0 / s);
    };
    return (0.25 / 2.0) * std::min(arg(gam), arg(gam_p));
}

/// Improved threshold using the embedding bound:
///   lambda_0 = (r+1)/K_emb^{r+1} ( q/(q+1) T^{1/q-r} - T^{p-r}/(2^{p+1}(p+1)) ).
inline double lambda0_improved(double p, double q, double r) {
    const double T = threshold_T(p, q, r);
    const double K = k_emb(q);
    return (r + 1.0) / std::pow(K, r + 1.0) * threshold_h(T, p, q, r);
}

/// All analytic threshold quantities for one (p, q, r) triple.
struct ThresholdReport {
    double T = 0.0;
    double hT = 0.0;
    double lambda0_basic = 0.0;
    double gamma = 0.0;
    double gamma_prime = 0.0;
    double k_emb = 0.0;
    double lambda0_improved = 0.0;
};

inline ThresholdReport compute_thresholds(double p, double q, double r) {
    ThresholdReport rep;
    rep.T = threshold_T(p, q, r);
    rep.hT = threshold_h(rep.T, p, q, r);
    rep.lambda0_basic = pmshoot::lambda0_basic(p, q, r);
    rep.gamma = (q + 1.0) / q;
    rep.gamma_prime = rep.gamma / (rep.gamma - 1.0);
    rep.k_emb = pmshoot::k_emb(q);
    rep.lambda0_improved = pmshoot::lambda0_improved(p, q, r);
    return rep;
}

/// Numerical check of the symmetry claims: u, v symmetric about x = 1/2 with
/// their maximum there and no other critical point.
struct SymmetryReport {
    double v_sym_defect = 0.0;
    double u_sym_defect = 0.0;
    double v_max_location = 0.5;
    double u_max_location = 0.5;
    int critical_point_count = 0;    // sign changes of v' on (0,1)
    int u_critical_point_count = 0;  // sign changes of u' on (0,1)
};

namespace detail {

template <class Get>
double argmax_toward_mid(const std::vector<ShootState>& grid, const Get& get) {
    double best_val = get(grid.front());
    double best_x = grid.front().x;
    for (const auto& s : grid) {
        const double v = get(s);
        if (v > best_val ||
            (v == best_val && std::fabs(s.x - 0.5) < std::fabs(best_x - 0.5))) {
            best_val = v;
            best_x = s.x;
        }
    }
    return best_x;
}

template <class Get>
int sign_change_count(const std::vector<ShootState>& grid, const Get& get) {
    double scale = 0.0;
    for (const auto& s : grid) scale = std::max(scale, std::fabs(get(s)));
    const double tol = 1e-12 * (1.0 + scale);
    int count = 0;
    int prev = 0;
    for (const auto& s : grid) {
        const double v = get(s);
        if (std::fabs(v) <= tol) continue;
        const int sgn = v > 0.0 ? 1 : -1;
        if (prev != 0 && sgn != prev) ++count;
        prev = sgn;
    }
    return count;
}

}  // namespace detail

inline SymmetryReport verify_symmetry(const Trajectory& traj) {
    if (!traj.ok() || traj.grid.size() < 3)
        throw std::invalid_argument("verify_symmetry: trajectory does not reach x=1");
    const auto& g = traj.grid;
    const std::size_t n = g.size();
    SymmetryReport rep;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = n - 1 - i;
        rep.v_sym_defect = std::max(rep.v_sym_defect, std::fabs(g[i].v - g[j].v));
        rep.u_sym_defect = std::max(rep.u_sym_defect, std::fabs(g[i].u - g[j].u));
    }
    rep.v_max_location = detail::argmax_toward_mid(g, [](const ShootState& s) { return s.v; });
    rep.u_max_location = detail::argmax_toward_mid(g, [](const ShootState& s) { return s.u; });
    rep.critical_point_count = detail::sign_change_count(g, [](const ShootState& s) { return s.z; });
    rep.u_critical_point_count =
        detail::sign_change_count(g, [](const ShootState& s) { return s.w; });
    return rep;
}

/// Pointwise defect of the computed trajectory against the system, measured
/// with centered second differences on the uniform grid. max_defect covers all
/// interior samples; interior_max_defect excludes a boundary margin where the
/// concave term r < 1 makes the fourth derivative unbounded and the
/// second-difference estimate loses its h^2 accuracy.
struct ResidualReport {
    double max_defect = 0.0;
    double interior_max_defect = 0.0;
    double interior_margin = 0.0;
};

inline ResidualReport verify_residual(const Trajectory& traj, const ProblemParams& prm,
                                      double interior_margin = 1.0 / 64.0) {
    prm.validate();
    if (!traj.ok() || traj.grid.size() < 3)
        throw std::invalid_argument("verify_residual: trajectory does not reach x=1");
    const auto& g = traj.grid;
    const std::size_t n = g.size() - 1;
    const double h = 1.0 / static_cast<double>(n);
    ResidualReport rep;
    rep.interior_margin = interior_margin;
    for (std::size_t i = 1; i < n; ++i) {
        const double d2u = (g[i - 1].u - 2.0 * g[i].u + g[i + 1].u) / (h * h);
        const double d2v = (g[i - 1].v - 2.0 * g[i].v + g[i + 1].v) / (h * h);
        const double vp = g[i].v > 0.0 ? g[i].v : 0.0;
        const double fu = prm.lambda * std::pow(vp, prm.r) + std::pow(vp, prm.p);
        const double fv = (g[i].u < 0.0 ? -1.0 : 1.0) * std::pow(std::fabs(g[i].u), prm.q);
        const double defect = std::max(std::fabs(d2u + fu), std::fabs(d2v + fv));
        rep.max_defect = std::max(rep.max_defect, defect);
        const double x = g[i].x;
        if (x >= interior_margin && x <= 1.0 - interior_margin)
            rep.interior_max_defect = std::max(rep.interior_max_defect, defect);
    }
    return rep;
}

}  // namespace pmshoot
