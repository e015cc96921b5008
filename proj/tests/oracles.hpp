#pragma once

// Test-only oracles, independent of the library's integration and quadrature
// paths: a fixed-step classic RK4, the trapezoid rule, golden-section search,
// and reference constants evaluated with 30-digit arithmetic.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "pmshoot/ode.hpp"

namespace oracles {

using Vec4 = std::array<double, 4>;
using RhsFn = std::function<Vec4(double, const Vec4&)>;

// Reference values, 17 significant digits (mpmath, dps=30).
inline constexpr double kT = 1.9586666572194263;
inline constexpr double kHT = 0.65687007952139109;
inline constexpr double kLambda0Basic = 2.2069451739603197;
inline constexpr double kKEmb = 0.11306379644759078;
inline constexpr double kLambda0Improved = 16.019666280557301;
inline constexpr double kGamma2p5 = 1.3293403881791370;
inline constexpr double kSqrtPi = 1.7724538509055160;
// Terminal map of the linear test system u'' = -v, v'' = -u:
// (u(1), v(1)) = M (du0, dv0) with M = [[m11, m12], [m12, m11]].
inline constexpr double kLinM11 = 1.0083360892258490;
inline constexpr double kLinM12 = -0.16686510441795248;

inline Vec4 concave_convex_rhs(const Vec4& y, const pmshoot::ProblemParams& prm) {
    const double vp = y[1] > 0.0 ? y[1] : 0.0;
    return Vec4{y[2], y[3], -prm.lambda * std::pow(vp, prm.r) - std::pow(vp, prm.p),
                -(y[0] < 0.0 ? -1.0 : 1.0) * std::pow(std::fabs(y[0]), prm.q)};
}

// Classic fixed-step RK4 over [0,1] from (0, 0, du0, dv0).
inline std::pair<double, double> rk4_final(const RhsFn& f, double du0, double dv0, double h) {
    Vec4 y{0.0, 0.0, du0, dv0};
    double x = 0.0;
    const auto add = [](const Vec4& a, const Vec4& b, double s) {
        return Vec4{a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]};
    };
    while (x < 1.0 - 1e-12) {
        const double step = std::min(h, 1.0 - x);
        const Vec4 k1 = f(x, y);
        const Vec4 k2 = f(x + 0.5 * step, add(y, k1, 0.5 * step));
        const Vec4 k3 = f(x + 0.5 * step, add(y, k2, 0.5 * step));
        const Vec4 k4 = f(x + step, add(y, k3, step));
        for (int i = 0; i < 4; ++i)
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        x += step;
    }
    return {y[0], y[1]};
}

inline std::pair<double, double> rk4_final(const pmshoot::ProblemParams& prm, double du0,
                                           double dv0, double h) {
    return rk4_final([&prm](double, const Vec4& y) { return concave_convex_rhs(y, prm); }, du0,
                     dv0, h);
}

inline double trapezoid_uniform(const std::vector<double>& f, double h) {
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * h;
}

// Golden-section search for the maximiser of f on [a, b] (f unimodal). Runs
// in long double: near the flat maximum the discriminating difference
// f(c) - f(d) sinks below double precision around |c - d| ~ 3e-8, which is
// exactly the accuracy the argmax comparison needs to beat.
inline long double golden_section_max(const std::function<long double(long double)>& f,
                                      long double a, long double b, long double tol) {
    const long double phi = (sqrtl(5.0L) - 1.0L) / 2.0L;
    long double c = b - phi * (b - a);
    long double d = a + phi * (b - a);
    long double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5L * (a + b);
}

// h(t) in long double for the golden-section argmax oracle.
inline long double h_threshold_ld(long double t, long double p, long double q, long double r) {
    return q / (q + 1.0L) * powl(t, 1.0L / q - r) -
           powl(t, p - r) / (powl(2.0L, p + 1.0L) * (p + 1.0L));
}

// Deterministic uniform doubles for property tests (engine output scaled
// directly so results do not depend on distribution internals).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    double uniform(double lo, double hi) {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        const double t = static_cast<double>(state_ >> 11) / 9007199254740992.0;  // 2^53
        return lo + t * (hi - lo);
    }

  private:
    std::uint64_t state_;
};

}  // namespace oracles
