#pragma once

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pmshoot/continuation.hpp"
#include "pmshoot/ode.hpp"
#include "pmshoot/shooting.hpp"

namespace pmshoot {

/// Fixed legend colors so renders are byte-testable.
inline const char* quadrant_color(Quadrant c) {
    switch (c) {
        case Quadrant::green: return "#2ca02c";
        case Quadrant::yellow: return "#ffdf00";
        case Quadrant::blue: return "#1f77b4";
        case Quadrant::red: return "#d62728";
    }
    return "#000000";
}

namespace detail {

inline std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

inline std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct PlotBox {
    double width = 760.0, height = 560.0;
    double left = 70.0, right = 20.0, top = 20.0, bottom = 50.0;
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;  // data range

    double px(double x) const {
        return left + (x - x0) / (x1 - x0) * (width - left - right);
    }
    double py(double y) const {
        return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom);
    }
};

inline void svg_open(std::ostringstream& o, const PlotBox& b) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << b.width
      << "\" height=\"" << b.height << "\" viewBox=\"0 0 " << b.width << " " << b.height
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
}

inline void svg_axes(std::ostringstream& o, const PlotBox& b, const std::string& xlabel,
                     const std::string& ylabel) {
    o << "<rect x=\"" << fmt2(b.left) << "\" y=\"" << fmt2(b.top) << "\" width=\""
      << fmt2(b.width - b.left - b.right) << "\" height=\"" << fmt2(b.height - b.top - b.bottom)
      << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    o << "<text x=\"" << fmt2(b.left + 0.5 * (b.width - b.left - b.right)) << "\" y=\""
      << fmt2(b.height - 12.0) << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"14\">" << xlabel << "</text>\n";
    o << "<text x=\"16\" y=\"" << fmt2(b.top + 0.5 * (b.height - b.top - b.bottom))
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
      << "transform=\"rotate(-90 16 " << fmt2(b.top + 0.5 * (b.height - b.top - b.bottom))
      << ")\">" << ylabel << "</text>\n";
    // Corner tick labels for the data range.
    o << "<text x=\"" << fmt2(b.left) << "\" y=\"" << fmt2(b.height - b.bottom + 16.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt6(b.x0)
      << "</text>\n";
    o << "<text x=\"" << fmt2(b.width - b.right) << "\" y=\"" << fmt2(b.height - b.bottom + 16.0)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt6(b.x1)
      << "</text>\n";
    o << "<text x=\"" << fmt2(b.left - 6.0) << "\" y=\"" << fmt2(b.height - b.bottom + 4.0)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt6(b.y0)
      << "</text>\n";
    o << "<text x=\"" << fmt2(b.left - 6.0) << "\" y=\"" << fmt2(b.top + 4.0)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt6(b.y1)
      << "</text>\n";
}

}  // namespace detail

/// Color diagram of a du0-dv0 scan: one filled square per evaluated vertex,
/// masked vertices blank, black circles at the supplied roots.
inline std::string render_color_diagram(const ColorGrid& grid,
                                        const std::vector<std::pair<double, double>>& roots = {}) {
    using namespace detail;
    PlotBox box;
    const auto& w = grid.window;
    box.x0 = w.du_min;
    box.x1 = w.du_max;
    box.y0 = w.dv_min;
    box.y1 = w.dv_max;
    std::ostringstream o;
    svg_open(o, box);
    if (grid.nx > 0 && grid.ny > 0) {
        const double cw = std::fabs(box.px(w.du_min + w.delta) - box.px(w.du_min));
        const double ch = std::fabs(box.py(w.dv_min) - box.py(w.dv_min + w.delta));
        for (std::size_t j = 0; j < grid.ny; ++j)
            for (std::size_t i = 0; i < grid.nx; ++i) {
                if (!grid.is_evaluated(i, j)) continue;
                const double cx = box.px(w.du_at(i));
                const double cy = box.py(w.dv_at(j));
                o << "<rect x=\"" << fmt2(cx - 0.5 * cw) << "\" y=\"" << fmt2(cy - 0.5 * ch)
                  << "\" width=\"" << fmt2(cw) << "\" height=\"" << fmt2(ch) << "\" fill=\""
                  << quadrant_color(grid.label(i, j)) << "\"/>\n";
            }
    }
    for (const auto& rt : roots) {
        o << "<circle cx=\"" << fmt2(box.px(rt.first)) << "\" cy=\"" << fmt2(box.py(rt.second))
          << "\" r=\"5\" fill=\"#000000\"/>\n";
    }
    svg_axes(o, box, "du0", "dv0");
    o << "</svg>\n";
    return o.str();
}

/// Solution profile u(x), v(x) over [0,1] with markers at each maximum.
inline std::string render_profile(const Trajectory& traj) {
    using namespace detail;
    PlotBox box;
    box.x0 = 0.0;
    box.x1 = 1.0;
    double lo = 0.0, hi = 0.0;
    for (const auto& s : traj.grid) {
        lo = std::min({lo, s.u, s.v});
        hi = std::max({hi, s.u, s.v});
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    const double pad = 0.05 * (hi - lo);
    box.y0 = lo - pad;
    box.y1 = hi + pad;

    std::ostringstream o;
    svg_open(o, box);
    svg_axes(o, box, "x", "u, v");
    const auto polyline = [&](const char* color, auto get) {
        if (traj.grid.empty()) return;
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < traj.grid.size(); ++i) {
            if (i) o << " ";
            o << fmt2(box.px(traj.grid[i].x)) << "," << fmt2(box.py(get(traj.grid[i])));
        }
        o << "\"/>\n";
        // marker at the maximum
        double bx = 0.0, bv = -1e308;
        for (const auto& s : traj.grid)
            if (get(s) > bv) {
                bv = get(s);
                bx = s.x;
            }
        o << "<circle cx=\"" << fmt2(box.px(bx)) << "\" cy=\"" << fmt2(box.py(bv))
          << "\" r=\"3.5\" fill=\"" << color << "\"/>\n";
    };
    polyline("#1f77b4", [](const ShootState& s) { return s.u; });
    polyline("#d62728", [](const ShootState& s) { return s.v; });
    o << "<text x=\"" << fmt2(box.width - 90.0) << "\" y=\"" << fmt2(box.top + 18.0)
      << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#1f77b4\">u</text>\n";
    o << "<text x=\"" << fmt2(box.width - 70.0) << "\" y=\"" << fmt2(box.top + 18.0)
      << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#d62728\">v</text>\n";
    o << "</svg>\n";
    return o.str();
}

/// Bifurcation diagram: sup|v| against lambda for both branches.
inline std::string render_bifurcation(const std::vector<BifRow>& rows) {
    using namespace detail;
    PlotBox box;
    if (rows.empty()) {
        box.x0 = 0.0;
        box.x1 = 1.0;
        box.y0 = 0.0;
        box.y1 = 1.0;
    } else {
        double xl = rows.front().lambda, xh = xl, yl = rows.front().sup_v, yh = yl;
        for (const auto& r : rows) {
            xl = std::min(xl, r.lambda);
            xh = std::max(xh, r.lambda);
            yl = std::min(yl, r.sup_v);
            yh = std::max(yh, r.sup_v);
        }
        if (xh - xl < 1e-12) xh = xl + 1.0;
        if (yh - yl < 1e-12) yh = yl + 1.0;
        box.x0 = xl;
        box.x1 = xh;
        box.y0 = 0.0;
        box.y1 = yh + 0.05 * (yh - yl);
    }
    std::ostringstream o;
    svg_open(o, box);
    svg_axes(o, box, "lambda", "sup |v|");
    const auto draw_branch = [&](BranchLabel b, const char* color) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& r : rows)
            if (r.branch == b) pts.emplace_back(r.lambda, r.sup_v);
        if (pts.empty()) return;
        if (pts.size() > 1) {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i) {
                if (i) o << " ";
                o << fmt2(box.px(pts[i].first)) << "," << fmt2(box.py(pts[i].second));
            }
            o << "\"/>\n";
        }
        for (const auto& p : pts)
            o << "<circle cx=\"" << fmt2(box.px(p.first)) << "\" cy=\"" << fmt2(box.py(p.second))
              << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    };
    draw_branch(BranchLabel::lower, "#1f77b4");
    draw_branch(BranchLabel::upper, "#d62728");
    draw_branch(BranchLabel::unlabeled, "#7f7f7f");
    o << "<text x=\"" << fmt2(box.width - 150.0) << "\" y=\"" << fmt2(box.top + 18.0)
      << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#1f77b4\">lower</text>\n";
    o << "<text x=\"" << fmt2(box.width - 90.0) << "\" y=\"" << fmt2(box.top + 18.0)
      << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#d62728\">upper</text>\n";
    o << "</svg>\n";
    return o.str();
}

}  // namespace pmshoot
