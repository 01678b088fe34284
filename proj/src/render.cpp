#include "trajattr/render.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "trajattr/errors.hpp"

namespace trajattr {
namespace {

constexpr const char* kPalette[8] = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#17becf",
};

// Lane offsets, in tenths of a cell, so trajectories sharing a corridor do
// not hide each other completely.
constexpr int kLanes[5][2] = {{0, 0}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

// Points actually walked: visited() repeats the final state once for the
// terminal marker, so only the first real_steps()+1 entries are geometry.
std::vector<StateId> path_points(const Environment& env, const Trajectory& t, std::size_t idx) {
    const std::vector<StateId> all = t.visited();
    const std::size_t n = t.real_steps() + 1;
    std::vector<StateId> pts(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    for (StateId s : pts) {
        if (s < 0 || s >= env.n_states())
            throw ValidationError("trajectory " + std::to_string(idx) + " leaves the grid (state " +
                                  std::to_string(s) + ")");
        if (env.is_obstacle(s))
            throw ValidationError("trajectory " + std::to_string(idx) +
                                  " crosses an obstacle at state " + std::to_string(s));
    }
    return pts;
}

}  // namespace

std::string render_grid(const Environment& env, const std::vector<Trajectory>& trajectories,
                        const RenderOptions& opts) {
    if (opts.cell_px < 8) throw ValidationError("cell_px must be at least 8");
    if (opts.query_state && (*opts.query_state < 0 || *opts.query_state >= env.n_states()))
        throw ValidationError("query state " + std::to_string(*opts.query_state) +
                              " is out of range");

    const double px = opts.cell_px;
    const int w = env.width(), h = env.height();
    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w * px) + "\" height=\"" +
           num(h * px) + "\" viewBox=\"0 0 " + num(w * px) + " " + num(h * px) + "\">\n";

    svg += "<defs>\n";
    for (int i = 0; i < 8; ++i) {
        svg += "<marker id=\"arr" + std::to_string(i) +
               "\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"5\" "
               "markerHeight=\"5\" orient=\"auto\"><path d=\"M 0 0 L 10 5 L 0 10 z\" fill=\"" +
               std::string(kPalette[i]) + "\"/></marker>\n";
    }
    svg += "</defs>\n";

    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const StateId s = env.id_of({r, c});
            const char* fill = "#ffffff";
            if (env.is_obstacle(s))
                fill = "#3b3b3b";
            else if (env.is_lava(s))
                fill = "#e2543e";
            else if (env.is_goal(s))
                fill = "#69b34c";
            svg += "<rect x=\"" + num(c * px) + "\" y=\"" + num(r * px) + "\" width=\"" + num(px) +
                   "\" height=\"" + num(px) + "\" fill=\"" + fill +
                   "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
        }
    }

    if (opts.query_state) {
        const Cell c = env.cell_of(*opts.query_state);
        svg += "<rect x=\"" + num(c.col * px) + "\" y=\"" + num(c.row * px) + "\" width=\"" +
               num(px) + "\" height=\"" + num(px) +
               "\" fill=\"#ffe066\" stroke=\"#b8860b\" stroke-width=\"3\"/>\n";
    }

    const double stroke = px >= 32 ? px / 16.0 : 2.0;
    for (std::size_t i = 0; i < trajectories.size(); ++i) {
        const std::vector<StateId> pts = path_points(env, trajectories[i], i);
        const char* color = kPalette[i % 8];
        const double dx = kLanes[i % 5][0] * px / 10.0;
        const double dy = kLanes[i % 5][1] * px / 10.0;
        const Cell first = env.cell_of(pts.front());
        svg += "<circle cx=\"" + num(first.col * px + px / 2 + dx) + "\" cy=\"" +
               num(first.row * px + px / 2 + dy) + "\" r=\"" + num(px / 10.0) + "\" fill=\"" +
               std::string(color) + "\"/>\n";
        if (pts.size() < 2) continue;
        svg += "<polyline points=\"";
        for (std::size_t p = 0; p < pts.size(); ++p) {
            const Cell c = env.cell_of(pts[p]);
            if (p) svg += " ";
            svg += num(c.col * px + px / 2 + dx) + "," + num(c.row * px + px / 2 + dy);
        }
        svg += "\" fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"" +
               num(stroke) + "\" stroke-linejoin=\"round\" marker-end=\"url(#arr" +
               std::to_string(i % 8) + ")\"/>\n";
    }

    svg += "</svg>\n";
    return svg;
}

void save_svg(const std::string& svg, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw StageError("render", "cannot open " + path + " for writing");
    out << svg;
    out.flush();
    if (!out) throw StageError("render", "short write to " + path);
}

}  // namespace trajattr
