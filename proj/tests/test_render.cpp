#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "trajattr/errors.hpp"
#include "trajattr/render.hpp"

using namespace trajattr;

namespace {

Trajectory cell_path(const Environment& env, const std::vector<Cell>& cells) {
    Trajectory t;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
        Transition tr;
        tr.s = env.id_of(cells[i]);
        tr.a = Action::Right;
        tr.r = 0.0;
        tr.s_next = env.id_of(cells[i + 1]);
        t.steps.push_back(tr);
    }
    Transition marker;
    marker.s = env.id_of(cells.back());
    marker.a = Action::Up;
    marker.r = 0.0;
    marker.s_next = marker.s;
    t.steps.push_back(marker);
    return t;
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t at = hay.find(needle); at != std::string::npos;
         at = hay.find(needle, at + needle.size()))
        ++n;
    return n;
}

GridSpec open_grid(int w, int h) {
    GridSpec g;
    g.width = w;
    g.height = h;
    g.start = {h - 1, 0};
    g.goal_cells = {{0, w - 1}};
    return g;
}

}  // namespace

TEST_CASE("bare grid render colors every cell by kind") {
    const Environment env(GridSpec::builtin("gridworld7"));
    const std::string svg = render_grid(env, {});

    CHECK(count_of(svg, "<rect ") == 49);  // one per cell, no highlight
    CHECK(count_of(svg, "<polyline") == 0);
    // spot-check one cell of each kind by its pixel position (cell_px = 40)
    CHECK(svg.find("x=\"40\" y=\"40\" width=\"40\" height=\"40\" fill=\"#3b3b3b\"") !=
          std::string::npos);  // obstacle (1,1)
    CHECK(svg.find("x=\"240\" y=\"0\" width=\"40\" height=\"40\" fill=\"#69b34c\"") !=
          std::string::npos);  // goal (0,6)
    CHECK(svg.find("x=\"120\" y=\"80\" width=\"40\" height=\"40\" fill=\"#e2543e\"") !=
          std::string::npos);  // lava (2,3)
    CHECK(svg.find("x=\"0\" y=\"0\" width=\"40\" height=\"40\" fill=\"#ffffff\"") !=
          std::string::npos);  // free corner (0,0)
}

TEST_CASE("trajectories draw as colored polylines with a query highlight") {
    const Environment env(open_grid(3, 3));
    const std::vector<Trajectory> trajs{
        cell_path(env, {{2, 0}, {1, 0}, {0, 0}, {0, 1}, {0, 2}}),
        cell_path(env, {{2, 0}, {2, 1}, {2, 2}, {1, 2}, {0, 2}}),
        cell_path(env, {{2, 0}, {1, 0}, {1, 1}, {1, 2}, {0, 2}}),
        cell_path(env, {{2, 0}, {2, 1}, {1, 1}, {0, 1}, {0, 2}}),
    };
    RenderOptions opts;
    opts.query_state = env.id_of({1, 1});
    const std::string svg = render_grid(env, trajs, opts);

    CHECK(count_of(svg, "<polyline") == 4);
    CHECK(count_of(svg, "<circle") == 4);
    CHECK(count_of(svg, "fill=\"#ffe066\"") == 1);
    CHECK(count_of(svg, "<rect ") == 10);  // 9 cells + highlight
    // distinct palette entries and arrowheads per trajectory
    for (int i = 0; i < 4; ++i)
        CHECK(svg.find("marker-end=\"url(#arr" + std::to_string(i) + ")\"") != std::string::npos);
    CHECK(svg.find("stroke=\"#1f77b4\"") != std::string::npos);
    CHECK(svg.find("stroke=\"#d62728\"") != std::string::npos);
}

TEST_CASE("render output is byte-stable across calls") {
    const Environment env(GridSpec::builtin("gridworld7"));
    const Trajectory t = cell_path(env, {{6, 0}, {5, 0}, {4, 0}});
    RenderOptions opts;
    opts.query_state = env.start_state();
    const std::string a = render_grid(env, {t, t}, opts);
    const std::string b = render_grid(env, {t, t}, opts);
    CHECK(a == b);
}

TEST_CASE("render rejects bad geometry") {
    const Environment env(GridSpec::builtin("gridworld7"));

    Trajectory off;
    {
        Transition tr;
        tr.s = 0;
        tr.a = Action::Left;
        tr.r = 0.0;
        tr.s_next = env.n_states() + 3;
        off.steps.push_back(tr);
        Transition marker = tr;
        marker.s = tr.s_next;
        off.steps.push_back(marker);
    }
    CHECK_THROWS_WITH_AS(render_grid(env, {off}), doctest::Contains("leaves the grid"),
                         ValidationError);

    const Trajectory through = cell_path(env, {{0, 0}, {1, 1}});  // obstacle cell
    CHECK_THROWS_WITH_AS(render_grid(env, {through}), doctest::Contains("obstacle"),
                         ValidationError);

    RenderOptions tiny;
    tiny.cell_px = 4;
    CHECK_THROWS_AS(render_grid(env, {}, tiny), ValidationError);

    RenderOptions bad_query;
    bad_query.query_state = -1;
    CHECK_THROWS_AS(render_grid(env, {}, bad_query), ValidationError);
}

TEST_CASE("marker-only trajectory draws its start dot without a line") {
    const Environment env(open_grid(3, 3));
    const std::string svg = render_grid(env, {cell_path(env, {{2, 2}})});
    CHECK(count_of(svg, "<circle") == 1);
    CHECK(count_of(svg, "<polyline") == 0);
}

TEST_CASE("svg file save writes the exact bytes") {
    const Environment env(open_grid(2, 2));
    const std::string svg = render_grid(env, {});
    const std::string path = "render_probe.svg";
    save_svg(svg, path);
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == svg);
    std::remove(path.c_str());

    CHECK_THROWS_AS(save_svg(svg, "no_such_dir/x.svg"), StageError);
}
