#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trajattr/gridworld.hpp"
#include "trajattr/trajstore.hpp"

namespace trajattr {

struct RenderOptions {
    std::optional<StateId> query_state;  // cell to highlight, if any
    int cell_px = 40;                    // cell edge in pixels, minimum 8
};

/// SVG document for the grid with trajectories overlaid as arrow polylines.
/// Obstacles dark, lava orange-red, goals green, free cells white; the query
/// state is filled yellow underneath the lines. Trajectory i takes palette
/// color i mod 8 and a small deterministic lane offset so coincident paths
/// stay distinguishable. Same inputs, same bytes.
/// Throws ValidationError when a trajectory leaves the grid or crosses an
/// obstacle, when the query state is out of range, or when cell_px < 8.
std::string render_grid(const Environment& env, const std::vector<Trajectory>& trajectories,
                        const RenderOptions& opts = {});

/// Throws StageError("render", ...) when the file cannot be written.
void save_svg(const std::string& svg, const std::string& path);

}  // namespace trajattr
