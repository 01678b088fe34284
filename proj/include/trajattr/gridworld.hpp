#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace trajattr {

struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell&) const = default;
};

// Canonical state index: row * width + col.
using StateId = int;

enum class Action : int { Left = 0, Up = 1, Right = 2, Down = 3 };

inline constexpr std::array<Action, 4> kAllActions{Action::Left, Action::Up, Action::Right,
                                                   Action::Down};

constexpr int action_code(Action a) { return static_cast<int>(a); }
Action action_from_code(int code);
const char* action_name(Action a);

struct StepOutcome {
    StateId next_state = 0;
    double reward = 0.0;  // in {-1, 0, +1}
    bool done = false;
};

struct GridSpec {
    int width = 0;
    int height = 0;
    Cell start{};
    std::set<Cell> goal_cells;
    std::set<Cell> lava_cells;
    std::set<Cell> obstacle_cells;

    // Throws ValidationError on bounds violations, overlaps, or missing goal.
    void validate() const;

    std::string to_config() const;
    static GridSpec from_config(const std::string& text);

    // Named layouts: "gridworld7" and "fourroom11".
    static GridSpec builtin(const std::string& name);
};

class Environment {
public:
    explicit Environment(GridSpec spec);

    const GridSpec& spec() const { return spec_; }
    int width() const { return spec_.width; }
    int height() const { return spec_.height; }
    int n_states() const { return spec_.width * spec_.height; }

    StateId id_of(Cell c) const { return c.row * spec_.width + c.col; }
    Cell cell_of(StateId s) const { return {s / spec_.width, s % spec_.width}; }
    bool in_bounds(Cell c) const {
        return c.row >= 0 && c.row < spec_.height && c.col >= 0 && c.col < spec_.width;
    }

    bool is_obstacle(StateId s) const { return kind_at(s) == 1; }
    bool is_goal(StateId s) const { return kind_at(s) == 2; }
    bool is_lava(StateId s) const { return kind_at(s) == 3; }
    bool is_terminal(StateId s) const { return kind_at(s) >= 2; }

    StateId start_state() const { return id_of(spec_.start); }

    // Actions whose target cell is in bounds and not an obstacle, ascending by code.
    std::vector<Action> valid_actions(StateId s) const;

    // Deterministic move. Invalid moves (off-grid or into an obstacle) leave the
    // state unchanged with reward 0, so replayed offline data never faults.
    // Stepping from a terminal state is an error: episodes must reset.
    StepOutcome step(StateId s, Action a) const;

    // A* with the Manhattan heuristic over non-obstacle cells. nullopt when
    // no path exists; never encoded as a large number.
    std::optional<int> shortest_distance(StateId a, StateId b) const;

    // Every state reachable from start, terminal states absorbing. Sorted.
    std::vector<StateId> reachable_states() const;

private:
    int kind_at(StateId s) const;

    GridSpec spec_;
    std::vector<std::uint8_t> kind_;  // 0 free, 1 obstacle, 2 goal, 3 lava
};

// Target cell of an action, before bounds/obstacle checks.
Cell action_target(Cell from, Action a);

}  // namespace trajattr
