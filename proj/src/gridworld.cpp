#include "trajattr/gridworld.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>
#include <sstream>

#include "trajattr/errors.hpp"

namespace trajattr {

Action action_from_code(int code) {
    if (code < 0 || code > 3)
        throw ValidationError("action code out of range: " + std::to_string(code));
    return static_cast<Action>(code);
}

const char* action_name(Action a) {
    switch (a) {
        case Action::Left: return "left";
        case Action::Up: return "up";
        case Action::Right: return "right";
        case Action::Down: return "down";
    }
    return "?";
}

Cell action_target(Cell from, Action a) {
    switch (a) {
        case Action::Left: return {from.row, from.col - 1};
        case Action::Up: return {from.row - 1, from.col};
        case Action::Right: return {from.row, from.col + 1};
        case Action::Down: return {from.row + 1, from.col};
    }
    return from;
}

namespace {

bool cell_in(const std::set<Cell>& s, Cell c) { return s.count(c) > 0; }

void require_inside(const GridSpec& g, Cell c, const char* what) {
    if (c.row < 0 || c.row >= g.height || c.col < 0 || c.col >= g.width) {
        std::ostringstream os;
        os << what << " cell (" << c.row << "," << c.col << ") outside " << g.height << "x"
           << g.width << " grid";
        throw ValidationError(os.str());
    }
}

std::string cells_to_text(const std::set<Cell>& cells) {
    std::string out;
    for (const Cell& c : cells) {
        if (!out.empty()) out += "; ";
        out += std::to_string(c.row) + "," + std::to_string(c.col);
    }
    return out;
}

Cell parse_cell(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw ValidationError("expected \"row,col\", got: " + text);
    try {
        const int r = std::stoi(text.substr(0, comma));
        const int c = std::stoi(text.substr(comma + 1));
        return {r, c};
    } catch (const std::exception&) {
        throw ValidationError("bad cell coordinates: " + text);
    }
}

std::set<Cell> parse_cells(const std::string& text) {
    std::set<Cell> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto b = item.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = item.find_last_not_of(" \t");
        out.insert(parse_cell(item.substr(b, e - b + 1)));
    }
    return out;
}

}  // namespace

void GridSpec::validate() const {
    if (width < 2 || height < 2) throw ValidationError("grid must be at least 2x2");
    if (goal_cells.empty()) throw ValidationError("grid needs at least one goal cell");
    require_inside(*this, start, "start");
    for (const Cell& c : goal_cells) require_inside(*this, c, "goal");
    for (const Cell& c : lava_cells) require_inside(*this, c, "lava");
    for (const Cell& c : obstacle_cells) require_inside(*this, c, "obstacle");
    for (const Cell& c : goal_cells) {
        if (cell_in(lava_cells, c)) throw ValidationError("goal cell overlaps lava cell");
        if (cell_in(obstacle_cells, c)) throw ValidationError("goal cell overlaps obstacle cell");
    }
    for (const Cell& c : lava_cells)
        if (cell_in(obstacle_cells, c)) throw ValidationError("lava cell overlaps obstacle cell");
    if (cell_in(goal_cells, start) || cell_in(lava_cells, start) || cell_in(obstacle_cells, start))
        throw ValidationError("start cell overlaps a special cell");
}

std::string GridSpec::to_config() const {
    std::ostringstream os;
    os << "width = " << width << "\n";
    os << "height = " << height << "\n";
    os << "start = " << start.row << "," << start.col << "\n";
    os << "goal = " << cells_to_text(goal_cells) << "\n";
    os << "lava = " << cells_to_text(lava_cells) << "\n";
    os << "obstacle = " << cells_to_text(obstacle_cells) << "\n";
    return os.str();
}

GridSpec GridSpec::from_config(const std::string& text) {
    GridSpec g;
    bool saw_width = false, saw_height = false, saw_start = false;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos || line[b] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ValidationError("grid config line without '=': " + line);
        auto trim = [](std::string s) {
            const auto x = s.find_first_not_of(" \t\r");
            if (x == std::string::npos) return std::string();
            const auto y = s.find_last_not_of(" \t\r");
            return s.substr(x, y - x + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "width") {
            g.width = std::stoi(val);
            saw_width = true;
        } else if (key == "height") {
            g.height = std::stoi(val);
            saw_height = true;
        } else if (key == "start") {
            g.start = parse_cell(val);
            saw_start = true;
        } else if (key == "goal") {
            g.goal_cells = parse_cells(val);
        } else if (key == "lava") {
            g.lava_cells = parse_cells(val);
        } else if (key == "obstacle") {
            g.obstacle_cells = parse_cells(val);
        } else {
            throw ValidationError("unknown grid config key: " + key);
        }
    }
    if (!saw_width || !saw_height || !saw_start)
        throw ValidationError("grid config needs width, height and start");
    g.validate();
    return g;
}

GridSpec GridSpec::builtin(const std::string& name) {
    if (name == "gridworld7") {
        GridSpec g;
        g.width = 7;
        g.height = 7;
        g.start = {6, 0};
        // Two wall columns force a 24-step surviving route to the corner goal.
        // Lava interrupts the middle wall (a lethal "shortcut") and seals off a
        // small central pocket holding the second goal, so the pocket is only
        // ever entered by rollouts that begin inside it.
        g.goal_cells = {{0, 6}, {2, 4}};
        g.lava_cells = {{2, 3}, {4, 3}, {1, 4}, {2, 5}};
        g.obstacle_cells = {{1, 1}, {2, 1}, {3, 1}, {4, 1}, {5, 1}, {6, 1},
                            {0, 3}, {1, 3}, {3, 3}, {5, 3},
                            {3, 5}, {4, 5}, {5, 4}};
        g.validate();
        return g;
    }
    if (name == "fourroom11") {
        GridSpec g;
        g.width = 11;
        g.height = 11;
        g.start = {10, 0};
        g.goal_cells = {{0, 10}};
        g.lava_cells = {{3, 1}, {1, 8}, {8, 3}, {7, 7}};
        for (int r = 0; r < 11; ++r)
            if (r != 2 && r != 8) g.obstacle_cells.insert({r, 5});
        for (int c = 0; c < 11; ++c)
            if (c != 2 && c != 8) g.obstacle_cells.insert({5, c});
        g.validate();
        return g;
    }
    throw ValidationError("unknown builtin grid: " + name);
}

Environment::Environment(GridSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    kind_.assign(static_cast<std::size_t>(n_states()), 0);
    for (const Cell& c : spec_.obstacle_cells) kind_[static_cast<std::size_t>(id_of(c))] = 1;
    for (const Cell& c : spec_.goal_cells) kind_[static_cast<std::size_t>(id_of(c))] = 2;
    for (const Cell& c : spec_.lava_cells) kind_[static_cast<std::size_t>(id_of(c))] = 3;
}

int Environment::kind_at(StateId s) const {
    if (s < 0 || s >= n_states())
        throw ValidationError("state index out of range: " + std::to_string(s));
    return kind_[static_cast<std::size_t>(s)];
}

std::vector<Action> Environment::valid_actions(StateId s) const {
    if (is_obstacle(s))
        throw ValidationError("no actions defined inside an obstacle: " + std::to_string(s));
    std::vector<Action> out;
    const Cell from = cell_of(s);
    for (Action a : kAllActions) {
        const Cell t = action_target(from, a);
        if (in_bounds(t) && !is_obstacle(id_of(t))) out.push_back(a);
    }
    return out;
}

StepOutcome Environment::step(StateId s, Action a) const {
    if (is_terminal(s))
        throw ValidationError("cannot step from a terminal state: " + std::to_string(s));
    if (is_obstacle(s))
        throw ValidationError("cannot step from an obstacle cell: " + std::to_string(s));
    const Cell from = cell_of(s);
    const Cell t = action_target(from, a);
    StateId next = s;
    if (in_bounds(t) && !is_obstacle(id_of(t))) next = id_of(t);
    StepOutcome out;
    out.next_state = next;
    out.reward = is_goal(next) ? 1.0 : (is_lava(next) ? -1.0 : 0.0);
    out.done = is_terminal(next);
    return out;
}

std::optional<int> Environment::shortest_distance(StateId a, StateId b) const {
    if (is_obstacle(a) || is_obstacle(b))
        throw ValidationError("shortest_distance endpoints must be non-obstacle cells");
    if (a == b) return 0;
    const Cell goal = cell_of(b);
    auto manhattan = [&](StateId s) {
        const Cell c = cell_of(s);
        return std::abs(c.row - goal.row) + std::abs(c.col - goal.col);
    };
    std::vector<int> g(static_cast<std::size_t>(n_states()), -1);
    using Node = std::pair<int, StateId>;  // (f, state); state breaks f ties
    std::priority_queue<Node, std::vector<Node>, std::greater<Node>> open;
    g[static_cast<std::size_t>(a)] = 0;
    open.emplace(manhattan(a), a);
    while (!open.empty()) {
        const auto [f, s] = open.top();
        open.pop();
        const int gs = g[static_cast<std::size_t>(s)];
        if (f > gs + manhattan(s)) continue;  // stale entry
        if (s == b) return gs;
        const Cell from = cell_of(s);
        for (Action act : kAllActions) {
            const Cell t = action_target(from, act);
            if (!in_bounds(t)) continue;
            const StateId ts = id_of(t);
            if (is_obstacle(ts)) continue;
            const int cand = gs + 1;
            int& gt = g[static_cast<std::size_t>(ts)];
            if (gt < 0 || cand < gt) {
                gt = cand;
                open.emplace(cand + manhattan(ts), ts);
            }
        }
    }
    return std::nullopt;
}

std::vector<StateId> Environment::reachable_states() const {
    std::vector<char> seen(static_cast<std::size_t>(n_states()), 0);
    std::queue<StateId> q;
    seen[static_cast<std::size_t>(start_state())] = 1;
    q.push(start_state());
    while (!q.empty()) {
        const StateId s = q.front();
        q.pop();
        if (is_terminal(s)) continue;  // episodes end here, nothing beyond is visited
        for (Action a : valid_actions(s)) {
            const StateId t = step(s, a).next_state;
            if (!seen[static_cast<std::size_t>(t)]) {
                seen[static_cast<std::size_t>(t)] = 1;
                q.push(t);
            }
        }
    }
    std::vector<StateId> out;
    for (StateId s = 0; s < n_states(); ++s)
        if (seen[static_cast<std::size_t>(s)]) out.push_back(s);
    return out;
}

}  // namespace trajattr
