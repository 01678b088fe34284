#pragma once

#include <string>
#include <vector>

#include "trajattr/gridworld.hpp"

namespace trajattr {

struct Transition {
    StateId s = 0;
    Action a = Action::Left;
    double r = 0.0;
    StateId s_next = 0;
    bool operator==(const Transition&) const = default;
};

// A rollout. The last entry is always the end marker (s, random action, 0, s)
// emitted after the episode finished or was truncated.
struct Trajectory {
    std::vector<Transition> steps;
    bool operator==(const Trajectory&) const = default;

    // Real transitions, marker excluded.
    std::size_t real_steps() const { return steps.empty() ? 0 : steps.size() - 1; }
    StateId final_state() const { return steps.back().s_next; }

    // s0, s1, ..., s_final in visit order (duplicates kept).
    std::vector<StateId> visited() const;
};

struct TrajectoryDataset {
    std::vector<Trajectory> trajectories;
    std::string env_name;
    std::string config_hash;  // hash of the generating TrainConfig
    bool operator==(const TrajectoryDataset&) const = default;
};

// [obs, act, rew] per step; vocab = n_states + 4 actions + 3 reward symbols.
struct TokenSequence {
    std::vector<int> tokens;
    int vocab = 0;
};

inline int vocab_size(const Environment& env) { return env.n_states() + 4 + 3; }

TokenSequence tokenize(const Trajectory& traj, const Environment& env);
Trajectory detokenize(const TokenSequence& seq, const Environment& env);

void save_dataset(const TrajectoryDataset& ds, const std::string& path);

// Header env name must resolve to a builtin grid.
TrajectoryDataset load_dataset(const std::string& path);
// Caller supplies the environment; header env name must equal expected_name.
TrajectoryDataset load_dataset(const std::string& path, const Environment& env,
                               const std::string& expected_name);

// Shared validation: marker shape, transition dynamics, state ranges.
void validate_dataset(const TrajectoryDataset& ds, const Environment& env);

}  // namespace trajattr
