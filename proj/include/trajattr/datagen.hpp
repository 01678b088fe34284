#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajattr/dynaq.hpp"
#include "trajattr/gridworld.hpp"
#include "trajattr/trajstore.hpp"

namespace trajattr {

/// Where each rollout begins. The paper's datasets contain trajectories that
/// start away from the grid start (mid-grid journeys), so generation can seed
/// rollouts anywhere, including cells the grid start cannot reach alive.
enum class StartMode {
    Fixed,    // always the grid start
    Uniform,  // uniform over free non-terminal cells
    Mixed,    // grid start with probability fixed_start_fraction, else uniform
};

StartMode start_mode_from_string(const std::string& name);
std::string to_string(StartMode mode);

struct GenConfig {
    // Outcome quotas. Both -1 means "take rollouts as they come". Setting
    // either requires both, and they must sum to the requested n_traj.
    int n_positive = -1;  // trajectories that must end at a goal
    int n_negative = -1;  // trajectories that must end in lava

    int trajectories_per_agent = 1;  // rollout batch size per trained agent

    StartMode start_mode = StartMode::Mixed;
    double fixed_start_fraction = 0.5;  // Mixed only

    // Start-coverage boost: with probability boost_fraction a positive (or
    // unconstrained) slot begins at a uniformly drawn boost state instead of
    // following start_mode. Uniform draws rarely land in small pockets of the
    // grid; listing those cells here guarantees the dataset represents them.
    // Negative slots ignore the boost so forced failures stay organic.
    std::vector<StateId> boost_states;
    double boost_fraction = 0.0;

    double rollout_epsilon = 0.1;
    int max_traj_len = 400;

    // Forced negatives come from agents stopped early in training and rolled
    // out with a boosted epsilon, so failures look like organic exploration
    // accidents rather than scripted walks into lava.
    int negative_episodes = 30;
    double negative_epsilon = 0.5;

    // Collapse the negative slots onto this many rollout streams. Slots that
    // share a stream replay the same draws and therefore emit identical
    // trajectories, the way repeated runs of one fixed policy do in a
    // deterministic grid. 0 keeps one stream per slot.
    int negative_groups = 0;

    int retry_budget = 500;  // rollout attempts per quota-constrained slot

    TrainConfig agent;  // template for data-collection agents; seed is derived

    void validate() const;
    std::string hash() const;
};

/// Train fresh Dyna-Q agents and collect n_traj rollouts. With quotas set the
/// dataset lists the positives first, then the negatives. Deterministic in
/// (env, n_traj, cfg, seed).
TrajectoryDataset generate_dataset(const Environment& env, const std::string& env_name,
                                   int n_traj, const GenConfig& cfg, std::uint64_t seed);

}  // namespace trajattr
