#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "trajattr/gridworld.hpp"
#include "trajattr/rng.hpp"
#include "trajattr/trajstore.hpp"

namespace trajattr {

struct TrainConfig {
    int episodes = 500;
    double alpha = 0.1;
    double gamma = 0.95;
    int eval_epochs = 15;  // planning updates per real step
    double epsilon = 0.1;
    std::uint64_t seed = 0;
    int max_episode_len = 10000;
    // Start each online episode at a uniformly drawn free non-terminal cell
    // instead of the grid's start state. Off-path regions never visited from
    // the start keep their random initialization forever; exploring starts
    // lets a data-generation agent learn sensible behavior everywhere.
    bool exploring_starts = false;

    void validate() const;
    std::string hash() const;
};

class QTablePolicy {
public:
    QTablePolicy() = default;
    // Uniform [0,1) entries for every state, drawn state-major action-minor,
    // so the layout of the table never depends on visitation order. Readouts
    // (max_q, greedy) are restricted to the grid's valid actions: invalid
    // entries are never updated by training, and letting their leftover
    // initialization values into a max would corrupt bootstrap targets.
    QTablePolicy(const Environment& env, double alpha, double gamma, rng::Engine& eng);

    int n_states() const { return static_cast<int>(q_.size()); }
    double q(StateId s, Action a) const { return q_[check(s)][static_cast<std::size_t>(action_code(a))]; }
    double& q(StateId s, Action a) { return q_[check(s)][static_cast<std::size_t>(action_code(a))]; }
    // Max over the valid actions at s (all four if the mask is empty).
    double max_q(StateId s) const;
    // Max over an explicit action bitmask; 0 when the mask is empty.
    double max_q_over(StateId s, std::uint8_t mask) const;
    // Argmax over the valid actions at s, ties resolved to the lowest code.
    Action greedy(StateId s) const;
    // Argmax over an explicit action set (for restricted sampling).
    Action greedy(StateId s, const std::vector<Action>& actions) const;
    bool is_valid(StateId s, Action a) const {
        return (mask_[check(s)] >> action_code(a)) & 1;
    }

    double alpha = 0.1;
    double gamma = 0.95;

private:
    std::size_t check(StateId s) const;
    std::vector<std::array<double, 4>> q_;
    std::vector<std::uint8_t> mask_;  // bit a set ⇔ action a valid at the state
};

// Deterministic one-step memory plus visitation multisets for planning.
class EnvModel {
public:
    EnvModel() = default;
    explicit EnvModel(int n_states);

    void record(StateId s, Action a, double r, StateId s_next);
    bool known(StateId s, Action a) const;
    // (reward, next state); throws if the pair was never observed.
    std::pair<double, StateId> lookup(StateId s, Action a) const;

    const std::vector<StateId>& state_memory() const { return state_memory_; }
    const std::vector<int>& actions_at(StateId s) const;
    std::size_t n_entries() const { return n_entries_; }
    // Bit a set ⇔ (s, a) has a recorded outcome.
    std::uint8_t known_mask(StateId s) const;

private:
    struct Slot {
        double r = 0.0;
        StateId s_next = 0;
        bool set = false;
    };
    std::vector<std::array<Slot, 4>> slots_;
    std::vector<StateId> state_memory_;           // one entry per recorded step
    std::vector<std::vector<int>> action_memory_; // action codes taken per state
    std::size_t n_entries_ = 0;
};

Action sample_action(const QTablePolicy& policy, StateId s, const std::vector<Action>& valid,
                     double epsilon, rng::Engine& eng);

struct TrainResult {
    QTablePolicy policy;
    EnvModel model;
    std::vector<double> episode_rewards;
    std::vector<int> episode_lengths;
};

TrainResult train_online(const Environment& env, const TrainConfig& cfg);

// Model building and planning sweeps over the dataset only; the live
// environment is never stepped. cfg.episodes counts sweeps.
QTablePolicy train_offline(const Environment& env, const TrajectoryDataset& dataset,
                           const TrainConfig& cfg);

Trajectory perform(const Environment& env, const QTablePolicy& policy, int max_traj_len,
                   double epsilon, rng::Engine& eng);

// Same rollout but from an arbitrary free non-terminal state.
Trajectory perform_from(const Environment& env, const QTablePolicy& policy, StateId start,
                        int max_traj_len, double epsilon, rng::Engine& eng);

// Initial State Value Estimate: max over the four actions at s0.
double isv(const QTablePolicy& policy, StateId s0);

void save_policy_csv(const QTablePolicy& policy, const std::string& path);
QTablePolicy load_policy_csv(const std::string& path, const Environment& env, double alpha,
                             double gamma);

}  // namespace trajattr
