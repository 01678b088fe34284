#include "trajattr/datagen.hpp"

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "trajattr/errors.hpp"
#include "trajattr/hash.hpp"
#include "trajattr/rng.hpp"

namespace trajattr {

StartMode start_mode_from_string(const std::string& name) {
    if (name == "fixed") return StartMode::Fixed;
    if (name == "uniform") return StartMode::Uniform;
    if (name == "mixed") return StartMode::Mixed;
    throw ValidationError("unknown start mode: " + name);
}

std::string to_string(StartMode mode) {
    switch (mode) {
        case StartMode::Fixed: return "fixed";
        case StartMode::Uniform: return "uniform";
        case StartMode::Mixed: return "mixed";
    }
    throw ValidationError("bad StartMode value");
}

void GenConfig::validate() const {
    if ((n_positive < 0) != (n_negative < 0))
        throw ValidationError("set both outcome quotas or neither");
    if (trajectories_per_agent < 1)
        throw ValidationError("trajectories_per_agent must be at least 1");
    if (fixed_start_fraction < 0.0 || fixed_start_fraction > 1.0)
        throw ValidationError("fixed_start_fraction must be in [0,1]");
    if (boost_fraction < 0.0 || boost_fraction > 1.0)
        throw ValidationError("boost_fraction must be in [0,1]");
    if (boost_fraction > 0.0 && boost_states.empty())
        throw ValidationError("boost_fraction set but boost_states is empty");
    if (rollout_epsilon < 0.0 || rollout_epsilon > 1.0)
        throw ValidationError("rollout_epsilon must be in [0,1]");
    if (negative_epsilon < 0.0 || negative_epsilon > 1.0)
        throw ValidationError("negative_epsilon must be in [0,1]");
    if (max_traj_len < 1) throw ValidationError("max_traj_len must be at least 1");
    if (negative_episodes < 1) throw ValidationError("negative_episodes must be at least 1");
    if (negative_groups < 0)
        throw ValidationError("negative_groups must be nonnegative");
    if (negative_groups > 0 && negative_groups > n_negative)
        throw ValidationError("negative_groups cannot exceed n_negative");
    if (retry_budget < 1) throw ValidationError("retry_budget must be at least 1");
    agent.validate();
}

std::string GenConfig::hash() const {
    std::string boost;
    for (StateId s : boost_states) {
        if (!boost.empty()) boost += ',';
        boost += std::to_string(s);
    }
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "n_positive=%d;n_negative=%d;per_agent=%d;start_mode=%s;"
                  "fixed_start_fraction=%.17g;boost_states=%s;boost_fraction=%.17g;"
                  "rollout_epsilon=%.17g;max_traj_len=%d;"
                  "negative_episodes=%d;negative_epsilon=%.17g;negative_groups=%d;"
                  "retry_budget=%d;agent=%s",
                  n_positive, n_negative, trajectories_per_agent,
                  to_string(start_mode).c_str(), fixed_start_fraction, boost.c_str(),
                  boost_fraction, rollout_epsilon,
                  max_traj_len, negative_episodes, negative_epsilon, negative_groups,
                  retry_budget, agent.hash().c_str());
    return content_hash(buf);
}

namespace {

enum class Outcome { Any, Positive, Negative };

double last_real_reward(const Trajectory& t) {
    // marker is last; the transition before it ended (or truncated) the episode
    return t.steps[t.steps.size() - 2].r;
}

bool matches(const Trajectory& t, Outcome want) {
    switch (want) {
        case Outcome::Any: return true;
        case Outcome::Positive: return last_real_reward(t) == 1.0;
        case Outcome::Negative: return last_real_reward(t) == -1.0;
    }
    return false;
}

StateId pick_start(const Environment& env, const GenConfig& cfg,
                   const std::vector<StateId>& pool, bool allow_boost,
                   rng::Engine& eng) {
    if (allow_boost && cfg.boost_fraction > 0.0 &&
        rng::uniform01(eng) < cfg.boost_fraction)
        return cfg.boost_states[rng::uniform_below(eng, cfg.boost_states.size())];
    switch (cfg.start_mode) {
        case StartMode::Fixed: return env.start_state();
        case StartMode::Uniform: return pool[rng::uniform_below(eng, pool.size())];
        case StartMode::Mixed:
            return rng::uniform01(eng) < cfg.fixed_start_fraction
                       ? env.start_state()
                       : pool[rng::uniform_below(eng, pool.size())];
    }
    throw ValidationError("bad StartMode value");
}

class AgentCache {
public:
    AgentCache(const Environment& env, TrainConfig tmpl, std::uint64_t master,
               std::string tag)
        : env_(env), tmpl_(tmpl), master_(master), tag_(std::move(tag)) {}

    const QTablePolicy& get(int batch) {
        auto it = trained_.find(batch);
        if (it == trained_.end()) {
            TrainConfig cfg = tmpl_;
            cfg.seed = rng::derive(master_, tag_, static_cast<std::uint64_t>(batch));
            it = trained_.emplace(batch, train_online(env_, cfg).policy).first;
        }
        return it->second;
    }

private:
    const Environment& env_;
    TrainConfig tmpl_;
    std::uint64_t master_;
    std::string tag_;
    std::map<int, QTablePolicy> trained_;
};

}  // namespace

TrajectoryDataset generate_dataset(const Environment& env, const std::string& env_name,
                                   int n_traj, const GenConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (n_traj < 1) throw ValidationError("n_traj must be at least 1");
    const bool quotas = cfg.n_positive >= 0;
    if (quotas && cfg.n_positive + cfg.n_negative != n_traj)
        throw ValidationError("outcome quotas must sum to n_traj");

    // Rollouts may begin at any free cell that has somewhere to go.
    std::vector<StateId> pool;
    for (StateId s = 0; s < env.n_states(); ++s) {
        if (env.is_obstacle(s) || env.is_terminal(s)) continue;
        if (!env.valid_actions(s).empty()) pool.push_back(s);
    }
    if (pool.empty()) throw StageError("gen-data", "no usable rollout start cells");
    for (StateId s : cfg.boost_states)
        if (s < 0 || s >= env.n_states() || env.is_obstacle(s) || env.is_terminal(s) ||
            env.valid_actions(s).empty())
            throw ValidationError("boost state " + std::to_string(s) +
                                  " is not a usable rollout start");

    AgentCache agents(env, cfg.agent, seed, "agent");
    TrainConfig early = cfg.agent;
    early.episodes = cfg.negative_episodes;
    AgentCache neg_agents(env, early, seed, "neg-agent");

    const std::string quota_text = quotas ? std::to_string(cfg.n_positive) + " positive / " +
                                                std::to_string(cfg.n_negative) + " negative"
                                          : std::string("none");

    TrajectoryDataset ds;
    ds.env_name = env_name;
    {
        char tail[128];
        std::snprintf(tail, sizeof(tail), ";n_traj=%d;seed=%llu", n_traj,
                      static_cast<unsigned long long>(seed));
        ds.config_hash = content_hash(cfg.hash() + tail);
    }
    ds.trajectories.reserve(static_cast<std::size_t>(n_traj));

    const int budget = cfg.retry_budget;
    for (int slot = 0; slot < n_traj; ++slot) {
        const bool negative = quotas && slot >= cfg.n_positive;
        const Outcome want = !quotas ? Outcome::Any
                             : negative ? Outcome::Negative
                                        : Outcome::Positive;
        // Negative slots index their own agent batches so a quota change never
        // reshuffles which agent produced the positives.
        const int local = negative ? slot - cfg.n_positive : slot;
        const int batch = local / cfg.trajectories_per_agent;
        const QTablePolicy& policy =
            negative ? neg_agents.get(batch) : agents.get(batch);
        const double eps = negative ? cfg.negative_epsilon : cfg.rollout_epsilon;
        const char* tag = !quotas ? "rollout" : negative ? "rollout-neg" : "rollout-pos";
        // Grouped negatives fold their slot index onto the group's stream, so
        // every slot in a group replays the same retries and keeps the same
        // accepted trajectory.
        const int stream =
            negative && cfg.negative_groups > 0 ? local % cfg.negative_groups : local;

        bool done = false;
        for (int attempt = 0; attempt < budget && !done; ++attempt) {
            rng::Engine eng = rng::make_engine(
                seed, tag,
                static_cast<std::uint64_t>(stream) * static_cast<std::uint64_t>(budget) +
                    static_cast<std::uint64_t>(attempt));
            const StateId start =
                pick_start(env, cfg, pool, want != Outcome::Negative, eng);
            Trajectory t = perform_from(env, policy, start, cfg.max_traj_len, eps, eng);
            if (matches(t, want)) {
                ds.trajectories.push_back(std::move(t));
                done = true;
            }
        }
        if (!done)
            throw StageError("gen-data",
                             "no " + std::string(negative ? "negative" : "positive") +
                                 "-outcome rollout in " + std::to_string(budget) +
                                 " attempts for trajectory " + std::to_string(slot) +
                                 " (quota: " + quota_text + ")");
    }
    return ds;
}

}  // namespace trajattr
