#include "trajattr/dynaq.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "trajattr/errors.hpp"
#include "trajattr/hash.hpp"

namespace trajattr {

void TrainConfig::validate() const {
    if (episodes < 1) throw ValidationError("episodes must be at least 1");
    if (!(alpha > 0.0) || alpha > 1.0) throw ValidationError("alpha must be in (0,1]");
    if (!(gamma > 0.0) || !(gamma < 1.0)) throw ValidationError("gamma must be in (0,1)");
    if (eval_epochs < 0) throw ValidationError("eval_epochs must be non-negative");
    if (epsilon < 0.0 || epsilon > 1.0) throw ValidationError("epsilon must be in [0,1]");
    if (max_episode_len < 1) throw ValidationError("max_episode_len must be at least 1");
}

std::string TrainConfig::hash() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "episodes=%d;alpha=%.17g;gamma=%.17g;eval_epochs=%d;"
                  "epsilon=%.17g;seed=%llu;max_episode_len=%d;exploring_starts=%d",
                  episodes, alpha, gamma, eval_epochs, epsilon,
                  static_cast<unsigned long long>(seed), max_episode_len,
                  exploring_starts ? 1 : 0);
    return content_hash(buf);
}

QTablePolicy::QTablePolicy(const Environment& env, double alpha_, double gamma_,
                           rng::Engine& eng) {
    alpha = alpha_;
    gamma = gamma_;
    const int S = env.n_states();
    q_.resize(static_cast<std::size_t>(S));
    for (auto& row : q_)
        for (double& v : row) v = rng::uniform01(eng);
    mask_.assign(static_cast<std::size_t>(S), 0);
    for (StateId s = 0; s < S; ++s) {
        if (env.is_obstacle(s)) continue;
        for (Action a : env.valid_actions(s))
            mask_[static_cast<std::size_t>(s)] |= static_cast<std::uint8_t>(1 << action_code(a));
    }
}

std::size_t QTablePolicy::check(StateId s) const {
    if (s < 0 || s >= n_states())
        throw ValidationError("Q-table state out of range: " + std::to_string(s));
    return static_cast<std::size_t>(s);
}

double QTablePolicy::max_q(StateId s) const {
    const auto& row = q_[check(s)];
    const std::uint8_t m = mask_[static_cast<std::size_t>(s)];
    if (m == 0) {  // enclosed or obstacle cell, nothing to restrict to
        return std::max(std::max(row[0], row[1]), std::max(row[2], row[3]));
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < 4; ++a)
        if ((m >> a) & 1) best = std::max(best, row[static_cast<std::size_t>(a)]);
    return best;
}

double QTablePolicy::max_q_over(StateId s, std::uint8_t mask) const {
    const auto& row = q_[check(s)];
    double best = 0.0;
    bool any = false;
    for (int a = 0; a < 4; ++a) {
        if (!((mask >> a) & 1)) continue;
        const double v = row[static_cast<std::size_t>(a)];
        if (!any || v > best) best = v;
        any = true;
    }
    return best;
}

Action QTablePolicy::greedy(StateId s) const {
    const std::uint8_t m = mask_[check(s)];
    if (m == 0) throw ValidationError("greedy readout at a state with no valid actions");
    int best = -1;
    double best_q = 0.0;
    for (int a = 0; a < 4; ++a) {
        if (!((m >> a) & 1)) continue;
        const double v = q_[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
        if (best < 0 || v > best_q) {  // strict: ties keep the lowest code
            best_q = v;
            best = a;
        }
    }
    return action_from_code(best);
}

Action QTablePolicy::greedy(StateId s, const std::vector<Action>& actions) const {
    if (actions.empty()) throw ValidationError("greedy readout needs at least one action");
    Action best = actions[0];
    double best_q = q(s, best);
    for (std::size_t i = 1; i < actions.size(); ++i) {
        const double v = q(s, actions[i]);
        if (v > best_q) {
            best_q = v;
            best = actions[i];
        }
    }
    return best;
}

EnvModel::EnvModel(int n_states)
    : slots_(static_cast<std::size_t>(n_states)),
      action_memory_(static_cast<std::size_t>(n_states)) {}

void EnvModel::record(StateId s, Action a, double r, StateId s_next) {
    auto& slot = slots_.at(static_cast<std::size_t>(s))[static_cast<std::size_t>(action_code(a))];
    if (!slot.set) ++n_entries_;
    slot = {r, s_next, true};
    state_memory_.push_back(s);
    action_memory_[static_cast<std::size_t>(s)].push_back(action_code(a));
}

bool EnvModel::known(StateId s, Action a) const {
    return slots_.at(static_cast<std::size_t>(s))[static_cast<std::size_t>(action_code(a))].set;
}

std::pair<double, StateId> EnvModel::lookup(StateId s, Action a) const {
    const auto& slot = slots_.at(static_cast<std::size_t>(s))[static_cast<std::size_t>(action_code(a))];
    if (!slot.set)
        throw StageError("planning", "model queried for an unobserved state-action pair");
    return {slot.r, slot.s_next};
}

const std::vector<int>& EnvModel::actions_at(StateId s) const {
    return action_memory_.at(static_cast<std::size_t>(s));
}

std::uint8_t EnvModel::known_mask(StateId s) const {
    const auto& row = slots_.at(static_cast<std::size_t>(s));
    std::uint8_t m = 0;
    for (int a = 0; a < 4; ++a)
        if (row[static_cast<std::size_t>(a)].set) m |= static_cast<std::uint8_t>(1 << a);
    return m;
}

Action sample_action(const QTablePolicy& policy, StateId s, const std::vector<Action>& valid,
                     double epsilon, rng::Engine& eng) {
    if (valid.empty()) throw ValidationError("sample_action needs a nonempty action set");
    if (rng::uniform01(eng) < epsilon)
        return valid[rng::uniform_below(eng, valid.size())];
    return policy.greedy(s, valid);
}

namespace {

// Terminal entry ⇔ nonzero reward in this reward scheme, so bootstrapping can
// be masked without touching the environment. The max is taken over actions
// the model has outcomes for: anything else would read initialization noise.
inline void q_update(QTablePolicy& p, const EnvModel& model, StateId s, int a_code, double r,
                     StateId s_next) {
    const double boot =
        (r != 0.0) ? 0.0 : p.gamma * p.max_q_over(s_next, model.known_mask(s_next));
    double& q = p.q(s, action_from_code(a_code));
    q += p.alpha * (r + boot - q);
}

inline void planning_updates(QTablePolicy& p, const EnvModel& model, int count,
                             rng::Engine& eng) {
    const auto& states = model.state_memory();
    for (int k = 0; k < count; ++k) {
        const StateId ms = states[rng::uniform_below(eng, states.size())];
        const auto& acts = model.actions_at(ms);
        const int ma = acts[rng::uniform_below(eng, acts.size())];
        const auto [mr, mnext] = model.lookup(ms, action_from_code(ma));
        q_update(p, model, ms, ma, mr, mnext);
    }
}

}  // namespace

TrainResult train_online(const Environment& env, const TrainConfig& cfg) {
    cfg.validate();
    rng::Engine eng = rng::make_engine(cfg.seed, "dynaq-online", 0);
    TrainResult out;
    out.policy = QTablePolicy(env, cfg.alpha, cfg.gamma, eng);
    out.model = EnvModel(env.n_states());
    std::vector<StateId> starts;
    if (cfg.exploring_starts) {
        for (StateId s = 0; s < env.n_states(); ++s) {
            if (env.is_obstacle(s) || env.is_terminal(s)) continue;
            if (!env.valid_actions(s).empty()) starts.push_back(s);
        }
        if (starts.empty()) throw ValidationError("no usable episode start cells");
    }
    for (int ep = 0; ep < cfg.episodes; ++ep) {
        StateId s = cfg.exploring_starts
                        ? starts[rng::uniform_below(eng, starts.size())]
                        : env.start_state();
        double total = 0.0;
        int len = 0;
        while (len < cfg.max_episode_len) {
            const auto valid = env.valid_actions(s);
            const Action a = sample_action(out.policy, s, valid, cfg.epsilon, eng);
            const StepOutcome step = env.step(s, a);
            out.model.record(s, a, step.reward, step.next_state);
            q_update(out.policy, out.model, s, action_code(a), step.reward, step.next_state);
            planning_updates(out.policy, out.model, cfg.eval_epochs, eng);
            total += step.reward;
            ++len;
            s = step.next_state;
            if (step.done) break;
        }
        out.episode_rewards.push_back(total);
        out.episode_lengths.push_back(len);
    }
    return out;
}

QTablePolicy train_offline(const Environment& env, const TrajectoryDataset& dataset,
                           const TrainConfig& cfg) {
    cfg.validate();
    std::size_t real = 0;
    for (const Trajectory& t : dataset.trajectories) real += t.real_steps();
    if (real == 0) throw ValidationError("offline training needs at least one real transition");

    rng::Engine eng = rng::make_engine(cfg.seed, "dynaq-offline", 0);
    QTablePolicy policy(env, cfg.alpha, cfg.gamma, eng);
    EnvModel model(env.n_states());
    for (const Trajectory& t : dataset.trajectories)
        for (std::size_t i = 0; i + 1 < t.steps.size(); ++i)  // marker excluded
            model.record(t.steps[i].s, t.steps[i].a, t.steps[i].r, t.steps[i].s_next);

    for (int sweep = 0; sweep < cfg.episodes; ++sweep) {
        for (const Trajectory& t : dataset.trajectories) {
            for (std::size_t i = 0; i + 1 < t.steps.size(); ++i) {
                const Transition& tr = t.steps[i];
                q_update(policy, model, tr.s, action_code(tr.a), tr.r, tr.s_next);
                planning_updates(policy, model, cfg.eval_epochs, eng);
            }
        }
    }
    return policy;
}

Trajectory perform(const Environment& env, const QTablePolicy& policy, int max_traj_len,
                   double epsilon, rng::Engine& eng) {
    return perform_from(env, policy, env.start_state(), max_traj_len, epsilon, eng);
}

Trajectory perform_from(const Environment& env, const QTablePolicy& policy, StateId start,
                        int max_traj_len, double epsilon, rng::Engine& eng) {
    if (max_traj_len < 1) throw ValidationError("max_traj_len must be at least 1");
    if (start < 0 || start >= env.n_states() || env.is_obstacle(start) || env.is_terminal(start))
        throw ValidationError("rollout start must be a free non-terminal state");
    Trajectory traj;
    StateId s = start;
    for (int i = 0; i < max_traj_len; ++i) {
        const auto valid = env.valid_actions(s);
        const Action a = sample_action(policy, s, valid, epsilon, eng);
        const StepOutcome step = env.step(s, a);
        traj.steps.push_back({s, a, step.reward, step.next_state});
        s = step.next_state;
        if (step.done) break;
    }
    const Action marker_a = action_from_code(static_cast<int>(rng::uniform_below(eng, 4)));
    traj.steps.push_back({s, marker_a, 0.0, s});
    return traj;
}

double isv(const QTablePolicy& policy, StateId s0) { return policy.max_q(s0); }

void save_policy_csv(const QTablePolicy& policy, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "state_index,q_left,q_up,q_right,q_down\n";
    char buf[512];
    for (StateId s = 0; s < policy.n_states(); ++s) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", s,
                      policy.q(s, Action::Left), policy.q(s, Action::Up),
                      policy.q(s, Action::Right), policy.q(s, Action::Down));
        out << buf;
    }
}

QTablePolicy load_policy_csv(const std::string& path, const Environment& env, double alpha,
                             double gamma) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open policy csv: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("state_index,", 0) != 0)
        throw ValidationError("policy csv missing header: " + path);
    std::vector<std::array<double, 4>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::array<double, 4> q{};
        int s = 0;
        if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg,%lg", &s, &q[0], &q[1], &q[2], &q[3]) != 5)
            throw ValidationError("policy csv line " + std::to_string(lineno) + " is malformed");
        if (s != static_cast<int>(rows.size()))
            throw ValidationError("policy csv states must be dense and ordered");
        rows.push_back(q);
    }
    if (static_cast<int>(rows.size()) != env.n_states())
        throw ValidationError("policy csv state count does not match the grid");
    rng::Engine dummy(0);
    QTablePolicy p(env, alpha, gamma, dummy);
    for (StateId s = 0; s < p.n_states(); ++s)
        for (int a = 0; a < 4; ++a) p.q(s, action_from_code(a)) = rows[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)];
    return p;
}

}  // namespace trajattr
