#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <vector>

#include "trajattr/dynaq.hpp"
#include "trajattr/errors.hpp"

using namespace trajattr;

namespace {

GridSpec empty_grid(int h, int w) {
    GridSpec g;
    g.height = h;
    g.width = w;
    g.start = {h - 1, 0};
    g.goal_cells = {{0, w - 1}};
    return g;
}

// Independent fixpoint iteration for Q* on a deterministic grid.
double value_iteration_isv(const Environment& env, double gamma, StateId s0) {
    const int S = env.n_states();
    std::vector<std::array<double, 4>> q(static_cast<std::size_t>(S), {0, 0, 0, 0});
    for (int it = 0; it < 500; ++it) {
        for (StateId s = 0; s < S; ++s) {
            if (env.is_obstacle(s) || env.is_terminal(s)) continue;
            for (Action a : kAllActions) {
                const auto out = env.step(s, a);
                double boot = 0.0;
                if (!out.done) {
                    const auto& row = q[static_cast<std::size_t>(out.next_state)];
                    boot = gamma * std::max(std::max(row[0], row[1]), std::max(row[2], row[3]));
                }
                q[static_cast<std::size_t>(s)][static_cast<std::size_t>(action_code(a))] =
                    out.reward + boot;
            }
        }
    }
    const auto& row = q[static_cast<std::size_t>(s0)];
    return std::max(std::max(row[0], row[1]), std::max(row[2], row[3]));
}

QTablePolicy zero_policy(const Environment& env) {
    rng::Engine eng(0);
    QTablePolicy p(env, 0.1, 0.95, eng);
    for (StateId s = 0; s < p.n_states(); ++s)
        for (Action a : kAllActions) p.q(s, a) = 0.0;
    return p;
}

}  // namespace

TEST_CASE("sample_action argmax restriction and tie break") {
    Environment env(empty_grid(3, 3));
    QTablePolicy p = zero_policy(env);
    const StateId c = env.id_of({1, 1});  // interior, all four actions valid
    p.q(c, Action::Left) = 0.1;
    p.q(c, Action::Up) = 0.9;
    p.q(c, Action::Right) = 0.2;
    p.q(c, Action::Down) = 0.3;
    rng::Engine eng = rng::make_engine(1, "sample", 0);

    const std::vector<Action> all{Action::Left, Action::Up, Action::Right, Action::Down};
    CHECK(sample_action(p, c, all, 0.0, eng) == Action::Up);
    CHECK(p.greedy(c) == Action::Up);

    const std::vector<Action> no_up{Action::Left, Action::Right, Action::Down};
    CHECK(sample_action(p, c, no_up, 0.0, eng) == Action::Down);

    p.q(c, Action::Left) = 0.3;  // ties Down; lower code wins
    const std::vector<Action> tied{Action::Left, Action::Down};
    CHECK(sample_action(p, c, tied, 0.0, eng) == Action::Left);

    CHECK_THROWS_AS(sample_action(p, c, {}, 0.0, eng), ValidationError);
}

TEST_CASE("masked readouts ignore invalid-action values") {
    Environment env(empty_grid(3, 3));
    QTablePolicy p = zero_policy(env);
    const StateId corner = env.id_of({0, 0});  // only Right and Down valid
    p.q(corner, Action::Left) = 0.99;          // stale init, must not leak out
    p.q(corner, Action::Up) = 0.98;
    p.q(corner, Action::Right) = 0.2;
    p.q(corner, Action::Down) = 0.4;
    CHECK(p.max_q(corner) == 0.4);
    CHECK(p.greedy(corner) == Action::Down);
    CHECK(isv(p, corner) == 0.4);
    CHECK(p.is_valid(corner, Action::Down));
    CHECK_FALSE(p.is_valid(corner, Action::Up));
}

TEST_CASE("sample_action epsilon=1 is uniform over valid actions") {
    Environment env(empty_grid(2, 2));
    QTablePolicy p = zero_policy(env);
    p.q(0, Action::Right) = 100.0;  // must not matter under pure exploration
    rng::Engine eng = rng::make_engine(2, "sample-uniform", 0);
    const std::vector<Action> valid{Action::Left, Action::Up, Action::Right};
    int counts[4] = {0, 0, 0, 0};
    const int draws = 30000;
    for (int i = 0; i < draws; ++i)
        counts[action_code(sample_action(p, 0, valid, 1.0, eng))]++;
    CHECK(counts[action_code(Action::Down)] == 0);
    // p = 1/3, sd = sqrt(n p (1-p)) ≈ 81.6; 3 sigma band around 10000
    for (Action a : valid) {
        CHECK(counts[action_code(a)] > 10000 - 245);
        CHECK(counts[action_code(a)] < 10000 + 245);
    }
}

TEST_CASE("train_online converges on an empty 5x5 grid") {
    Environment env(empty_grid(5, 5));
    TrainConfig cfg;
    cfg.episodes = 500;
    cfg.alpha = 0.1;
    cfg.gamma = 0.95;
    cfg.eval_epochs = 15;
    cfg.epsilon = 0.1;
    cfg.seed = 11;
    const TrainResult res = train_online(env, cfg);

    const auto d = env.shortest_distance(env.start_state(), env.id_of({0, 4}));
    REQUIRE(d.has_value());

    rng::Engine eng = rng::make_engine(12, "rollout", 0);
    const Trajectory greedy = perform(env, res.policy, 100, 0.0, eng);
    CHECK(greedy.real_steps() == static_cast<std::size_t>(*d));
    CHECK(env.is_goal(greedy.final_state()));

    const double vi = value_iteration_isv(env, cfg.gamma, env.start_state());
    CHECK(vi == doctest::Approx(std::pow(cfg.gamma, *d - 1)).epsilon(1e-9));
    CHECK(std::abs(isv(res.policy, env.start_state()) - vi) < 0.05);
}

TEST_CASE("plain q-learning without planning still converges") {
    Environment env(empty_grid(5, 5));
    TrainConfig cfg;
    cfg.episodes = 2000;
    cfg.eval_epochs = 0;
    cfg.seed = 21;
    const TrainResult res = train_online(env, cfg);
    rng::Engine eng = rng::make_engine(22, "rollout", 0);
    const Trajectory greedy = perform(env, res.policy, 100, 0.0, eng);
    CHECK(greedy.real_steps() == 8);
    CHECK(env.is_goal(greedy.final_state()));
}

TEST_CASE("training is bit deterministic in its seed") {
    Environment env(empty_grid(4, 4));
    TrainConfig cfg;
    cfg.episodes = 60;
    cfg.seed = 31;
    const TrainResult a = train_online(env, cfg);
    const TrainResult b = train_online(env, cfg);
    CHECK(a.episode_rewards == b.episode_rewards);
    CHECK(a.episode_lengths == b.episode_lengths);
    for (StateId s = 0; s < env.n_states(); ++s)
        for (Action act : kAllActions) CHECK(a.policy.q(s, act) == b.policy.q(s, act));
}

namespace {

TrajectoryDataset rollout_dataset(const Environment& env, const QTablePolicy& policy, int n,
                                  double epsilon, std::uint64_t seed, int max_len = 60) {
    TrajectoryDataset ds;
    ds.env_name = "test";
    ds.config_hash = "test";
    for (int i = 0; i < n; ++i) {
        rng::Engine eng = rng::make_engine(seed, "rollout", static_cast<std::uint64_t>(i));
        ds.trajectories.push_back(perform(env, policy, max_len, epsilon, eng));
    }
    return ds;
}

}  // namespace

TEST_CASE("offline training reproduces the online agent from its own data") {
    Environment env(empty_grid(5, 5));
    TrainConfig cfg;
    cfg.episodes = 400;
    cfg.seed = 41;
    const TrainResult online = train_online(env, cfg);
    const TrajectoryDataset ds = rollout_dataset(env, online.policy, 20, 0.15, 42);

    TrainConfig off = cfg;
    off.episodes = 60;  // sweeps
    const QTablePolicy offline = train_offline(env, ds, off);
    CHECK(std::abs(isv(offline, env.start_state()) - isv(online.policy, env.start_state())) <
          0.02);
}

TEST_CASE("removing every goal trajectory lowers the start value") {
    Environment env(empty_grid(5, 5));
    TrainConfig cfg;
    cfg.episodes = 400;
    cfg.seed = 51;
    const TrainResult online = train_online(env, cfg);
    TrajectoryDataset ds = rollout_dataset(env, online.policy, 30, 0.6, 52, 12);

    TrajectoryDataset no_goal = ds;
    no_goal.trajectories.clear();
    for (const Trajectory& t : ds.trajectories)
        if (!env.is_goal(t.final_state())) no_goal.trajectories.push_back(t);
    REQUIRE(!no_goal.trajectories.empty());
    REQUIRE(no_goal.trajectories.size() < ds.trajectories.size());

    TrainConfig off = cfg;
    off.episodes = 80;
    const QTablePolicy full = train_offline(env, ds, off);
    const QTablePolicy starved = train_offline(env, no_goal, off);
    CHECK(isv(starved, env.start_state()) < isv(full, env.start_state()));
}

TEST_CASE("single transition dataset leaves untouched states at initialization") {
    Environment env(empty_grid(5, 5));
    TrajectoryDataset ds;
    ds.env_name = "test";
    ds.config_hash = "test";
    Trajectory t;
    const StateId s0 = env.start_state();
    t.steps.push_back({s0, Action::Up, 0.0, s0 - 5});
    t.steps.push_back({s0 - 5, Action::Left, 0.0, s0 - 5});
    ds.trajectories.push_back(t);

    TrainConfig cfg;
    cfg.episodes = 10;
    cfg.seed = 61;
    const QTablePolicy p = train_offline(env, ds, cfg);

    // replay the exact initialization stream to recover untouched rows
    rng::Engine eng = rng::make_engine(cfg.seed, "dynaq-offline", 0);
    const QTablePolicy fresh(env, cfg.alpha, cfg.gamma, eng);
    const StateId far = env.id_of({0, 0});
    for (Action a : kAllActions) CHECK(p.q(far, a) == fresh.q(far, a));
    CHECK(p.q(s0, Action::Up) != fresh.q(s0, Action::Up));

    TrajectoryDataset empty_ds;
    empty_ds.env_name = "test";
    empty_ds.trajectories.push_back({{{s0, Action::Up, 0.0, s0}}});  // marker only
    CHECK_THROWS_AS(train_offline(env, empty_ds, cfg), ValidationError);
}

TEST_CASE("offline sweeps reach a fixpoint") {
    Environment env(empty_grid(4, 4));
    TrainConfig cfg;
    cfg.episodes = 300;
    cfg.seed = 71;
    const TrainResult online = train_online(env, cfg);
    const TrajectoryDataset ds = rollout_dataset(env, online.policy, 8, 0.2, 72);

    TrainConfig a = cfg;
    a.episodes = 150;
    TrainConfig b = cfg;
    b.episodes = 151;
    const QTablePolicy pa = train_offline(env, ds, a);
    const QTablePolicy pb = train_offline(env, ds, b);
    double max_delta = 0.0;
    for (StateId s = 0; s < env.n_states(); ++s)
        for (Action act : kAllActions)
            max_delta = std::max(max_delta, std::abs(pa.q(s, act) - pb.q(s, act)));
    CHECK(max_delta < 1e-6);
}

TEST_CASE("perform truncation lava ending and marker shape") {
    GridSpec g = empty_grid(5, 5);
    g.lava_cells = {{4, 1}};  // right of start
    Environment env(g);

    QTablePolicy p = zero_policy(env);
    p.q(env.start_state(), Action::Right) = 1.0;  // steer into lava
    rng::Engine eng = rng::make_engine(81, "perform", 0);
    const Trajectory into_lava = perform(env, p, 50, 0.0, eng);
    CHECK(into_lava.real_steps() == 1);
    CHECK(into_lava.steps[0].r == -1.0);
    CHECK(env.is_lava(into_lava.final_state()));

    const QTablePolicy wander = zero_policy(env);
    rng::Engine eng2 = rng::make_engine(82, "perform", 0);
    const Trajectory caped = perform(env, wander, 1, 0.0, eng2);
    CHECK(caped.steps.size() == 2);  // one real step + marker
    const Transition& marker = caped.steps.back();
    CHECK(marker.s == marker.s_next);
    CHECK(marker.r == 0.0);

    CHECK_THROWS_AS(perform(env, wander, 0, 0.0, eng2), ValidationError);
}

TEST_CASE("isv of an all-zero table is zero") {
    Environment env(empty_grid(3, 3));
    const QTablePolicy p = zero_policy(env);
    CHECK(isv(p, 0) == 0.0);
}

TEST_CASE("policy csv round trip") {
    Environment env(empty_grid(3, 3));
    TrainConfig cfg;
    cfg.episodes = 30;
    cfg.seed = 91;
    const TrainResult res = train_online(env, cfg);
    const std::string path = "/tmp/trajattr_test_policy.csv";
    save_policy_csv(res.policy, path);
    const QTablePolicy back = load_policy_csv(path, env, cfg.alpha, cfg.gamma);
    REQUIRE(back.n_states() == res.policy.n_states());
    for (StateId s = 0; s < back.n_states(); ++s)
        for (Action a : kAllActions) CHECK(back.q(s, a) == res.policy.q(s, a));
    std::remove(path.c_str());
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    cfg.episodes = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.episodes = 1;
    cfg.gamma = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.gamma = 0.95;
    cfg.epsilon = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.epsilon = 0.1;
    CHECK_NOTHROW(cfg.validate());
    const std::string h1 = cfg.hash();
    cfg.seed = 7;
    CHECK(cfg.hash() != h1);
}

TEST_CASE("exploring starts learn regions the fixed start cannot reach") {
    // gridworld7's pocket (rows 3-4, col 4) is sealed off from the start, so
    // a conventionally trained agent keeps random values there. Exploring
    // starts visit it and learn the one-step route to the sealed goal.
    Environment env(GridSpec::builtin("gridworld7"));
    TrainConfig cfg;
    cfg.episodes = 400;
    cfg.eval_epochs = 15;
    cfg.seed = 3;
    cfg.max_episode_len = 200;
    cfg.exploring_starts = true;
    const TrainResult res = train_online(env, cfg);

    const StateId upper = env.id_of({3, 4});
    const StateId lower = env.id_of({4, 4});
    CHECK(res.policy.greedy(upper) == Action::Up);
    CHECK(res.policy.greedy(lower) == Action::Up);
    CHECK(res.policy.q(upper, Action::Up) == doctest::Approx(1.0).epsilon(0.05));

    // still deterministic in the seed
    const TrainResult again = train_online(env, cfg);
    for (StateId s = 0; s < env.n_states(); ++s)
        for (int a = 0; a < 4; ++a)
            CHECK(res.policy.q(s, action_from_code(a)) ==
                  again.policy.q(s, action_from_code(a)));

    // the flag changes training; leaving it off reproduces the old stream
    cfg.exploring_starts = false;
    const TrainResult plain = train_online(env, cfg);
    bool any_diff = false;
    for (StateId s = 0; s < env.n_states() && !any_diff; ++s)
        for (int a = 0; a < 4 && !any_diff; ++a)
            any_diff = plain.policy.q(s, action_from_code(a)) !=
                       res.policy.q(s, action_from_code(a));
    CHECK(any_diff);
}
