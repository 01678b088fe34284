#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

#include "trajattr/analysis.hpp"
#include "trajattr/errors.hpp"

using namespace trajattr;

namespace {

// Handcrafted path: rewards 0 except the final real transition; marker
// appended. Actions are placeholders, nothing here replays dynamics.
Trajectory make_traj(const Environment& env, const std::vector<Cell>& cells,
                     double final_reward) {
    Trajectory t;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
        Transition tr;
        tr.s = env.id_of(cells[i]);
        tr.a = Action::Right;
        tr.r = i + 2 == cells.size() ? final_reward : 0.0;
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

GridSpec empty_grid(int w, int h) {
    GridSpec g;
    g.width = w;
    g.height = h;
    g.start = {h - 1, 0};
    g.goal_cells = {{0, w - 1}};
    return g;
}

}  // namespace

TEST_CASE("behavior regions default to the corner block and central third") {
    const Environment g7(GridSpec::builtin("gridworld7"));
    const BehaviorRegions r7 = BehaviorRegions::defaults(g7);
    CHECK(r7.top_right_row_max == 2);
    CHECK(r7.top_right_col_min == 5);
    CHECK(r7.middle_row_lo == 2);
    CHECK(r7.middle_row_hi == 4);
    CHECK(r7.middle_col_lo == 2);
    CHECK(r7.middle_col_hi == 4);

    const Environment f11(GridSpec::builtin("fourroom11"));
    const BehaviorRegions r11 = BehaviorRegions::defaults(f11);
    CHECK(r11.top_right_row_max == 3);
    CHECK(r11.top_right_col_min == 8);
    CHECK(r11.middle_row_lo == 3);
    CHECK(r11.middle_row_hi == 7);
}

TEST_CASE("classify behavior follows the precedence order") {
    const Environment env(GridSpec::builtin("gridworld7"));
    const BehaviorRegions regions = BehaviorRegions::defaults(env);

    // dies in lava, regardless of where it started
    const Trajectory lava = make_traj(env, {{3, 4}, {4, 4}, {4, 3}}, -1.0);
    CHECK(classify_behavior(lava, env, regions) == BehaviorKind::FallingIntoLava);

    // reaches the corner goal from the fixed start
    const Trajectory corner = make_traj(env, {{6, 0}, {0, 5}, {0, 6}}, 1.0);
    CHECK(classify_behavior(corner, env, regions) == BehaviorKind::GoalTopRight);

    // starts mid-grid and reaches the pocket goal, which is not top-right
    const Trajectory pocket = make_traj(env, {{3, 4}, {2, 4}}, 1.0);
    CHECK(classify_behavior(pocket, env, regions) == BehaviorKind::MidGridJourney);

    // mid-grid start but a top-right goal: GoalTopRight wins the overlap
    const Trajectory both = make_traj(env, {{4, 4}, {0, 5}, {0, 6}}, 1.0);
    CHECK(classify_behavior(both, env, regions) == BehaviorKind::GoalTopRight);

    // truncated wandering: no terminal reward at all
    const Trajectory loop = make_traj(env, {{6, 0}, {5, 0}, {6, 0}}, 0.0);
    CHECK(classify_behavior(loop, env, regions) == BehaviorKind::None);

    // success from a non-middle start to a non-top-right goal fits no rule
    const Trajectory odd = make_traj(env, {{6, 0}, {2, 4}}, 1.0);
    CHECK(classify_behavior(odd, env, regions) == BehaviorKind::None);

    Trajectory marker_only;
    marker_only.steps.push_back({env.start_state(), Action::Up, 0.0, env.start_state()});
    CHECK_THROWS_AS(classify_behavior(marker_only, env, regions), ValidationError);
}

TEST_CASE("cluster behavior purity flags pure and mixed clusters") {
    const Environment env(GridSpec::builtin("gridworld7"));
    const BehaviorRegions regions = BehaviorRegions::defaults(env);

    TrajectoryDataset ds;
    ds.trajectories.push_back(make_traj(env, {{6, 0}, {2, 3}}, -1.0));     // lava
    ds.trajectories.push_back(make_traj(env, {{5, 0}, {4, 3}}, -1.0));     // lava
    ds.trajectories.push_back(make_traj(env, {{4, 0}, {2, 5}}, -1.0));     // lava
    ds.trajectories.push_back(make_traj(env, {{6, 0}, {0, 6}}, 1.0));      // corner
    ds.trajectories.push_back(make_traj(env, {{5, 0}, {0, 6}}, 1.0));      // corner
    ds.trajectories.push_back(make_traj(env, {{4, 0}, {1, 4}}, -1.0));     // lava
    ds.trajectories.push_back(make_traj(env, {{3, 4}, {2, 4}}, 1.0));      // pocket
    ds.trajectories.push_back(make_traj(env, {{6, 0}, {5, 0}}, 0.0));      // noise point

    ClusterAssignment a;
    a.k = 3;
    a.labels = {0, 0, 0, 1, 1, 1, 2, -1};

    const std::vector<ClusterBehavior> purity = cluster_behavior_purity(ds, a, env, regions);
    REQUIRE(purity.size() == 3);
    CHECK(purity[0].dominant == BehaviorKind::FallingIntoLava);
    CHECK(purity[0].purity == 1.0);
    CHECK(purity[0].size == 3);
    CHECK(purity[1].dominant == BehaviorKind::GoalTopRight);
    CHECK(purity[1].purity == doctest::Approx(2.0 / 3.0));
    CHECK(purity[2].dominant == BehaviorKind::MidGridJourney);
    CHECK(purity[2].purity == 1.0);
    CHECK(purity[2].size == 1);

    ClusterAssignment short_labels;
    short_labels.k = 1;
    short_labels.labels = {0};
    CHECK_THROWS_AS(cluster_behavior_purity(ds, short_labels, env, regions), ValidationError);
}

TEST_CASE("state trajectory distance follows the pass-through rule") {
    const Environment env(empty_grid(7, 5));
    const StateId s = env.id_of({0, 0});

    const Trajectory straight = make_traj(env, {{0, 2}, {0, 3}, {0, 4}}, 0.0);
    CHECK(state_trajectory_distance(env, s, straight) == doctest::Approx(3.0));

    const Trajectory through = make_traj(env, {{0, 2}, {0, 1}, {0, 0}}, 0.0);
    CHECK(state_trajectory_distance(env, s, through) == 0.0);

    Trajectory empty;
    CHECK_THROWS_AS(state_trajectory_distance(env, s, empty), ValidationError);
}

TEST_CASE("unreachable trajectory points are excluded and counted") {
    GridSpec g;
    g.width = 5;
    g.height = 3;
    g.start = {1, 3};
    g.goal_cells = {{0, 4}};
    g.obstacle_cells = {{0, 1}, {1, 1}, {2, 1}};  // seals the left column
    const Environment env(g);
    const StateId s = env.id_of({0, 0});

    const Trajectory outside = make_traj(env, {{0, 2}, {0, 3}}, 0.0);
    CHECK_THROWS_AS(state_trajectory_distance(env, s, outside), StageError);

    const Trajectory mixed = make_traj(env, {{1, 0}, {0, 2}}, 0.0);
    int unreachable = 0;
    CHECK(state_trajectory_distance(env, s, mixed, &unreachable) == doctest::Approx(1.0));
    CHECK(unreachable == 1);
}

TEST_CASE("distance report bins attributed states") {
    const Environment env(empty_grid(7, 5));
    TrajectoryDataset ds;
    ds.trajectories.push_back(make_traj(env, {{0, 1}, {0, 0}}, 0.0));  // passes through A
    ds.trajectories.push_back(make_traj(env, {{0, 4}, {0, 5}}, 0.0));  // distances 4 and 5

    std::vector<AttributionResult> attributions(3);
    attributions[0].state = env.id_of({0, 0});
    attributions[0].attributed_cluster = 0;
    attributions[0].attributed_trajectories = {0};
    attributions[1].state = env.id_of({0, 0});
    attributions[1].attributed_cluster = 1;
    attributions[1].attributed_trajectories = {1};
    // attributions[2] left unattributed on purpose

    const DistanceReport report = attribution_distance_report(env, attributions, ds);
    REQUIRE(report.per_state.size() == 1);  // same state twice: last write wins
    CHECK(report.bins[0] + report.bins[1] + report.bins[2] + report.bins[3] == 2);
    CHECK(report.bins[0] == 1);  // the pass-through case
    CHECK(report.bins[1] == 1);  // mean 4.5
    CHECK(report.unreachable_points == 0);
}

TEST_CASE("distance report csv lists attributed states with bins") {
    const Environment env(empty_grid(7, 5));
    DistanceReport report;
    report.per_state[env.id_of({0, 0})] = 0.0;
    report.per_state[env.id_of({1, 1})] = 4.5;
    report.per_state[env.id_of({2, 2})] = 10.25;
    const std::string path = "dist_rt.csv";
    save_distance_report_csv(report, path);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "state,avg_distance,bin");
    std::getline(in, line);
    CHECK(line == "0,0,0");
    std::getline(in, line);
    CHECK(line == "8,4.5,1");
    std::getline(in, line);
    CHECK(line == "16,10.25,3");
    in.close();
    std::remove(path.c_str());
}

TEST_CASE("correlations detect inverse rank order") {
    std::vector<MetricsRow> rows(5);
    rows[0].isv = 0.99;  // original row, ignored
    for (int j = 0; j < 4; ++j) rows[static_cast<std::size_t>(j + 1)].cluster = j;
    rows[1].isv = 0.30;
    rows[1].attribution_freq = 0.10;
    rows[2].isv = 0.20;
    rows[2].attribution_freq = 0.30;
    rows[3].isv = 0.10;
    rows[3].attribution_freq = 0.50;
    rows[4].isv = 0.25;
    rows[4].attribution_freq = 0.20;

    const auto [pearson, spearman] = correlation_isv_frequency(rows);
    CHECK(spearman == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pearson < 0.0);

    std::vector<MetricsRow> flat = rows;
    for (std::size_t i = 1; i < flat.size(); ++i) flat[i].isv = 0.5;
    CHECK_THROWS_AS(correlation_isv_frequency(flat), StageError);

    rows.resize(3);  // only two cluster rows remain
    CHECK_THROWS_AS(correlation_isv_frequency(rows), ValidationError);
}

TEST_CASE("stimulus picks four distinct trajectories and keeps the answer key") {
    const Environment env(empty_grid(7, 5));
    TrajectoryDataset ds;
    for (int i = 0; i < 8; ++i)
        ds.trajectories.push_back(make_traj(env, {{0, 1}, {0, 2}}, 0.0));

    ClusterAssignment a;
    a.k = 3;
    a.labels = {0, 1, 1, 1, 2, 2, 0, -1};

    AttributionResult res;
    res.state = env.id_of({0, 3});
    res.attributed_cluster = 1;
    res.attributed_trajectories = {1, 2, 3};

    rng::Engine eng = rng::make_engine(3, "stimuli", 0);
    const StimulusSet stim = build_stimulus(res, ds, a, eng);

    std::set<int> distinct(stim.presentation.begin(), stim.presentation.end());
    CHECK(distinct.size() == 4);
    for (int idx : stim.attributed) CHECK(a.labels[static_cast<std::size_t>(idx)] == 1);
    CHECK(a.labels[static_cast<std::size_t>(stim.alternate_traj)] != 1);
    CHECK(a.labels[static_cast<std::size_t>(stim.alternate_traj)] != -1);

    int marked = 0;
    for (int pos = 0; pos < 4; ++pos) {
        const bool is_attr = stim.presentation[static_cast<std::size_t>(pos)] == stim.attributed[0] ||
                             stim.presentation[static_cast<std::size_t>(pos)] == stim.attributed[1];
        CHECK(stim.is_attributed[static_cast<std::size_t>(pos)] == is_attr);
        marked += stim.is_attributed[static_cast<std::size_t>(pos)] ? 1 : 0;
    }
    CHECK(marked == 2);

    // same stream position, same stimulus
    rng::Engine replay = rng::make_engine(3, "stimuli", 0);
    const StimulusSet again = build_stimulus(res, ds, a, replay);
    CHECK(again.presentation == stim.presentation);
    CHECK(again.is_attributed == stim.is_attributed);

    // the alternate never carries the attributed label, whatever the draw
    rng::Engine wander = rng::make_engine(99, "stimuli", 1);
    for (int trial = 0; trial < 20; ++trial) {
        const StimulusSet roll = build_stimulus(res, ds, a, wander);
        CHECK(a.labels[static_cast<std::size_t>(roll.alternate_traj)] != 1);
    }

    AttributionResult thin = res;
    thin.attributed_trajectories = {1};
    CHECK_THROWS_AS(build_stimulus(thin, ds, a, eng), StageError);
    AttributionResult missing;
    missing.state = res.state;
    CHECK_THROWS_AS(build_stimulus(missing, ds, a, eng), ValidationError);
}
