#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "trajattr/attribution.hpp"
#include "trajattr/clustering.hpp"
#include "trajattr/gridworld.hpp"
#include "trajattr/rng.hpp"
#include "trajattr/trajstore.hpp"

namespace trajattr {

enum class BehaviorKind : int {
    GoalTopRight = 0,
    MidGridJourney = 1,
    FallingIntoLava = 2,
    None = 3,
};
const char* behavior_name(BehaviorKind k);

// Grid regions the behavior rules test against. The paper-style defaults
// carve the top-right corner block and the central third; layouts with other
// shapes can override any bound.
struct BehaviorRegions {
    int top_right_row_max = 0;  // rows 0..this inclusive
    int top_right_col_min = 0;  // cols this..width-1
    int middle_row_lo = 0, middle_row_hi = 0;  // inclusive central band
    int middle_col_lo = 0, middle_col_hi = 0;

    static BehaviorRegions defaults(const Environment& env);
};

// Precedence when several rules match: FallingIntoLava, then GoalTopRight,
// then MidGridJourney. The goal test reads the cell the trajectory actually
// ended on.
BehaviorKind classify_behavior(const Trajectory& traj, const Environment& env,
                               const BehaviorRegions& regions);

struct ClusterBehavior {
    BehaviorKind dominant = BehaviorKind::None;
    double purity = 0.0;  // fraction of members showing the dominant behavior
    int size = 0;
};

std::vector<ClusterBehavior> cluster_behavior_purity(const TrajectoryDataset& ds,
                                                     const ClusterAssignment& a,
                                                     const Environment& env,
                                                     const BehaviorRegions& regions);

// 0 if the trajectory passes through s; otherwise the mean shortest grid
// distance from each visited point to s. Points with no path to s are
// excluded from the mean and counted into *unreachable.
double state_trajectory_distance(const Environment& env, StateId s, const Trajectory& traj,
                                 int* unreachable = nullptr);

struct DistanceReport {
    std::map<StateId, double> per_state;  // attributed states only
    std::array<int, 4> bins{};            // [0,3), [3,6), [6,9), [9,inf)
    int unreachable_points = 0;
};

DistanceReport attribution_distance_report(const Environment& env,
                                           const std::vector<AttributionResult>& attributions,
                                           const TrajectoryDataset& ds);

void save_distance_report_csv(const DistanceReport& report, const std::string& path);

// (pearson, spearman) between per-cluster ISV and attribution frequency.
// Spearman uses average ranks on ties.
std::pair<double, double> correlation_isv_frequency(const std::vector<MetricsRow>& rows);

// Two attributed trajectories, one random draw from the whole dataset, one
// draw from the non-attributed clusters, shuffled for presentation with the
// answer key kept.
struct StimulusSet {
    StateId state = 0;
    std::array<int, 2> attributed{-1, -1};
    int random_traj = -1;
    int alternate_traj = -1;
    std::array<int, 4> presentation{};   // trajectory indices in display order
    std::array<bool, 4> is_attributed{}; // aligned with presentation
};

StimulusSet build_stimulus(const AttributionResult& attribution, const TrajectoryDataset& ds,
                           const ClusterAssignment& a, rng::Engine& eng);

}  // namespace trajattr
