#include "trajattr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "trajattr/errors.hpp"

namespace trajattr {

const char* behavior_name(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::GoalTopRight: return "GoalTopRight";
        case BehaviorKind::MidGridJourney: return "MidGridJourney";
        case BehaviorKind::FallingIntoLava: return "FallingIntoLava";
        case BehaviorKind::None: return "None";
    }
    return "None";
}

BehaviorRegions BehaviorRegions::defaults(const Environment& env) {
    const int w = env.width(), h = env.height();
    BehaviorRegions r;
    r.top_right_row_max = h / 3;
    r.top_right_col_min = (2 * w + 2) / 3;  // ceil(2w/3)
    r.middle_row_lo = h / 3;
    r.middle_row_hi = (2 * h + 2) / 3 - 1;
    r.middle_col_lo = w / 3;
    r.middle_col_hi = (2 * w + 2) / 3 - 1;
    return r;
}

namespace {

bool in_top_right(Cell c, const BehaviorRegions& r) {
    return c.row <= r.top_right_row_max && c.col >= r.top_right_col_min;
}

bool in_middle(Cell c, const BehaviorRegions& r) {
    return c.row >= r.middle_row_lo && c.row <= r.middle_row_hi && c.col >= r.middle_col_lo &&
           c.col <= r.middle_col_hi;
}

}  // namespace

BehaviorKind classify_behavior(const Trajectory& traj, const Environment& env,
                               const BehaviorRegions& regions) {
    if (traj.steps.size() < 2)
        throw ValidationError("trajectory has no real transitions to classify");
    const double last_r = traj.steps[traj.steps.size() - 2].r;
    if (last_r == -1.0) return BehaviorKind::FallingIntoLava;
    if (last_r == 1.0) {
        if (in_top_right(env.cell_of(traj.final_state()), regions))
            return BehaviorKind::GoalTopRight;
        if (in_middle(env.cell_of(traj.steps.front().s), regions))
            return BehaviorKind::MidGridJourney;
    }
    return BehaviorKind::None;
}

std::vector<ClusterBehavior> cluster_behavior_purity(const TrajectoryDataset& ds,
                                                     const ClusterAssignment& a,
                                                     const Environment& env,
                                                     const BehaviorRegions& regions) {
    if (a.labels.size() != ds.trajectories.size())
        throw ValidationError("assignment does not cover the dataset");
    if (a.k < 1) throw ValidationError("assignment has no clusters");

    std::vector<std::array<int, 4>> counts(static_cast<std::size_t>(a.k), {0, 0, 0, 0});
    std::vector<int> sizes(static_cast<std::size_t>(a.k), 0);
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        const int l = a.labels[i];
        if (l < -1 || l >= a.k) throw ValidationError("label out of range");
        if (l < 0) continue;  // noise belongs to no cluster
        const BehaviorKind b = classify_behavior(ds.trajectories[i], env, regions);
        ++counts[static_cast<std::size_t>(l)][static_cast<std::size_t>(b)];
        ++sizes[static_cast<std::size_t>(l)];
    }

    std::vector<ClusterBehavior> out(static_cast<std::size_t>(a.k));
    for (int c = 0; c < a.k; ++c) {
        const auto& cnt = counts[static_cast<std::size_t>(c)];
        if (sizes[static_cast<std::size_t>(c)] == 0)
            throw ValidationError("cluster " + std::to_string(c) + " is empty");
        int best = 0;
        for (int b = 1; b < 4; ++b)
            if (cnt[static_cast<std::size_t>(b)] > cnt[static_cast<std::size_t>(best)]) best = b;
        ClusterBehavior& cb = out[static_cast<std::size_t>(c)];
        cb.dominant = static_cast<BehaviorKind>(best);
        cb.size = sizes[static_cast<std::size_t>(c)];
        cb.purity = static_cast<double>(cnt[static_cast<std::size_t>(best)]) /
                    static_cast<double>(cb.size);
    }
    return out;
}

double state_trajectory_distance(const Environment& env, StateId s, const Trajectory& traj,
                                 int* unreachable) {
    if (traj.steps.empty()) throw ValidationError("empty trajectory");
    if (s < 0 || s >= env.n_states()) throw ValidationError("state out of range");

    // The visit sequence ends with the marker's duplicate of the final
    // state; drop it so the final cell is counted once.
    const std::vector<StateId> visits = traj.visited();
    const std::size_t n_points = traj.real_steps() + 1;

    for (std::size_t i = 0; i < n_points; ++i)
        if (visits[i] == s) return 0.0;

    double sum = 0.0;
    int finite = 0;
    for (std::size_t i = 0; i < n_points; ++i) {
        const std::optional<int> d = env.shortest_distance(visits[i], s);
        if (d.has_value()) {
            sum += static_cast<double>(*d);
            ++finite;
        } else if (unreachable) {
            ++*unreachable;
        }
    }
    if (finite == 0)
        throw StageError("analyze-distance",
                         "no finite distances from trajectory points to state " +
                             std::to_string(s));
    return sum / static_cast<double>(finite);
}

DistanceReport attribution_distance_report(const Environment& env,
                                           const std::vector<AttributionResult>& attributions,
                                           const TrajectoryDataset& ds) {
    DistanceReport report;
    for (const AttributionResult& r : attributions) {
        if (!r.attributed_cluster.has_value() || r.attributed_trajectories.empty()) continue;
        double sum = 0.0;
        for (int idx : r.attributed_trajectories) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= ds.trajectories.size())
                throw ValidationError("attributed trajectory index out of range");
            sum += state_trajectory_distance(env, r.state,
                                             ds.trajectories[static_cast<std::size_t>(idx)],
                                             &report.unreachable_points);
        }
        const double avg = sum / static_cast<double>(r.attributed_trajectories.size());
        report.per_state[r.state] = avg;
        const std::size_t bin = avg < 3.0 ? 0 : avg < 6.0 ? 1 : avg < 9.0 ? 2 : 3;
        ++report.bins[bin];
    }
    return report;
}

void save_distance_report_csv(const DistanceReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "state,avg_distance,bin\n";
    char buf[64];
    for (const auto& [state, avg] : report.per_state) {
        const int bin = avg < 3.0 ? 0 : avg < 6.0 ? 1 : avg < 9.0 ? 2 : 3;
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%d\n", state, avg, bin);
        out << buf;
    }
    if (!out) throw ValidationError("write failed: " + path);
}

namespace {

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw StageError("correlate", "zero variance makes the correlation undefined");
    return sxy / std::sqrt(sxx * syy);
}

// Average ranks on ties.
std::vector<double> ranks_of(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::pair<double, double> correlation_isv_frequency(const std::vector<MetricsRow>& rows) {
    std::vector<double> isvs, freqs;
    for (const MetricsRow& r : rows) {
        if (!r.cluster.has_value()) continue;
        isvs.push_back(r.isv);
        freqs.push_back(r.attribution_freq);
    }
    if (isvs.size() < 3)
        throw ValidationError("need at least 3 cluster rows for a correlation");
    const double p = pearson(isvs, freqs);
    const double s = pearson(ranks_of(isvs), ranks_of(freqs));
    return {p, s};
}

StimulusSet build_stimulus(const AttributionResult& attribution, const TrajectoryDataset& ds,
                           const ClusterAssignment& a, rng::Engine& eng) {
    if (!attribution.attributed_cluster.has_value())
        throw ValidationError("state has no attribution to build a stimulus from");
    if (a.labels.size() != ds.trajectories.size())
        throw ValidationError("assignment does not cover the dataset");
    const std::vector<int>& pool = attribution.attributed_trajectories;
    if (pool.size() < 2)
        throw StageError("stimuli", "attributed cluster has fewer than 2 trajectories");

    StimulusSet stim;
    stim.state = attribution.state;

    const std::size_t first = rng::uniform_below(eng, pool.size());
    std::size_t second = rng::uniform_below(eng, pool.size() - 1);
    if (second >= first) ++second;
    stim.attributed[0] = pool[first];
    stim.attributed[1] = pool[second];

    std::vector<int> random_pool;
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        const int idx = static_cast<int>(i);
        if (idx != stim.attributed[0] && idx != stim.attributed[1]) random_pool.push_back(idx);
    }
    if (random_pool.empty())
        throw StageError("stimuli", "dataset too small for four distinct trajectories");
    stim.random_traj = random_pool[rng::uniform_below(eng, random_pool.size())];

    std::vector<int> alt_pool;
    for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
        const int idx = static_cast<int>(i);
        if (a.labels[i] >= 0 && a.labels[i] != *attribution.attributed_cluster &&
            idx != stim.random_traj)
            alt_pool.push_back(idx);
    }
    if (alt_pool.empty())
        throw StageError("stimuli", "no trajectory outside the attributed cluster to contrast");
    stim.alternate_traj = alt_pool[rng::uniform_below(eng, alt_pool.size())];

    stim.presentation = {stim.attributed[0], stim.attributed[1], stim.random_traj,
                         stim.alternate_traj};
    std::array<bool, 4> key = {true, true, false, false};
    for (std::size_t i = 4; i > 1; --i) {
        const std::size_t j = rng::uniform_below(eng, i);
        std::swap(stim.presentation[i - 1], stim.presentation[j]);
        std::swap(key[i - 1], key[j]);
    }
    stim.is_attributed = key;
    return stim;
}

}  // namespace trajattr
