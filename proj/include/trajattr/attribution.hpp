#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trajattr/clustering.hpp"
#include "trajattr/dynaq.hpp"
#include "trajattr/embedding.hpp"
#include "trajattr/gridworld.hpp"
#include "trajattr/trajstore.hpp"

namespace trajattr {

// One table row: the original policy (cluster empty) or one explanation
// policy (cluster = removed label).
struct MetricsRow {
    std::optional<int> cluster;
    double isv = 0.0;
    double delta_q = 0.0;
    double action_contrast = 0.0;
    double w_dist = 0.0;
    double attribution_freq = 0.0;
};

struct AttributionResult {
    StateId state = 0;
    Action original_action = Action::Up;
    std::vector<Action> per_cluster_action;
    std::vector<int> candidate_clusters;        // greedy differs from original
    std::optional<int> attributed_cluster;      // empty when no candidate
    std::vector<int> attributed_trajectories;   // dataset indices in that cluster
};

struct AttributionFrequency {
    std::vector<double> freq;  // per cluster; sums to 1 when any attribution exists
    int unattributed = 0;      // states where every policy agreed with the original
};

// One offline policy per cluster, trained on the dataset with that cluster's
// trajectories removed. Every policy sees identical cfg (including the seed),
// so differences are attributable to the removed data alone.
std::vector<QTablePolicy> train_explanation_policies(const Environment& env,
                                                     const TrajectoryDataset& ds,
                                                     const ClusterAssignment& a,
                                                     const TrainConfig& cfg);

// Candidates are the clusters whose policy's greedy action at the state
// differs from the original's; the candidate with minimal w_dist wins, ties
// to the smaller label.
AttributionResult attribute(StateId state, const QTablePolicy& orig,
                            const std::vector<QTablePolicy>& policies,
                            const std::vector<double>& w_dists, const ClusterAssignment& a);

AttributionFrequency attribution_frequency(const std::vector<AttributionResult>& results,
                                           int k);

// Rows: original policy first, then one row per cluster. eval_states must be
// reachable non-terminal states; s0 is the ISV query state.
std::vector<MetricsRow> compute_metrics(const QTablePolicy& orig,
                                        const std::vector<QTablePolicy>& policies,
                                        const DataEmbedding& full_embedding,
                                        const std::vector<DataEmbedding>& cluster_embeddings,
                                        const std::vector<StateId>& eval_states, StateId s0,
                                        const ClusterAssignment& a);

void save_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);
std::vector<MetricsRow> load_metrics_csv(const std::string& path);

// One row per evaluated state; list fields are ';'-joined.
void save_attributions_csv(const std::vector<AttributionResult>& results,
                           const std::string& path);
std::vector<AttributionResult> load_attributions_csv(const std::string& path);

}  // namespace trajattr
