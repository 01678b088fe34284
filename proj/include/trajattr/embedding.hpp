#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "trajattr/clustering.hpp"
#include "trajattr/encoder.hpp"
#include "trajattr/trajstore.hpp"

namespace trajattr {

// Probability vector over the H latent dimensions summarizing a trajectory
// set: sum of trajectory embeddings, L2-normalized, max-subtracted softmax.
struct DataEmbedding {
    std::vector<double> probs;
    bool operator==(const DataEmbedding&) const = default;
};

// One retained slice of the dataset. removed_cluster is empty for the full
// set. DBSCAN noise points (label -1) are never a removable cluster and stay
// in every set.
struct ComplementarySet {
    std::optional<int> removed_cluster;
    std::vector<int> trajectory_indices;
};

DataEmbedding data_embedding(const std::vector<TrajectoryEmbedding>& embeddings);

// Full set first, then one set per cluster label 0..k-1 with that cluster
// removed (k+1 sets total). Removing a cluster that is the whole dataset
// would leave nothing to train on, which is an error.
std::vector<ComplementarySet> complementary_sets(const TrajectoryDataset& ds,
                                                 const ClusterAssignment& a);

// data_embedding over the subset of `all` named by the set's indices.
DataEmbedding set_embedding(const std::vector<TrajectoryEmbedding>& all,
                            const ComplementarySet& set);

// 1-D Wasserstein over support {0..H-1} with unit ground distance:
// sum_i |CDF_p(i) - CDF_q(i)|.
double wasserstein1(const DataEmbedding& p, const DataEmbedding& q);

// CSV rows keyed by removed_cluster ("full" or the label).
void save_data_embeddings_csv(const DataEmbedding& full,
                              const std::vector<DataEmbedding>& per_cluster,
                              const std::string& path);
std::pair<DataEmbedding, std::vector<DataEmbedding>> load_data_embeddings_csv(
    const std::string& path);

}  // namespace trajattr
