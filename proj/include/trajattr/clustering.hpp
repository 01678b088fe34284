#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace trajattr {

using Point = std::vector<double>;

// Labels are 0..k-1; -1 marks DBSCAN noise and never appears in X-Means
// output. Centroids are filled by the k-means family, empty for DBSCAN.
struct ClusterAssignment {
    std::vector<int> labels;
    int k = 0;
    std::vector<Point> centroids;
    bool operator==(const ClusterAssignment&) const = default;
};

struct KMeansResult {
    std::vector<int> labels;
    std::vector<Point> centroids;
};

struct XMeansConfig {
    int k_min = 2;
    int k_max = 12;
    std::uint64_t center_seed = 0;   // k-means++ init of the running model
    std::uint64_t algo_seed = 99;    // local 2-means split trials
    int max_iters = 100;

    void validate() const;
    std::string hash() const;
};

struct DbscanConfig {
    double eps = 2.04;
    int min_pts = 3;

    void validate() const;
    std::string hash() const;
};

// Seeded k-means++ then Lloyd. Ties in assignment go to the lowest centroid
// index; clusters left empty are refilled from the farthest point, so every
// returned cluster is nonempty.
KMeansResult kmeans(const std::vector<Point>& points, int k, std::uint64_t seed,
                    int max_iters = 100);

// Pelleg-Moore style score: hard-assignment log-likelihood of a shared
// spherical Gaussian per cluster, minus (p/2) ln n with p = k(H+1)+1. Higher
// is better. A zero-variance assignment is scored with the variance clamped
// to 1e-12; *degenerate reports that this happened.
double bic_score(const std::vector<Point>& points, const std::vector<int>& labels,
                 const std::vector<Point>& centroids, bool* degenerate = nullptr);

ClusterAssignment xmeans(const std::vector<Point>& points, const XMeansConfig& cfg);

// Deterministic, seedless. Border points join their nearest core point's
// cluster; final labels are ordered by each cluster's lexicographically
// smallest member, so permuting the input permutes labels identically.
ClusterAssignment dbscan(const std::vector<Point>& points, const DbscanConfig& cfg);

void save_assignment_csv(const ClusterAssignment& a, const std::string& path);
ClusterAssignment load_assignment_csv(const std::string& path);

}  // namespace trajattr
