#include "trajattr/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trajattr/errors.hpp"
#include "trajattr/kernels.hpp"

namespace trajattr {

DataEmbedding data_embedding(const std::vector<TrajectoryEmbedding>& embeddings) {
    if (embeddings.empty()) throw ValidationError("no embeddings to summarize");
    const std::size_t h = embeddings.front().values.size();
    if (h == 0) throw ValidationError("zero-width embeddings");

    std::vector<double> sum(h, 0.0);
    for (const TrajectoryEmbedding& e : embeddings) {
        if (e.values.size() != h) throw ValidationError("embeddings differ in width");
        kern::axpy(1.0, e.values.data(), sum.data(), h);
    }

    const double norm = std::sqrt(kern::dot(sum.data(), sum.data(), h));
    if (norm == 0.0)
        throw StageError("embed", "embedding sum has zero norm (degenerate embedding set)");
    kern::scale(sum.data(), h, 1.0 / norm);

    const double mx = *std::max_element(sum.begin(), sum.end());
    double z = 0.0;
    for (double& v : sum) {
        v = std::exp(v - mx);
        z += v;
    }
    kern::scale(sum.data(), h, 1.0 / z);
    return DataEmbedding{std::move(sum)};
}

std::vector<ComplementarySet> complementary_sets(const TrajectoryDataset& ds,
                                                 const ClusterAssignment& a) {
    const std::size_t n = ds.trajectories.size();
    if (n == 0) throw ValidationError("empty dataset");
    if (a.labels.size() != n)
        throw ValidationError("assignment does not cover the dataset");
    if (a.k < 1) throw ValidationError("assignment has no clusters");
    std::vector<int> sizes(static_cast<std::size_t>(a.k), 0);
    for (int l : a.labels) {
        if (l < -1 || l >= a.k) throw ValidationError("label out of range");
        if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
    }
    for (int c = 0; c < a.k; ++c)
        if (sizes[static_cast<std::size_t>(c)] == 0)
            throw ValidationError("cluster " + std::to_string(c) +
                                  " is empty; its complement would equal the full set");

    std::vector<ComplementarySet> sets;
    sets.reserve(static_cast<std::size_t>(a.k) + 1);

    ComplementarySet full;
    full.trajectory_indices.resize(n);
    for (std::size_t i = 0; i < n; ++i) full.trajectory_indices[i] = static_cast<int>(i);
    sets.push_back(std::move(full));

    for (int c = 0; c < a.k; ++c) {
        ComplementarySet s;
        s.removed_cluster = c;
        for (std::size_t i = 0; i < n; ++i)
            if (a.labels[i] != c) s.trajectory_indices.push_back(static_cast<int>(i));
        if (s.trajectory_indices.empty())
            throw StageError("embed", "removing cluster " + std::to_string(c) +
                                          " empties the dataset");
        sets.push_back(std::move(s));
    }
    return sets;
}

DataEmbedding set_embedding(const std::vector<TrajectoryEmbedding>& all,
                            const ComplementarySet& set) {
    std::vector<TrajectoryEmbedding> picked;
    picked.reserve(set.trajectory_indices.size());
    for (int i : set.trajectory_indices) {
        if (i < 0 || static_cast<std::size_t>(i) >= all.size())
            throw ValidationError("complementary set index out of range");
        picked.push_back(all[static_cast<std::size_t>(i)]);
    }
    return data_embedding(picked);
}

double wasserstein1(const DataEmbedding& p, const DataEmbedding& q) {
    if (p.probs.size() != q.probs.size())
        throw ValidationError("wasserstein1 length mismatch");
    if (p.probs.empty()) throw ValidationError("wasserstein1 on empty distributions");
    double cp = 0.0, cq = 0.0, w = 0.0;
    for (std::size_t i = 0; i < p.probs.size(); ++i) {
        cp += p.probs[i];
        cq += q.probs[i];
        w += std::abs(cp - cq);
    }
    return w;
}

void save_data_embeddings_csv(const DataEmbedding& full,
                              const std::vector<DataEmbedding>& per_cluster,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "removed_cluster";
    for (std::size_t i = 0; i < full.probs.size(); ++i) out << ",p_" << i;
    out << "\n";
    const auto row = [&](const std::string& key, const DataEmbedding& e) {
        if (e.probs.size() != full.probs.size())
            throw ValidationError("data embeddings differ in width");
        out << key;
        char buf[32];
        for (double v : e.probs) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    };
    row("full", full);
    for (std::size_t c = 0; c < per_cluster.size(); ++c)
        row(std::to_string(c), per_cluster[c]);
    if (!out) throw ValidationError("write failed: " + path);
}

std::pair<DataEmbedding, std::vector<DataEmbedding>> load_data_embeddings_csv(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("removed_cluster,p_0", 0) != 0)
        throw ValidationError("bad data-embedding header in " + path);

    DataEmbedding full;
    std::vector<DataEmbedding> per_cluster;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string key, cell;
        std::getline(ss, key, ',');
        DataEmbedding e;
        while (std::getline(ss, cell, ',')) {
            try {
                e.probs.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ValidationError(path + " line " + std::to_string(lineno) +
                                      ": bad number");
            }
        }
        if (e.probs.empty())
            throw ValidationError(path + " line " + std::to_string(lineno) + ": empty row");
        if (key == "full") {
            full = std::move(e);
        } else {
            if (key != std::to_string(per_cluster.size()))
                throw ValidationError(path + " line " + std::to_string(lineno) +
                                      ": clusters must appear in order, got " + key);
            per_cluster.push_back(std::move(e));
        }
    }
    if (full.probs.empty()) throw ValidationError("no full-set row in " + path);
    return {std::move(full), std::move(per_cluster)};
}

}  // namespace trajattr
