#include "trajattr/attribution.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "trajattr/errors.hpp"

namespace trajattr {

std::vector<QTablePolicy> train_explanation_policies(const Environment& env,
                                                     const TrajectoryDataset& ds,
                                                     const ClusterAssignment& a,
                                                     const TrainConfig& cfg) {
    if (a.k < 2) throw ValidationError("need at least 2 clusters to explain by removal");
    cfg.validate();

    const std::vector<ComplementarySet> sets = complementary_sets(ds, a);
    std::vector<QTablePolicy> policies;
    policies.reserve(static_cast<std::size_t>(a.k));
    for (int c = 0; c < a.k; ++c) {
        const ComplementarySet& s = sets[static_cast<std::size_t>(c) + 1];
        TrajectoryDataset sub;
        sub.env_name = ds.env_name;
        sub.config_hash = ds.config_hash;
        sub.trajectories.reserve(s.trajectory_indices.size());
        for (int i : s.trajectory_indices)
            sub.trajectories.push_back(ds.trajectories[static_cast<std::size_t>(i)]);
        policies.push_back(train_offline(env, sub, cfg));
    }
    return policies;
}

AttributionResult attribute(StateId state, const QTablePolicy& orig,
                            const std::vector<QTablePolicy>& policies,
                            const std::vector<double>& w_dists, const ClusterAssignment& a) {
    if (policies.empty()) throw ValidationError("no explanation policies");
    if (policies.size() != w_dists.size() ||
        policies.size() != static_cast<std::size_t>(a.k))
        throw ValidationError("policies, distances, and assignment disagree on k");

    AttributionResult res;
    res.state = state;
    res.original_action = orig.greedy(state);
    res.per_cluster_action.reserve(policies.size());
    for (std::size_t j = 0; j < policies.size(); ++j) {
        const Action act = policies[j].greedy(state);
        res.per_cluster_action.push_back(act);
        if (act != res.original_action) res.candidate_clusters.push_back(static_cast<int>(j));
    }

    if (!res.candidate_clusters.empty()) {
        int best = res.candidate_clusters.front();
        for (int j : res.candidate_clusters)
            if (w_dists[static_cast<std::size_t>(j)] < w_dists[static_cast<std::size_t>(best)])
                best = j;
        res.attributed_cluster = best;
        for (std::size_t i = 0; i < a.labels.size(); ++i)
            if (a.labels[i] == best) res.attributed_trajectories.push_back(static_cast<int>(i));
    }
    return res;
}

AttributionFrequency attribution_frequency(const std::vector<AttributionResult>& results,
                                           int k) {
    if (k < 1) throw ValidationError("k must be positive");
    AttributionFrequency out;
    out.freq.assign(static_cast<std::size_t>(k), 0.0);
    int attributed = 0;
    for (const AttributionResult& r : results) {
        if (!r.attributed_cluster.has_value()) {
            ++out.unattributed;
            continue;
        }
        if (*r.attributed_cluster < 0 || *r.attributed_cluster >= k)
            throw ValidationError("attributed cluster out of range");
        ++attributed;
        out.freq[static_cast<std::size_t>(*r.attributed_cluster)] += 1.0;
    }
    if (attributed > 0)
        for (double& f : out.freq) f /= static_cast<double>(attributed);
    return out;
}

std::vector<MetricsRow> compute_metrics(const QTablePolicy& orig,
                                        const std::vector<QTablePolicy>& policies,
                                        const DataEmbedding& full_embedding,
                                        const std::vector<DataEmbedding>& cluster_embeddings,
                                        const std::vector<StateId>& eval_states, StateId s0,
                                        const ClusterAssignment& a) {
    if (eval_states.empty()) throw ValidationError("no evaluation states");
    const std::size_t k = policies.size();
    if (k == 0 || k != cluster_embeddings.size() || k != static_cast<std::size_t>(a.k))
        throw ValidationError("policies, embeddings, and assignment disagree on k");

    std::vector<double> w_dists(k);
    for (std::size_t j = 0; j < k; ++j)
        w_dists[j] = wasserstein1(full_embedding, cluster_embeddings[j]);

    std::vector<AttributionResult> attributions;
    attributions.reserve(eval_states.size());
    for (StateId s : eval_states)
        attributions.push_back(attribute(s, orig, policies, w_dists, a));
    const AttributionFrequency freq =
        attribution_frequency(attributions, static_cast<int>(k));

    std::vector<MetricsRow> rows;
    rows.reserve(k + 1);
    MetricsRow orig_row;
    orig_row.isv = isv(orig, s0);
    rows.push_back(orig_row);

    const double n = static_cast<double>(eval_states.size());
    for (std::size_t j = 0; j < k; ++j) {
        MetricsRow row;
        row.cluster = static_cast<int>(j);
        row.isv = isv(policies[j], s0);
        row.w_dist = w_dists[j];
        row.attribution_freq = freq.freq[j];
        double dq = 0.0;
        int flips = 0;
        for (std::size_t i = 0; i < eval_states.size(); ++i) {
            const StateId s = eval_states[i];
            const Action star = orig.greedy(s);
            dq += std::abs(orig.q(s, star) - policies[j].q(s, star));
            flips += attributions[i].per_cluster_action[j] != star ? 1 : 0;
        }
        row.delta_q = dq / n;
        row.action_contrast = static_cast<double>(flips) / n;
        rows.push_back(row);
    }
    return rows;
}

void save_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "cluster,isv,delta_q,action_contrast,w_dist,attribution_freq\n";
    char buf[192];
    for (const MetricsRow& r : rows) {
        const std::string key = r.cluster ? std::to_string(*r.cluster) : "orig";
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", key.c_str(),
                      r.isv, r.delta_q, r.action_contrast, r.w_dist, r.attribution_freq);
        out << buf;
    }
    if (!out) throw ValidationError("write failed: " + path);
}

std::vector<MetricsRow> load_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "cluster,isv,delta_q,action_contrast,w_dist,attribution_freq")
        throw ValidationError("bad metrics header in " + path);
    std::vector<MetricsRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        MetricsRow r;
        std::getline(ss, cell, ',');
        if (cell != "orig") {
            try {
                r.cluster = std::stoi(cell);
            } catch (const std::exception&) {
                throw ValidationError(path + " line " + std::to_string(lineno) +
                                      ": bad cluster key");
            }
        }
        double* fields[5] = {&r.isv, &r.delta_q, &r.action_contrast, &r.w_dist,
                             &r.attribution_freq};
        for (double* f : fields) {
            if (!std::getline(ss, cell, ','))
                throw ValidationError(path + " line " + std::to_string(lineno) +
                                      ": missing field");
            try {
                *f = std::stod(cell);
            } catch (const std::exception&) {
                throw ValidationError(path + " line " + std::to_string(lineno) + ": bad number");
            }
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw ValidationError("no metric rows in " + path);
    return rows;
}

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<int> split_ints(const std::string& cell, const std::string& where) {
    std::vector<int> out;
    if (cell.empty()) return out;
    std::istringstream ss(cell);
    std::string part;
    while (std::getline(ss, part, ';')) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(part, &used);
            if (used != part.size()) throw std::invalid_argument(part);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError(where + ": bad integer list entry '" + part + "'");
        }
    }
    return out;
}

}  // namespace

void save_attributions_csv(const std::vector<AttributionResult>& results,
                           const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << "state,original_action,per_cluster_actions,candidates,attributed,"
           "attributed_trajectories\n";
    for (const AttributionResult& r : results) {
        std::vector<int> codes;
        codes.reserve(r.per_cluster_action.size());
        for (Action a : r.per_cluster_action) codes.push_back(action_code(a));
        out << r.state << ',' << action_code(r.original_action) << ',' << join_ints(codes) << ','
            << join_ints(r.candidate_clusters) << ','
            << (r.attributed_cluster ? std::to_string(*r.attributed_cluster) : std::string())
            << ',' << join_ints(r.attributed_trajectories) << '\n';
    }
    if (!out) throw ValidationError("write failed: " + path);
}

std::vector<AttributionResult> load_attributions_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) ||
        line != "state,original_action,per_cluster_actions,candidates,attributed,"
                "attributed_trajectories")
        throw ValidationError("bad attributions header in " + path);
    std::vector<AttributionResult> results;
    int lineno = 1;
    std::size_t k = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + " line " + std::to_string(lineno);
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ss(line);
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (cells.size() != 6) throw ValidationError(where + ": expected 6 fields");

        AttributionResult r;
        const std::vector<int> head = split_ints(cells[0] + ";" + cells[1], where);
        r.state = head[0];
        r.original_action = action_from_code(head[1]);
        for (int code : split_ints(cells[2], where))
            r.per_cluster_action.push_back(action_from_code(code));
        r.candidate_clusters = split_ints(cells[3], where);
        if (!cells[4].empty()) r.attributed_cluster = split_ints(cells[4], where).at(0);
        r.attributed_trajectories = split_ints(cells[5], where);
        if (r.attributed_cluster.has_value() != !r.candidate_clusters.empty())
            throw ValidationError(where + ": attribution and candidate list disagree");
        if (k == 0) k = r.per_cluster_action.size();
        if (r.per_cluster_action.size() != k)
            throw ValidationError(where + ": inconsistent cluster count");
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace trajattr
