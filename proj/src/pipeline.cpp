#include "trajattr/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "trajattr/attribution.hpp"
#include "trajattr/clustering.hpp"
#include "trajattr/datagen.hpp"
#include "trajattr/dynaq.hpp"
#include "trajattr/embedding.hpp"
#include "trajattr/encoder.hpp"
#include "trajattr/errors.hpp"
#include "trajattr/hash.hpp"

namespace trajattr {
namespace {

std::string now_utc() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string join_path(const std::string& dir, const std::string& rel) {
    return dir.empty() ? rel : dir + "/" + rel;
}

void write_text_to(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out << content;
    out.flush();
    if (!out) throw ValidationError("write failed: " + path);
}

}  // namespace

const StageRecord* RunManifest::find(const std::string& name) const {
    for (const StageRecord& r : stages)
        if (r.name == name) return &r;
    return nullptr;
}

void write_artifact(const std::string& stage, const std::string& path,
                    const std::string& content) {
    const std::string tmp = path + ".tmp";
    try {
        write_text_to(tmp, content);
    } catch (const ValidationError& e) {
        throw StageError(stage, e.what());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw StageError(stage, "rename to " + path + " failed: " + ec.message());
}

void save_manifest(const RunManifest& m, const std::string& path) {
    std::string text;
    text += "version = " + m.version + "\n";
    text += "config_hash = " + m.config_hash + "\n";
    text += "data_seed = " + std::to_string(m.data_seed) + "\n";
    text += "timestamp = " + m.timestamp + "\n";
    text += "[stages]\n";
    for (const StageRecord& r : m.stages) text += r.name + "\t" + r.hash + "\t" + r.path + "\n";
    write_artifact("manifest", path, text);
}

RunManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    RunManifest m;
    std::string line;
    const auto take = [&](const std::string& key) {
        const std::string prefix = key + " = ";
        if (!std::getline(in, line) || line.rfind(prefix, 0) != 0)
            throw ValidationError(path + ": expected '" + key + " = ...'");
        return line.substr(prefix.size());
    };
    m.version = take("version");
    m.config_hash = take("config_hash");
    try {
        std::size_t used = 0;
        const std::string raw = take("data_seed");
        m.data_seed = std::stoull(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
    } catch (const ValidationError&) {
        throw;
    } catch (const std::exception&) {
        throw ValidationError(path + ": bad data_seed");
    }
    m.timestamp = take("timestamp");
    if (!std::getline(in, line) || line != "[stages]")
        throw ValidationError(path + ": missing [stages] block");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t t1 = line.find('\t');
        const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos)
            throw ValidationError(path + ": malformed stage line '" + line + "'");
        m.stages.push_back({line.substr(0, t1), line.substr(t2 + 1),
                            line.substr(t1 + 1, t2 - t1 - 1)});
    }
    return m;
}

BehaviorRegions behavior_regions(const ExperimentConfig& cfg, const Environment& env) {
    BehaviorRegions r = BehaviorRegions::defaults(env);
    if (cfg.top_right_row_max >= 0) r.top_right_row_max = cfg.top_right_row_max;
    if (cfg.top_right_col_min >= 0) r.top_right_col_min = cfg.top_right_col_min;
    if (cfg.middle_row_lo >= 0) r.middle_row_lo = cfg.middle_row_lo;
    if (cfg.middle_row_hi >= 0) r.middle_row_hi = cfg.middle_row_hi;
    if (cfg.middle_col_lo >= 0) r.middle_col_lo = cfg.middle_col_lo;
    if (cfg.middle_col_hi >= 0) r.middle_col_hi = cfg.middle_col_hi;
    return r;
}

std::string behaviors_table(const TrajectoryDataset& ds, const ClusterAssignment& a,
                            const Environment& env, const BehaviorRegions& regions) {
    const std::vector<ClusterBehavior> behaviors = cluster_behavior_purity(ds, a, env, regions);
    std::string text = "cluster,dominant,purity,size,uniform_length\n";
    char buf[128];
    for (std::size_t j = 0; j < behaviors.size(); ++j) {
        bool uniform = true;
        std::size_t len = 0, seen = 0;
        for (std::size_t i = 0; i < a.labels.size(); ++i) {
            if (a.labels[i] != static_cast<int>(j)) continue;
            const std::size_t L = ds.trajectories[i].real_steps();
            uniform = uniform && (seen == 0 || L == len);
            len = seen == 0 ? L : len;
            ++seen;
        }
        std::snprintf(buf, sizeof(buf), "%zu,%s,%.6f,%d,%d\n", j,
                      behavior_name(behaviors[j].dominant), behaviors[j].purity,
                      behaviors[j].size, uniform ? 1 : 0);
        text += buf;
    }
    return text;
}

RunManifest run_pipeline(const ExperimentConfig& cfg) {
    cfg.validate();
    const Environment env(GridSpec::builtin(cfg.env_name));

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw StageError("setup", "cannot create " + cfg.out_dir + ": " + ec.message());

    RunManifest m;
    m.version = kToolVersion;
    m.config_hash = cfg.hash();
    m.data_seed = cfg.data_seed;
    m.timestamp = now_utc();

    const std::string& dir = cfg.out_dir;
    // Writes through a temp name, renames, then records the hash, so the
    // record exists before any later stage can read the artifact.
    const auto commit = [&](const std::string& stage, const std::string& name,
                            const std::string& rel, const auto& writer) {
        const std::string full = join_path(dir, rel);
        const std::string tmp = full + ".tmp";
        writer(tmp);
        std::error_code rec;
        std::filesystem::rename(tmp, full, rec);
        if (rec) throw StageError(stage, "rename to " + full + " failed: " + rec.message());
        m.stages.push_back({name, rel, file_hash(full)});
    };

    try {
        commit("config", "config", "config.ini",
               [&](const std::string& p) { write_text_to(p, cfg.to_text()); });

        const TrajectoryDataset ds =
            generate_dataset(env, cfg.env_name, cfg.n_trajectories, cfg.gen, cfg.data_seed);
        commit("gen-data", "dataset", "dataset.csv",
               [&](const std::string& p) { save_dataset(ds, p); });

        std::vector<TokenSequence> seqs;
        seqs.reserve(ds.trajectories.size());
        for (const Trajectory& t : ds.trajectories) seqs.push_back(tokenize(t, env));

        EncoderTrainConfig enc_cfg = cfg.encoder;
        enc_cfg.seed = cfg.data_seed;
        const EncoderParams init =
            init_params(vocab_size(env), enc_cfg.H, enc_cfg.E, enc_cfg.seed);
        const auto [params, losses] = train_autoencoder(init, seqs, enc_cfg);
        commit("train-encoder", "encoder-params", "encoder.csv",
               [&](const std::string& p) { save_params(params, p); });
        {
            std::string text = "epoch,loss\n";
            char buf[64];
            for (std::size_t e = 0; e < losses.size(); ++e) {
                std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, losses[e]);
                text += buf;
            }
            commit("train-encoder", "encoder-loss", "encoder_loss.csv",
                   [&](const std::string& p) { write_text_to(p, text); });
        }

        const std::vector<TrajectoryEmbedding> embs = embed_all(params, seqs);
        commit("embed", "embeddings", "embeddings.csv",
               [&](const std::string& p) { save_embeddings_csv(embs, p); });

        std::vector<Point> points;
        points.reserve(embs.size());
        for (const TrajectoryEmbedding& e : embs) points.push_back(e.values);
        const ClusterAssignment assignment = cfg.cluster_algorithm == "xmeans"
                                                 ? xmeans(points, cfg.xmeans)
                                                 : dbscan(points, cfg.dbscan);
        commit("cluster", "assignment", "assignment.csv",
               [&](const std::string& p) { save_assignment_csv(assignment, p); });

        const std::vector<ComplementarySet> sets = complementary_sets(ds, assignment);
        const DataEmbedding full_emb = set_embedding(embs, sets[0]);
        std::vector<DataEmbedding> cluster_embs;
        for (std::size_t j = 1; j < sets.size(); ++j)
            cluster_embs.push_back(set_embedding(embs, sets[j]));
        commit("embed", "data-embeddings", "data_embeddings.csv", [&](const std::string& p) {
            save_data_embeddings_csv(full_emb, cluster_embs, p);
        });

        std::vector<double> w_dists;
        for (const DataEmbedding& e : cluster_embs) w_dists.push_back(wasserstein1(full_emb, e));

        std::vector<StateId> eval_states;
        for (StateId s : env.reachable_states())
            if (!env.is_terminal(s)) eval_states.push_back(s);

        std::vector<AttributionResult> first_seed_results;
        std::vector<MetricsRow> pooled_rows;
        for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
            const std::uint64_t seed = cfg.seeds[si];
            const std::string tag = "seed" + std::to_string(seed);
            TrainConfig oc = cfg.offline;
            oc.seed = seed;

            const QTablePolicy orig = train_offline(env, ds, oc);
            commit("policies", "policy/" + tag + "/orig", "policy_" + tag + "_orig.csv",
                   [&](const std::string& p) { save_policy_csv(orig, p); });
            const std::vector<QTablePolicy> policies =
                train_explanation_policies(env, ds, assignment, oc);
            for (std::size_t j = 0; j < policies.size(); ++j) {
                commit("policies", "policy/" + tag + "/c" + std::to_string(j),
                       "policy_" + tag + "_c" + std::to_string(j) + ".csv",
                       [&](const std::string& p) { save_policy_csv(policies[j], p); });
            }

            const std::vector<MetricsRow> rows =
                compute_metrics(orig, policies, full_emb, cluster_embs, eval_states,
                                env.start_state(), assignment);
            commit("metrics", "metrics/" + tag, "metrics_" + tag + ".csv",
                   [&](const std::string& p) { save_metrics_csv(rows, p); });
            pooled_rows.insert(pooled_rows.end(), rows.begin(), rows.end());

            std::vector<AttributionResult> results;
            results.reserve(eval_states.size());
            for (StateId s : eval_states)
                results.push_back(attribute(s, orig, policies, w_dists, assignment));
            commit("attribution", "attribution/" + tag, "attributions_" + tag + ".csv",
                   [&](const std::string& p) { save_attributions_csv(results, p); });
            if (si == 0) first_seed_results = std::move(results);
        }

        const BehaviorRegions regions = behavior_regions(cfg, env);
        const std::string behavior_text = behaviors_table(ds, assignment, env, regions);
        commit("behaviors", "behaviors", "behaviors.csv",
               [&](const std::string& p) { write_text_to(p, behavior_text); });

        const std::string first_tag = "seed" + std::to_string(cfg.seeds.front());
        const DistanceReport report =
            attribution_distance_report(env, first_seed_results, ds);
        commit("analyze-distance", "distance/" + first_tag, "distance_" + first_tag + ".csv",
               [&](const std::string& p) { save_distance_report_csv(report, p); });

        const auto [pearson_r, spearman_r] = correlation_isv_frequency(pooled_rows);
        {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "pearson,spearman\n%.17g,%.17g\n", pearson_r,
                          spearman_r);
            commit("correlate", "correlation", "correlation.csv",
                   [&](const std::string& p) { write_text_to(p, buf); });
        }

        save_manifest(m, join_path(dir, "manifest.txt"));
    } catch (...) {
        // Keep the record of what did complete; the exception still carries
        // the failing stage.
        try {
            save_manifest(m, join_path(dir, "manifest.txt"));
        } catch (...) {
        }
        throw;
    }
    return m;
}

namespace {

struct Agg {
    double mean = 0.0;
    double sd = 0.0;
};

Agg aggregate(const std::vector<double>& xs) {
    Agg a;
    for (double x : xs) a.mean += x;
    a.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - a.mean) * (x - a.mean);
        a.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return a;
}

std::string fmt6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void emit_tables(RunManifest& m, const std::string& out_dir) {
    std::vector<std::vector<MetricsRow>> per_seed;
    for (const StageRecord& r : m.stages)
        if (r.name.rfind("metrics/", 0) == 0)
            per_seed.push_back(load_metrics_csv(join_path(out_dir, r.path)));
    if (per_seed.empty()) throw ValidationError("manifest records no metrics to tabulate");

    const std::size_t n_rows = per_seed.front().size();
    for (const auto& rows : per_seed) {
        if (rows.size() != n_rows)
            throw ValidationError("metrics files disagree on the cluster count");
        for (std::size_t i = 0; i < n_rows; ++i)
            if (rows[i].cluster != per_seed.front()[i].cluster)
                throw ValidationError("metrics files disagree on cluster labels");
    }

    // Per-row aggregates over seeds, in metric order: isv, delta_q,
    // contrast, w_dist, freq.
    std::vector<std::array<Agg, 5>> stats(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        std::array<std::vector<double>, 5> cols;
        for (const auto& rows : per_seed) {
            cols[0].push_back(rows[i].isv);
            cols[1].push_back(rows[i].delta_q);
            cols[2].push_back(rows[i].action_contrast);
            cols[3].push_back(rows[i].w_dist);
            cols[4].push_back(rows[i].attribution_freq);
        }
        for (int f = 0; f < 5; ++f) stats[i][f] = aggregate(cols[f]);
    }

    std::array<double, 5> over_clusters{};
    std::size_t n_clusters = 0;
    for (std::size_t i = 0; i < n_rows; ++i) {
        if (!per_seed.front()[i].cluster) continue;
        for (int f = 0; f < 5; ++f) over_clusters[f] += stats[i][f].mean;
        ++n_clusters;
    }
    if (n_clusters == 0) throw ValidationError("metrics hold no cluster rows");
    for (int f = 0; f < 5; ++f) over_clusters[f] /= static_cast<double>(n_clusters);

    const std::array<double, 4> reference{kReferenceIsv, kReferenceDeltaQ, kReferenceContrast,
                                          kReferenceWdist};

    std::string csv =
        "cluster,isv_mean,isv_sd,delta_q_mean,delta_q_sd,contrast_mean,contrast_sd,"
        "w_dist_mean,w_dist_sd,freq_mean,freq_sd\n";
    for (std::size_t i = 0; i < n_rows; ++i) {
        const auto& c = per_seed.front()[i].cluster;
        csv += c ? std::to_string(*c) : "orig";
        for (int f = 0; f < 5; ++f)
            csv += "," + fmt6(stats[i][f].mean) + "," + fmt6(stats[i][f].sd);
        csv += "\n";
    }
    csv += "mean_over_clusters";
    for (int f = 0; f < 5; ++f) csv += "," + fmt6(over_clusters[f]) + ",";
    csv += "\nreference";
    for (int f = 0; f < 4; ++f) csv += "," + fmt6(reference[f]) + ",";
    csv += ",,\nabs_delta";
    for (int f = 0; f < 4; ++f)
        csv += "," + fmt6(std::abs(over_clusters[f] - reference[f])) + ",";
    csv += ",,\n";

    std::string txt = "trajectory attribution metrics (tool " + m.version + ", config " +
                      m.config_hash + ", " + std::to_string(per_seed.size()) + " seeds)\n\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-18s %-17s %-17s %-17s %-17s %-17s\n", "policy", "ISV",
                  "dQ", "contrast", "W_dist", "attr_freq");
    txt += buf;
    for (std::size_t i = 0; i < n_rows; ++i) {
        const auto& c = per_seed.front()[i].cluster;
        const std::string name = c ? "cluster " + std::to_string(*c) : "orig";
        txt += name + std::string(name.size() < 18 ? 18 - name.size() : 1, ' ');
        for (int f = 0; f < 5; ++f) {
            std::snprintf(buf, sizeof(buf), "%8.4f+-%6.4f ", stats[i][f].mean, stats[i][f].sd);
            txt += buf;
        }
        txt += "\n";
    }
    std::snprintf(buf, sizeof(buf),
                  "%-18s %8.4f          %8.4f          %8.4f          %8.4f          %8.4f\n",
                  "mean/clusters", over_clusters[0], over_clusters[1], over_clusters[2],
                  over_clusters[3], over_clusters[4]);
    txt += buf;
    std::snprintf(buf, sizeof(buf), "%-18s %8.4f          %8.4f          %8.4f          %8.4f\n",
                  "reference", reference[0], reference[1], reference[2], reference[3]);
    txt += buf;
    std::snprintf(buf, sizeof(buf), "%-18s %8.4f          %8.4f          %8.4f          %8.4f\n",
                  "|delta|", std::abs(over_clusters[0] - reference[0]),
                  std::abs(over_clusters[1] - reference[1]),
                  std::abs(over_clusters[2] - reference[2]),
                  std::abs(over_clusters[3] - reference[3]));
    txt += buf;

    write_artifact("tables", join_path(out_dir, "tables.csv"), csv);
    m.stages.push_back({"tables", "tables.csv", file_hash(join_path(out_dir, "tables.csv"))});
    write_artifact("tables", join_path(out_dir, "summary.txt"), txt);
    m.stages.push_back({"summary", "summary.txt", file_hash(join_path(out_dir, "summary.txt"))});
}

}  // namespace trajattr
