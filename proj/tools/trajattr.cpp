#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "trajattr/analysis.hpp"
#include "trajattr/attribution.hpp"
#include "trajattr/clustering.hpp"
#include "trajattr/config.hpp"
#include "trajattr/datagen.hpp"
#include "trajattr/dynaq.hpp"
#include "trajattr/embedding.hpp"
#include "trajattr/encoder.hpp"
#include "trajattr/errors.hpp"
#include "trajattr/gridworld.hpp"
#include "trajattr/hash.hpp"
#include "trajattr/pipeline.hpp"
#include "trajattr/render.hpp"
#include "trajattr/rng.hpp"
#include "trajattr/trajstore.hpp"

using namespace trajattr;

namespace {

struct GlobalFlags {
    std::string config_path;
    std::string out_override;
    std::optional<std::uint64_t> seed;
};

ExperimentConfig resolve_config(const GlobalFlags& g) {
    ExperimentConfig cfg =
        g.config_path.empty() ? ExperimentConfig{} : ExperimentConfig::from_file(g.config_path);
    if (!g.out_override.empty()) cfg.out_dir = g.out_override;
    if (g.seed) cfg.data_seed = *g.seed;
    cfg.validate();
    return cfg;
}

std::uint64_t policy_seed(const GlobalFlags& g, const ExperimentConfig& cfg) {
    return g.seed ? *g.seed : cfg.seeds.front();
}

std::string join(const std::string& dir, const std::string& rel) {
    return dir.empty() ? rel : dir + "/" + rel;
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw StageError("setup", "cannot create " + dir + ": " + ec.message());
}

// Atomic write through a module save function, then announce the artifact.
template <class Writer>
void commit_with(const std::string& stage, const std::string& path, const Writer& writer) {
    const std::string tmp = path + ".tmp";
    writer(tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw StageError(stage, "rename to " + path + " failed: " + ec.message());
    std::cout << "wrote " << path << "\n";
}

void commit_text(const std::string& stage, const std::string& path, const std::string& text) {
    write_artifact(stage, path, text);
    std::cout << "wrote " << path << "\n";
}

std::vector<StateId> eval_states_of(const Environment& env) {
    std::vector<StateId> out;
    for (StateId s : env.reachable_states())
        if (!env.is_terminal(s)) out.push_back(s);
    return out;
}

struct PolicyBundle {
    QTablePolicy orig;
    std::vector<QTablePolicy> per_cluster;
};

// Loads the persisted policies for this seed when every file is present;
// trains and persists them otherwise.
PolicyBundle ensure_policies(const Environment& env, const TrajectoryDataset& ds,
                             const ClusterAssignment& a, const ExperimentConfig& cfg,
                             std::uint64_t seed, const std::string& dir) {
    const std::string tag = "seed" + std::to_string(seed);
    const std::string orig_path = join(dir, "policy_" + tag + "_orig.csv");
    std::vector<std::string> cluster_paths;
    for (int j = 0; j < a.k; ++j)
        cluster_paths.push_back(join(dir, "policy_" + tag + "_c" + std::to_string(j) + ".csv"));

    bool cached = std::filesystem::exists(orig_path);
    for (const std::string& p : cluster_paths) cached = cached && std::filesystem::exists(p);

    TrainConfig oc = cfg.offline;
    oc.seed = seed;
    PolicyBundle b;
    if (cached) {
        b.orig = load_policy_csv(orig_path, env, oc.alpha, oc.gamma);
        for (const std::string& p : cluster_paths)
            b.per_cluster.push_back(load_policy_csv(p, env, oc.alpha, oc.gamma));
        std::cout << "reusing cached policies for " << tag << "\n";
        return b;
    }
    b.orig = train_offline(env, ds, oc);
    commit_with("policies", orig_path, [&](const std::string& p) { save_policy_csv(b.orig, p); });
    b.per_cluster = train_explanation_policies(env, ds, a, oc);
    for (std::size_t j = 0; j < b.per_cluster.size(); ++j)
        commit_with("policies", cluster_paths[j],
                    [&](const std::string& p) { save_policy_csv(b.per_cluster[j], p); });
    return b;
}

std::vector<double> cluster_distances(const DataEmbedding& full,
                                      const std::vector<DataEmbedding>& per_cluster) {
    std::vector<double> w;
    w.reserve(per_cluster.size());
    for (const DataEmbedding& e : per_cluster) w.push_back(wasserstein1(full, e));
    return w;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trajectory attribution for offline grid-world RL"};
    app.require_subcommand(1);

    GlobalFlags g;
    app.add_option("--config", g.config_path, "experiment config file (INI)");
    app.add_option("--out", g.out_override, "output directory override");
    app.add_option("--seed", g.seed,
                   "seed override: data seed for data stages, policy seed for policy stages");

    auto* cmd_gen = app.add_subcommand("gen-data", "train data agents and collect trajectories");
    cmd_gen->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        ensure_out_dir(cfg.out_dir);
        const TrajectoryDataset ds =
            generate_dataset(env, cfg.env_name, cfg.n_trajectories, cfg.gen, cfg.data_seed);
        commit_with("gen-data", join(cfg.out_dir, "dataset.csv"),
                    [&](const std::string& p) { save_dataset(ds, p); });
        std::cout << ds.trajectories.size() << " trajectories on " << cfg.env_name << "\n";
    });

    auto* cmd_enc = app.add_subcommand("train-encoder", "fit the trajectory autoencoder");
    cmd_enc->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const TrajectoryDataset ds =
            load_dataset(join(cfg.out_dir, "dataset.csv"), env, cfg.env_name);
        std::vector<TokenSequence> seqs;
        for (const Trajectory& t : ds.trajectories) seqs.push_back(tokenize(t, env));
        EncoderTrainConfig ec = cfg.encoder;
        ec.seed = cfg.data_seed;
        const auto [params, losses] =
            train_autoencoder(init_params(vocab_size(env), ec.H, ec.E, ec.seed), seqs, ec);
        commit_with("train-encoder", join(cfg.out_dir, "encoder.csv"),
                    [&](const std::string& p) { save_params(params, p); });
        std::string text = "epoch,loss\n";
        char buf[64];
        for (std::size_t e = 0; e < losses.size(); ++e) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, losses[e]);
            text += buf;
        }
        commit_text("train-encoder", join(cfg.out_dir, "encoder_loss.csv"), text);
        std::cout << "final reconstruction loss " << losses.back() << "\n";
    });

    auto* cmd_embed = app.add_subcommand("embed", "embed every trajectory");
    cmd_embed->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const TrajectoryDataset ds =
            load_dataset(join(cfg.out_dir, "dataset.csv"), env, cfg.env_name);
        const EncoderParams params = load_params(join(cfg.out_dir, "encoder.csv"));
        std::vector<TokenSequence> seqs;
        for (const Trajectory& t : ds.trajectories) seqs.push_back(tokenize(t, env));
        const std::vector<TrajectoryEmbedding> embs = embed_all(params, seqs);
        commit_with("embed", join(cfg.out_dir, "embeddings.csv"),
                    [&](const std::string& p) { save_embeddings_csv(embs, p); });
    });

    auto* cmd_cluster = app.add_subcommand("cluster", "cluster the trajectory embeddings");
    cmd_cluster->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const TrajectoryDataset ds =
            load_dataset(join(cfg.out_dir, "dataset.csv"), env, cfg.env_name);
        const std::vector<TrajectoryEmbedding> embs =
            load_embeddings_csv(join(cfg.out_dir, "embeddings.csv"));
        std::vector<Point> points;
        for (const TrajectoryEmbedding& e : embs) points.push_back(e.values);
        const ClusterAssignment a = cfg.cluster_algorithm == "xmeans"
                                        ? xmeans(points, cfg.xmeans)
                                        : dbscan(points, cfg.dbscan);
        commit_with("cluster", join(cfg.out_dir, "assignment.csv"),
                    [&](const std::string& p) { save_assignment_csv(a, p); });
        const std::vector<ComplementarySet> sets = complementary_sets(ds, a);
        const DataEmbedding full = set_embedding(embs, sets[0]);
        std::vector<DataEmbedding> per_cluster;
        for (std::size_t j = 1; j < sets.size(); ++j)
            per_cluster.push_back(set_embedding(embs, sets[j]));
        commit_with("cluster", join(cfg.out_dir, "data_embeddings.csv"), [&](const std::string& p) {
            save_data_embeddings_csv(full, per_cluster, p);
        });
        std::vector<int> sizes(static_cast<std::size_t>(a.k), 0);
        int noise = 0;
        for (int l : a.labels) (l < 0 ? noise : sizes[static_cast<std::size_t>(l)])++;
        std::cout << a.k << " clusters (" << cfg.cluster_algorithm << "); sizes:";
        for (int s : sizes) std::cout << " " << s;
        if (noise) std::cout << "; noise " << noise;
        std::cout << "\n";
    });

    auto* cmd_metrics = app.add_subcommand("metrics", "explanation policies and their metric table");
    cmd_metrics->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const std::string dir = cfg.out_dir;
        const TrajectoryDataset ds = load_dataset(join(dir, "dataset.csv"), env, cfg.env_name);
        const ClusterAssignment a = load_assignment_csv(join(dir, "assignment.csv"));
        const auto [full, per_cluster] = load_data_embeddings_csv(join(dir, "data_embeddings.csv"));
        const std::uint64_t seed = policy_seed(g, cfg);
        const PolicyBundle b = ensure_policies(env, ds, a, cfg, seed, dir);
        const std::vector<MetricsRow> rows =
            compute_metrics(b.orig, b.per_cluster, full, per_cluster, eval_states_of(env),
                            env.start_state(), a);
        commit_with("metrics", join(dir, "metrics_seed" + std::to_string(seed) + ".csv"),
                    [&](const std::string& p) { save_metrics_csv(rows, p); });
        char buf[160];
        for (const MetricsRow& r : rows) {
            const std::string key = r.cluster ? "cluster " + std::to_string(*r.cluster) : "orig";
            std::snprintf(buf, sizeof(buf),
                          "%-10s isv %.4f  dq %.4f  contrast %.4f  wdist %.4f  freq %.4f\n",
                          key.c_str(), r.isv, r.delta_q, r.action_contrast, r.w_dist,
                          r.attribution_freq);
            std::cout << buf;
        }
    });

    auto* cmd_attr = app.add_subcommand("attribute", "attribute decisions to clusters");
    std::optional<int> attr_state;
    cmd_attr->add_option("--state", attr_state, "also print the attribution of this state id");
    cmd_attr->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const std::string dir = cfg.out_dir;
        const TrajectoryDataset ds = load_dataset(join(dir, "dataset.csv"), env, cfg.env_name);
        const ClusterAssignment a = load_assignment_csv(join(dir, "assignment.csv"));
        const auto [full, per_cluster] = load_data_embeddings_csv(join(dir, "data_embeddings.csv"));
        const std::uint64_t seed = policy_seed(g, cfg);
        const PolicyBundle b = ensure_policies(env, ds, a, cfg, seed, dir);
        const std::vector<double> w = cluster_distances(full, per_cluster);
        std::vector<AttributionResult> results;
        for (StateId s : eval_states_of(env))
            results.push_back(attribute(s, b.orig, b.per_cluster, w, a));
        commit_with("attribute", join(dir, "attributions_seed" + std::to_string(seed) + ".csv"),
                    [&](const std::string& p) { save_attributions_csv(results, p); });
        int attributed = 0;
        for (const AttributionResult& r : results) attributed += r.attributed_cluster ? 1 : 0;
        std::cout << attributed << " of " << results.size() << " states attributed\n";
        if (attr_state) {
            const auto it = std::find_if(results.begin(), results.end(),
                                         [&](const auto& r) { return r.state == *attr_state; });
            if (it == results.end())
                throw ValidationError("state " + std::to_string(*attr_state) +
                                      " is not an evaluation state");
            const Cell c = env.cell_of(it->state);
            std::cout << "state " << it->state << " (" << c.row << "," << c.col << "): original "
                      << action_name(it->original_action);
            if (it->attributed_cluster)
                std::cout << ", attributed to cluster " << *it->attributed_cluster << " ("
                          << it->attributed_trajectories.size() << " trajectories)";
            else
                std::cout << ", no explanation policy changes the action";
            std::cout << "\n";
        }
    });

    auto* cmd_dist = app.add_subcommand("analyze-distance",
                                        "distance from attributed trajectories to their states");
    cmd_dist->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const std::string dir = cfg.out_dir;
        const TrajectoryDataset ds = load_dataset(join(dir, "dataset.csv"), env, cfg.env_name);
        const std::uint64_t seed = policy_seed(g, cfg);
        const std::string tag = "seed" + std::to_string(seed);
        const std::vector<AttributionResult> results =
            load_attributions_csv(join(dir, "attributions_" + tag + ".csv"));
        const DistanceReport report = attribution_distance_report(env, results, ds);
        commit_with("analyze-distance", join(dir, "distance_" + tag + ".csv"),
                    [&](const std::string& p) { save_distance_report_csv(report, p); });
        std::cout << report.per_state.size() << " attributed states; bins [0,3) " << report.bins[0]
                  << ", [3,6) " << report.bins[1] << ", [6,9) " << report.bins[2] << ", [9,inf) "
                  << report.bins[3] << "; unreachable points " << report.unreachable_points
                  << "\n";
    });

    auto* cmd_beh = app.add_subcommand("behaviors", "dominant behavior and purity per cluster");
    cmd_beh->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const std::string dir = cfg.out_dir;
        const TrajectoryDataset ds = load_dataset(join(dir, "dataset.csv"), env, cfg.env_name);
        const ClusterAssignment a = load_assignment_csv(join(dir, "assignment.csv"));
        const std::string text = behaviors_table(ds, a, env, behavior_regions(cfg, env));
        commit_text("behaviors", join(dir, "behaviors.csv"), text);
        std::cout << text;
    });

    auto* cmd_corr = app.add_subcommand("correlate", "attribution frequency vs ISV correlation");
    cmd_corr->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const std::string dir = cfg.out_dir;
        std::vector<MetricsRow> pooled;
        int files = 0;
        for (std::uint64_t s : cfg.seeds) {
            const std::string path = join(dir, "metrics_seed" + std::to_string(s) + ".csv");
            if (!std::filesystem::exists(path)) continue;
            const std::vector<MetricsRow> rows = load_metrics_csv(path);
            pooled.insert(pooled.end(), rows.begin(), rows.end());
            ++files;
        }
        if (files == 0)
            throw ValidationError("no metrics files under " + dir + "; run metrics first");
        const auto [pearson_r, spearman_r] = correlation_isv_frequency(pooled);
        char buf[96];
        std::snprintf(buf, sizeof(buf), "pearson,spearman\n%.17g,%.17g\n", pearson_r, spearman_r);
        commit_text("correlate", join(dir, "correlation.csv"), buf);
        std::cout << "over " << files << " seeds: pearson " << pearson_r << ", spearman "
                  << spearman_r << "\n";
    });

    auto* cmd_stim = app.add_subcommand("stimuli", "study stimulus set for one state");
    int stim_state = -1;
    cmd_stim->add_option("--state", stim_state, "state id to build the stimulus for")->required();
    cmd_stim->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const std::string dir = cfg.out_dir;
        const TrajectoryDataset ds = load_dataset(join(dir, "dataset.csv"), env, cfg.env_name);
        const ClusterAssignment a = load_assignment_csv(join(dir, "assignment.csv"));
        const std::uint64_t seed = policy_seed(g, cfg);
        const std::string tag = "seed" + std::to_string(seed);
        const std::vector<AttributionResult> results =
            load_attributions_csv(join(dir, "attributions_" + tag + ".csv"));
        const auto it = std::find_if(results.begin(), results.end(),
                                     [&](const auto& r) { return r.state == stim_state; });
        if (it == results.end())
            throw ValidationError("state " + std::to_string(stim_state) +
                                  " has no attribution row; run attribute first");
        rng::Engine eng = rng::make_engine(seed, "stimuli", static_cast<std::uint64_t>(stim_state));
        const StimulusSet stim = build_stimulus(*it, ds, a, eng);
        std::string text = "position,trajectory,is_attributed\n";
        for (int i = 0; i < 4; ++i)
            text += std::to_string(i) + "," + std::to_string(stim.presentation[i]) + "," +
                    (stim.is_attributed[i] ? "1" : "0") + "\n";
        commit_text("stimuli",
                    join(dir, "stimulus_" + tag + "_state" + std::to_string(stim_state) + ".csv"),
                    text);
        std::cout << "state " << stim_state << " presentation:";
        for (int i = 0; i < 4; ++i) std::cout << " " << stim.presentation[i];
        std::cout << "\n";
    });

    auto* cmd_render = app.add_subcommand("render", "draw the grid and trajectories as SVG");
    std::optional<int> render_state;
    std::vector<int> render_trajs;
    int render_cell_px = 40;
    std::string render_out;
    cmd_render->add_option("--state", render_state, "highlight this state; without --traj, draw "
                                                    "its attributed trajectories");
    cmd_render->add_option("--traj", render_trajs, "dataset trajectory indices to draw")
        ->delimiter(',');
    cmd_render->add_option("--cell-px", render_cell_px, "cell edge in pixels");
    cmd_render->add_option("--svg", render_out, "output file (default render.svg in out dir)");
    cmd_render->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        const Environment env(GridSpec::builtin(cfg.env_name));
        const std::string dir = cfg.out_dir;
        const TrajectoryDataset ds = load_dataset(join(dir, "dataset.csv"), env, cfg.env_name);
        std::vector<int> indices = render_trajs;
        if (indices.empty() && render_state) {
            const std::uint64_t seed = policy_seed(g, cfg);
            const std::vector<AttributionResult> results = load_attributions_csv(
                join(dir, "attributions_seed" + std::to_string(seed) + ".csv"));
            const auto it = std::find_if(results.begin(), results.end(),
                                         [&](const auto& r) { return r.state == *render_state; });
            if (it == results.end())
                throw ValidationError("state " + std::to_string(*render_state) +
                                      " has no attribution row; run attribute first");
            indices = it->attributed_trajectories;
        }
        std::vector<Trajectory> trajs;
        for (int i : indices) {
            if (i < 0 || i >= static_cast<int>(ds.trajectories.size()))
                throw ValidationError("trajectory index " + std::to_string(i) + " out of range");
            trajs.push_back(ds.trajectories[static_cast<std::size_t>(i)]);
        }
        RenderOptions opts;
        opts.cell_px = render_cell_px;
        if (render_state) opts.query_state = *render_state;
        const std::string svg = render_grid(env, trajs, opts);
        std::string path = render_out;
        if (path.empty())
            path = join(dir, render_state ? "render_state" + std::to_string(*render_state) + ".svg"
                                          : "render.svg");
        ensure_out_dir(std::filesystem::path(path).parent_path().string());
        save_svg(svg, path);
        std::cout << "wrote " << path << " (" << trajs.size() << " trajectories)\n";
    });

    auto* cmd_all = app.add_subcommand("run-all", "full pipeline plus summary tables");
    cmd_all->callback([&] {
        const ExperimentConfig cfg = resolve_config(g);
        RunManifest m = run_pipeline(cfg);
        emit_tables(m, cfg.out_dir);
        save_manifest(m, join(cfg.out_dir, "manifest.txt"));
        std::cout << m.stages.size() << " stages recorded in " << join(cfg.out_dir, "manifest.txt")
                  << "\n\n"
                  << slurp(join(cfg.out_dir, "summary.txt"));
    });

    // let --config/--out/--seed appear after the subcommand too
    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
