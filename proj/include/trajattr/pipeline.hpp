#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajattr/analysis.hpp"
#include "trajattr/config.hpp"
#include "trajattr/gridworld.hpp"

namespace trajattr {

inline constexpr const char* kToolVersion = "0.1.0";

struct StageRecord {
    std::string name;  // stage identifier, e.g. "dataset" or "metrics/seed2"
    std::string path;  // artifact file, relative to the run directory
    std::string hash;  // content hash of the file bytes
    bool operator==(const StageRecord&) const = default;
};

// Provenance of one run. Every artifact's hash is recorded the moment it is
// written, before any later stage reads it. The timestamp is the only field
// that varies between identical runs, and it lives nowhere else.
struct RunManifest {
    std::string version;
    std::string config_hash;
    std::uint64_t data_seed = 0;
    std::string timestamp;
    std::vector<StageRecord> stages;

    // First record with this name, nullptr when absent.
    const StageRecord* find(const std::string& name) const;
};

void save_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

// Atomic text write: temp file in place, then rename, so a crash never
// leaves a half-written artifact under the final name.
void write_artifact(const std::string& stage, const std::string& path,
                    const std::string& content);

// Layout-derived defaults with any non-negative config override applied.
BehaviorRegions behavior_regions(const ExperimentConfig& cfg, const Environment& env);

// behaviors.csv text: per cluster the dominant behavior, its purity, the
// member count, and whether all members share one trajectory length.
std::string behaviors_table(const TrajectoryDataset& ds, const ClusterAssignment& a,
                            const Environment& env, const BehaviorRegions& regions);

// The whole chain: generate -> train encoder -> embed -> cluster ->
// complementary data embeddings -> per-seed explanation policies, metrics,
// attributions -> behavior / distance / correlation analyses. Every
// intermediate artifact is persisted under cfg.out_dir and recorded in the
// manifest, which is saved as manifest.txt (also on stage failure, with the
// stages completed so far).
RunManifest run_pipeline(const ExperimentConfig& cfg);

// Aggregates the manifest's per-seed metrics into tables.csv (per-cluster
// mean and sd over seeds, a mean-over-clusters row, and absolute deltas
// against the reference row) plus a human-readable summary.txt. Appends both
// records to the manifest. Throws ValidationError when the manifest holds no
// metrics records.
void emit_tables(RunManifest& m, const std::string& out_dir);

// Mean-over-clusters reference values the tables compare against:
// ISV, delta-Q, action contrast, Wasserstein distance.
inline constexpr double kReferenceIsv = 0.3029;
inline constexpr double kReferenceDeltaQ = 0.0230;
inline constexpr double kReferenceContrast = 0.0714;
inline constexpr double kReferenceWdist = 0.1098;

}  // namespace trajattr
