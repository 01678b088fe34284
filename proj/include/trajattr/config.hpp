#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trajattr/clustering.hpp"
#include "trajattr/datagen.hpp"
#include "trajattr/dynaq.hpp"
#include "trajattr/encoder.hpp"

namespace trajattr {

// Whole-experiment configuration, read from flat INI-style text: [section]
// headers, key = value lines, # or ; comments. Unknown sections or keys are
// errors so typos never silently fall back to defaults.
struct ExperimentConfig {
    std::string env_name = "gridworld7";
    std::string out_dir = "out";
    std::uint64_t data_seed = 0;               // dataset/encoder/clustering stream
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};  // policy-training seeds

    int n_trajectories = 60;
    GenConfig gen;                 // [data] plus its [agent] sub-config
    EncoderTrainConfig encoder;    // [encoder]
    std::string cluster_algorithm = "xmeans";  // or "dbscan"
    XMeansConfig xmeans;           // [cluster]
    DbscanConfig dbscan;           // [cluster]
    TrainConfig offline;           // [offline]: original + explanation policies

    // Behavior-region overrides; -1 keeps the layout-derived default.
    int top_right_row_max = -1;
    int top_right_col_min = -1;
    int middle_row_lo = -1, middle_row_hi = -1;
    int middle_col_lo = -1, middle_col_hi = -1;

    void validate() const;
    std::string hash() const;

    // Canonical snapshot: parses back to an equal config.
    std::string to_text() const;
    static ExperimentConfig from_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
};

}  // namespace trajattr
