#include "doctest.h"

#include <cstdio>
#include <fstream>

#include "trajattr/config.hpp"
#include "trajattr/errors.hpp"

using namespace trajattr;

TEST_CASE("config text round trip preserves every field") {
    ExperimentConfig cfg;
    cfg.env_name = "fourroom11";
    cfg.out_dir = "runs/f11";
    cfg.data_seed = 42;
    cfg.seeds = {7, 8};
    cfg.n_trajectories = 300;
    cfg.gen.n_positive = 250;
    cfg.gen.n_negative = 50;
    cfg.gen.start_mode = StartMode::Uniform;
    cfg.gen.boost_states = {25, 32};
    cfg.gen.boost_fraction = 0.125;
    cfg.gen.negative_groups = 9;
    cfg.gen.max_traj_len = 120;
    cfg.gen.agent.episodes = 777;
    cfg.gen.agent.exploring_starts = true;
    cfg.encoder.epochs = 250;
    cfg.encoder.H = 12;
    cfg.cluster_algorithm = "dbscan";
    cfg.dbscan.eps = 1.5;
    cfg.offline.episodes = 123;
    cfg.offline.alpha = 0.2;
    cfg.middle_row_lo = 4;

    const ExperimentConfig back = ExperimentConfig::from_text(cfg.to_text());
    CHECK(back.env_name == cfg.env_name);
    CHECK(back.out_dir == cfg.out_dir);
    CHECK(back.data_seed == cfg.data_seed);
    CHECK(back.seeds == cfg.seeds);
    CHECK(back.n_trajectories == cfg.n_trajectories);
    CHECK(back.gen.n_positive == 250);
    CHECK(back.gen.start_mode == StartMode::Uniform);
    CHECK(back.gen.boost_states == std::vector<StateId>{25, 32});
    CHECK(back.gen.boost_fraction == 0.125);
    CHECK(back.gen.negative_groups == 9);
    CHECK(back.gen.agent.episodes == 777);
    CHECK(back.gen.agent.exploring_starts == true);
    CHECK(back.encoder.epochs == 250);
    CHECK(back.encoder.H == 12);
    CHECK(back.cluster_algorithm == "dbscan");
    CHECK(back.dbscan.eps == 1.5);
    CHECK(back.offline.episodes == 123);
    CHECK(back.offline.alpha == 0.2);
    CHECK(back.middle_row_lo == 4);
    CHECK(back.middle_row_hi == -1);
    CHECK(back.hash() == cfg.hash());
}

TEST_CASE("config parser accepts comments and mixed seed separators") {
    const std::string text = R"(
# experiment block
[experiment]
env = gridworld7      ; trailing comment
seeds = 1, 2, 3 4
n_trajectories = 60

[agent]
episodes = 99
)";
    const ExperimentConfig cfg = ExperimentConfig::from_text(text);
    CHECK(cfg.env_name == "gridworld7");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2, 3, 4});
    CHECK(cfg.n_trajectories == 60);
    CHECK(cfg.gen.agent.episodes == 99);
    // untouched sections keep defaults
    CHECK(cfg.encoder.H == 16);
    CHECK(cfg.cluster_algorithm == "xmeans");
}

TEST_CASE("config parser rejects malformed input with line numbers") {
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[experiment]\nwhat = 1\n"),
                         doctest::Contains("unknown key"), ValidationError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[nope]\n"),
                         doctest::Contains("unknown section"), ValidationError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("env = gridworld7\n"),
                         doctest::Contains("before any"), ValidationError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[experiment]\nenv gridworld7\n"),
                         doctest::Contains("key = value"), ValidationError);
    CHECK_THROWS_WITH_AS(
        ExperimentConfig::from_text("[experiment]\nn_trajectories = sixty\n"),
        doctest::Contains("line 2"), ValidationError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[experiment]\nn_trajectories = 60x\n"),
                         doctest::Contains("trailing junk"), ValidationError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[experiment]\nseeds =\n"),
                         doctest::Contains("seeds list is empty"), ValidationError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[cluster]\nalgorithm = birch\n"),
                         doctest::Contains("xmeans or dbscan"), ValidationError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_text("[data]\nstart_mode = sideways\n"),
                         doctest::Contains("line 2"), ValidationError);
}

TEST_CASE("config validation delegates to the stage configs") {
    ExperimentConfig cfg;
    cfg.validate();  // defaults are sound

    ExperimentConfig bad_gamma = cfg;
    bad_gamma.gen.agent.gamma = 1.5;
    CHECK_THROWS_AS(bad_gamma.validate(), ValidationError);

    ExperimentConfig bad_enc = cfg;
    bad_enc.encoder.batch_size = 0;
    CHECK_THROWS_AS(bad_enc.validate(), ValidationError);

    ExperimentConfig bad_k = cfg;
    bad_k.xmeans.k_min = 9;
    bad_k.xmeans.k_max = 3;
    CHECK_THROWS_AS(bad_k.validate(), ValidationError);

    ExperimentConfig no_seeds = cfg;
    no_seeds.seeds.clear();
    CHECK_THROWS_AS(no_seeds.validate(), ValidationError);

    ExperimentConfig bad_algo = cfg;
    bad_algo.cluster_algorithm = "birch";
    CHECK_THROWS_AS(bad_algo.validate(), ValidationError);
}

TEST_CASE("config file loading") {
    const std::string path = "cfg_rt.ini";
    {
        std::ofstream out(path);
        out << "[experiment]\nenv = fourroom11\nout_dir = elsewhere\n";
    }
    const ExperimentConfig cfg = ExperimentConfig::from_file(path);
    CHECK(cfg.env_name == "fourroom11");
    CHECK(cfg.out_dir == "elsewhere");
    std::remove(path.c_str());

    CHECK_THROWS_AS(ExperimentConfig::from_file("no_such_config.ini"), ValidationError);
}
