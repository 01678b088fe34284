#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "trajattr/datagen.hpp"
#include "trajattr/encoder.hpp"
#include "trajattr/errors.hpp"
#include "trajattr/rng.hpp"

using namespace trajattr;

namespace {

// Hand-rolled cell, plain loops only, used as the oracle the library's
// kernel-based forward pass has to match.
struct NaiveCell {
    int H, E;
    const double *wz, *wr, *wh, *uz, *ur, *uh, *bz, *br, *bh;

    std::vector<double> step(const std::vector<double>& x, const std::vector<double>& h) const {
        auto gate = [&](const double* w, const double* u, const double* b,
                        const std::vector<double>& hin) {
            std::vector<double> a(static_cast<std::size_t>(H), 0.0);
            for (int i = 0; i < H; ++i) {
                double acc = b[i];
                if (!x.empty())
                    for (int j = 0; j < E; ++j) acc += w[i * E + j] * x[static_cast<std::size_t>(j)];
                for (int j = 0; j < H; ++j) acc += u[i * H + j] * hin[static_cast<std::size_t>(j)];
                a[static_cast<std::size_t>(i)] = acc;
            }
            return a;
        };
        const auto az = gate(wz, uz, bz, h);
        const auto ar = gate(wr, ur, br, h);
        std::vector<double> z(static_cast<std::size_t>(H)), r(static_cast<std::size_t>(H));
        for (int i = 0; i < H; ++i) {
            z[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-az[static_cast<std::size_t>(i)]));
            r[static_cast<std::size_t>(i)] = 1.0 / (1.0 + std::exp(-ar[static_cast<std::size_t>(i)]));
        }
        std::vector<double> rh(static_cast<std::size_t>(H));
        for (int i = 0; i < H; ++i) rh[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i)] * h[static_cast<std::size_t>(i)];
        const auto ah = gate(wh, uh, bh, rh);
        std::vector<double> out(static_cast<std::size_t>(H));
        for (int i = 0; i < H; ++i) {
            const double g = std::tanh(ah[static_cast<std::size_t>(i)]);
            out[static_cast<std::size_t>(i)] =
                (1.0 - z[static_cast<std::size_t>(i)]) * h[static_cast<std::size_t>(i)] +
                z[static_cast<std::size_t>(i)] * g;
        }
        return out;
    }
};

NaiveCell encoder_cell_view(const EncoderParams& p) {
    const double* t = p.theta.data();
    const std::size_t he = static_cast<std::size_t>(p.H) * static_cast<std::size_t>(p.E);
    const std::size_t hh = static_cast<std::size_t>(p.H) * static_cast<std::size_t>(p.H);
    const std::size_t base = p.off_enc();
    return {p.H,
            p.E,
            t + base,
            t + base + he,
            t + base + 2 * he,
            t + base + 3 * he,
            t + base + 3 * he + hh,
            t + base + 3 * he + 2 * hh,
            t + base + 3 * he + 3 * hh,
            t + base + 3 * he + 3 * hh + static_cast<std::size_t>(p.H),
            t + base + 3 * he + 3 * hh + 2 * static_cast<std::size_t>(p.H)};
}

std::vector<double> emb_row(const EncoderParams& p, int tok) {
    const double* r = p.wemb_row(tok);
    return std::vector<double>(r, r + p.E);
}

TokenSequence seq(std::vector<int> ids, int vocab) {
    TokenSequence s;
    s.tokens = std::move(ids);
    s.vocab = vocab;
    return s;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/trajattr_enc_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

double rel_err(double a, double b) {
    return std::fabs(a - b) / std::max({1e-6, std::fabs(a), std::fabs(b)});
}

}  // namespace

TEST_CASE("init_params is deterministic, shaped, and seed-sensitive") {
    const EncoderParams a = init_params(10, 4, 3, 42);
    const EncoderParams b = init_params(10, 4, 3, 42);
    CHECK(a.theta == b.theta);
    CHECK(a.vocab == 10);
    // wemb 30, cells 2*(3*12 + 3*16 + 3*4) = 2*96, wout 40, bout 10
    CHECK(a.theta.size() == 30 + 2 * 96 + 40 + 10);

    const EncoderParams c = init_params(10, 4, 3, 43);
    CHECK(a.theta != c.theta);

    // bounds respected: token table rows within 1/sqrt(vocab)
    const double bound = 1.0 / std::sqrt(10.0);
    for (int t = 0; t < 10; ++t)
        for (int j = 0; j < 3; ++j) CHECK(std::fabs(a.wemb_row(t)[j]) <= bound);

    CHECK_THROWS_AS(init_params(1, 4, 3, 0), ValidationError);
    CHECK_THROWS_AS(init_params(10, 1, 3, 0), ValidationError);
}

TEST_CASE("embedding equals the mean of naive per-step hidden states") {
    const EncoderParams p = init_params(12, 5, 4, 7);
    const NaiveCell cell = encoder_cell_view(p);
    const TokenSequence s = seq({3, 1, 4, 1, 5, 9, 2, 6}, 12);

    std::vector<double> h(5, 0.0), mean(5, 0.0);
    for (int tok : s.tokens) {
        h = cell.step(emb_row(p, tok), h);
        for (int i = 0; i < 5; ++i) mean[static_cast<std::size_t>(i)] += h[static_cast<std::size_t>(i)];
    }
    for (double& m : mean) m /= static_cast<double>(s.tokens.size());

    const TrajectoryEmbedding e = embed_trajectory(p, s);
    REQUIRE(e.values.size() == 5);
    for (int i = 0; i < 5; ++i)
        CHECK(std::fabs(e.values[static_cast<std::size_t>(i)] - mean[static_cast<std::size_t>(i)]) < 1e-12);
}

TEST_CASE("single-token embedding is exactly that step's hidden state") {
    const EncoderParams p = init_params(8, 4, 3, 1);
    const NaiveCell cell = encoder_cell_view(p);
    const auto h1 = cell.step(emb_row(p, 5), std::vector<double>(4, 0.0));
    const TrajectoryEmbedding e = embed_trajectory(p, seq({5}, 8));
    for (int i = 0; i < 4; ++i)
        CHECK(e.values[static_cast<std::size_t>(i)] ==
              doctest::Approx(h1[static_cast<std::size_t>(i)]).epsilon(1e-15));

    CHECK_THROWS_AS(embed_trajectory(p, seq({}, 8)), ValidationError);
    CHECK_THROWS_AS(embed_trajectory(p, seq({8}, 8)), ValidationError);
}

TEST_CASE("uniform logits give loss ln(vocab)") {
    EncoderParams p = init_params(11, 4, 3, 3);
    // silence the output layer; every step then predicts the uniform distribution
    for (std::size_t i = p.off_wout(); i < p.theta.size(); ++i) p.theta[i] = 0.0;
    const double loss = reconstruction_loss(p, seq({1, 2, 3, 4, 5}, 11));
    CHECK(loss == doctest::Approx(std::log(11.0)).epsilon(1e-12));
}

TEST_CASE("reconstruction_loss equals loss_and_gradient's loss") {
    const EncoderParams p = init_params(9, 5, 3, 11);
    const TokenSequence s = seq({0, 8, 3, 3, 7}, 9);
    std::vector<double> g;
    CHECK(reconstruction_loss(p, s) == doctest::Approx(loss_and_gradient(p, s, g)).epsilon(1e-14));
}

TEST_CASE("analytic gradient matches central finite differences") {
    rng::Engine eng = rng::make_engine(5, "fd-cases", 0);
    for (int inst = 0; inst < 3; ++inst) {
        const int vocab = 8;
        EncoderParams p = init_params(vocab, 3, 3, 100 + static_cast<std::uint64_t>(inst));
        std::vector<int> ids;
        const int T = inst == 0 ? 1 : 2;  // include the single-step edge
        for (int t = 0; t < 3 * T; ++t)
            ids.push_back(static_cast<int>(rng::uniform_below(eng, vocab)));
        const TokenSequence s = seq(ids, vocab);

        std::vector<double> grad;
        loss_and_gradient(p, s, grad);
        REQUIRE(grad.size() == p.theta.size());

        const double h = 1e-5;
        double worst = 0.0;
        for (std::size_t i = 0; i < p.theta.size(); ++i) {
            const double keep = p.theta[i];
            p.theta[i] = keep + h;
            const double up = reconstruction_loss(p, s);
            p.theta[i] = keep - h;
            const double dn = reconstruction_loss(p, s);
            p.theta[i] = keep;
            const double fd = (up - dn) / (2.0 * h);
            worst = std::max(worst, rel_err(grad[i], fd));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("zero learning rate leaves params untouched") {
    const EncoderParams p = init_params(8, 4, 3, 2);
    EncoderTrainConfig cfg;
    cfg.epochs = 3;
    cfg.learning_rate = 0.0;
    cfg.H = 4;
    cfg.E = 3;
    const std::vector<TokenSequence> data{seq({1, 2, 3}, 8), seq({4, 5}, 8)};
    const auto [trained, curve] = train_autoencoder(p, data, cfg);
    CHECK(trained.theta == p.theta);
    CHECK(curve.size() == 3);
}

TEST_CASE("training is deterministic and the loss comes down") {
    // A tiny language: three repeated motifs over a 10-token vocab.
    std::vector<TokenSequence> data;
    for (int rep = 0; rep < 4; ++rep) {
        data.push_back(seq({1, 2, 3, 1, 2, 3}, 10));
        data.push_back(seq({7, 7, 4, 7, 7, 4}, 10));
        data.push_back(seq({9, 0, 9, 0, 9, 0}, 10));
    }
    EncoderTrainConfig cfg;
    cfg.epochs = 40;
    cfg.H = 8;
    cfg.E = 4;
    cfg.batch_size = 4;
    cfg.seed = 12;
    const EncoderParams p0 = init_params(10, cfg.H, cfg.E, cfg.seed);

    const auto [p1, curve1] = train_autoencoder(p0, data, cfg);
    const auto [p2, curve2] = train_autoencoder(p0, data, cfg);
    CHECK(curve1 == curve2);
    CHECK(p1.theta == p2.theta);

    REQUIRE(curve1.size() == 40);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 10; ++i) {
        head += curve1[static_cast<std::size_t>(i)];
        tail += curve1[curve1.size() - 1 - static_cast<std::size_t>(i)];
    }
    CHECK(tail < head);
    CHECK(curve1.back() < curve1.front());
    CHECK(curve1.back() < 0.2);  // three motifs are easy to memorize
}

TEST_CASE("trained on a 60-trajectory grid dataset the loss drops under 0.10") {
    Environment env(GridSpec::builtin("gridworld7"));
    GenConfig gc;
    gc.agent.episodes = 300;
    gc.max_traj_len = 80;
    const auto ds = generate_dataset(env, "gridworld7", 60, gc, 0);
    std::vector<TokenSequence> seqs;
    for (const auto& t : ds.trajectories) seqs.push_back(tokenize(t, env));

    EncoderTrainConfig cfg;
    cfg.epochs = 300;
    const auto p0 = init_params(vocab_size(env), cfg.H, cfg.E, cfg.seed);
    const auto [p, curve] = train_autoencoder(p0, seqs, cfg);
    CHECK(curve.back() <= 0.10);

    // the first stretch of training trends downward
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 5; ++i) {
        head += curve[static_cast<std::size_t>(i)];
        tail += curve[static_cast<std::size_t>(5 + i)];
    }
    CHECK(tail < head);
}

TEST_CASE("mismatched config shape is rejected and bad losses abort") {
    const EncoderParams p = init_params(8, 4, 3, 2);
    EncoderTrainConfig cfg;
    cfg.H = 5;  // params were built with H=4
    cfg.E = 3;
    CHECK_THROWS_AS(train_autoencoder(p, {seq({1}, 8)}, cfg), ValidationError);

    EncoderParams broken = p;
    // a colossal bias drives the target's probability to exactly zero
    broken.theta[broken.off_bout()] = 1e4;
    EncoderTrainConfig ok;
    ok.H = 4;
    ok.E = 3;
    ok.epochs = 1;
    CHECK_THROWS_AS(train_autoencoder(broken, {seq({3, 2}, 8)}, ok), StageError);
}

TEST_CASE("params binary round trip is exact") {
    const EncoderParams p = init_params(20, 6, 4, 77);
    TempFile f("params.bin");
    save_params(p, f.path);
    const EncoderParams back = load_params(f.path);
    CHECK(back.vocab == p.vocab);
    CHECK(back.H == p.H);
    CHECK(back.E == p.E);
    CHECK(back.theta == p.theta);

    TempFile g("not_params.bin");
    {
        std::FILE* fh = std::fopen(g.path.c_str(), "wb");
        std::fputs("garbage", fh);
        std::fclose(fh);
    }
    CHECK_THROWS_AS(load_params(g.path), ValidationError);
}

TEST_CASE("embeddings CSV round trip") {
    const EncoderParams p = init_params(10, 4, 3, 5);
    std::vector<TokenSequence> seqs{seq({1, 2, 3}, 10), seq({4, 5, 6, 7}, 10)};
    const auto embs = embed_all(p, seqs);
    REQUIRE(embs.size() == 2);
    CHECK(embs[0].source_traj == 0);
    CHECK(embs[1].source_traj == 1);

    TempFile f("embs.csv");
    save_embeddings_csv(embs, f.path);
    const auto back = load_embeddings_csv(f.path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].source_traj == embs[i].source_traj);
        REQUIRE(back[i].values.size() == embs[i].values.size());
        for (std::size_t j = 0; j < embs[i].values.size(); ++j)
            CHECK(back[i].values[j] == embs[i].values[j]);
    }
}
