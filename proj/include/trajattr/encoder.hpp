#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "trajattr/trajstore.hpp"

namespace trajattr {

struct EncoderTrainConfig {
    int epochs = 100;
    double learning_rate = 0.01;
    int batch_size = 8;
    int H = 16;  // latent width
    int E = 8;   // token embedding width
    std::uint64_t seed = 0;

    void validate() const;
    std::string hash() const;
};

// Recurrent autoencoder over token sequences. One gated recurrent cell
// (update + reset gates) encodes; a second one decodes teacher-forced with a
// zero start-of-sequence input, sharing the token embedding table. The cell,
// for input x and previous hidden h:
//   z = sigmoid(Wz x + Uz h + bz)         update gate
//   r = sigmoid(Wr x + Ur h + br)         reset gate
//   g = tanh(Wh x + Uh (r*h) + bh)        candidate
//   h' = (1-z)*h + z*g
// The decoder starts from the encoder's final hidden state; step t consumes
// the embedding of target token t-1 (zero vector at t=1) and predicts target
// token t through a vocab x H output projection. All weights live in one
// flat vector so updates, gradients, and serialization walk a single
// documented layout:
//   wemb            vocab x E
//   encoder  wz wr wh   H x E    (input weights)
//            uz ur uh   H x H    (recurrent weights)
//            bz br bh   H        (biases)
//   decoder  dz dr dh   H x E
//            vz vr vh   H x H
//            cz cr ch   H
//   wout            vocab x H
//   bout            vocab
struct EncoderParams {
    int vocab = 0;
    int H = 0;
    int E = 0;
    std::vector<double> theta;

    std::size_t n_params() const { return theta.size(); }

    // Offsets into theta, in layout order.
    std::size_t off_wemb() const { return 0; }
    std::size_t off_enc() const;   // start of the encoder block
    std::size_t off_dec() const;   // start of the decoder block
    std::size_t off_wout() const;
    std::size_t off_bout() const;

    double* wemb_row(int token);
    const double* wemb_row(int token) const;
};

struct TrajectoryEmbedding {
    std::vector<double> values;  // length H
    int source_traj = -1;
    bool operator==(const TrajectoryEmbedding&) const = default;
};

EncoderParams init_params(int vocab, int H, int E, std::uint64_t seed);

TrajectoryEmbedding embed_trajectory(const EncoderParams& params, const TokenSequence& tokens);

std::vector<TrajectoryEmbedding> embed_all(const EncoderParams& params,
                                           const std::vector<TokenSequence>& seqs);

double reconstruction_loss(const EncoderParams& params, const TokenSequence& tokens);

// Loss and dL/dtheta for one sequence, exact backpropagation through time.
double loss_and_gradient(const EncoderParams& params, const TokenSequence& tokens,
                         std::vector<double>& grad);

// Adam steps on the mean batch gradient. Returns the trained params and the
// per-epoch mean reconstruction loss (measured as batches are visited).
std::pair<EncoderParams, std::vector<double>> train_autoencoder(
    const EncoderParams& params, const std::vector<TokenSequence>& seqs,
    const EncoderTrainConfig& cfg);

void save_params(const EncoderParams& params, const std::string& path);
EncoderParams load_params(const std::string& path);

void save_embeddings_csv(const std::vector<TrajectoryEmbedding>& embs, const std::string& path);
std::vector<TrajectoryEmbedding> load_embeddings_csv(const std::string& path);

}  // namespace trajattr
