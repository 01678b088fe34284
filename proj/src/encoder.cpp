#include "trajattr/encoder.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "trajattr/errors.hpp"
#include "trajattr/hash.hpp"
#include "trajattr/kernels.hpp"
#include "trajattr/rng.hpp"

namespace trajattr {

void EncoderTrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be at least 1");
    if (learning_rate < 0.0 || learning_rate > 1.0)
        throw ValidationError("learning_rate must be in [0,1]");
    if (batch_size < 1) throw ValidationError("batch_size must be at least 1");
    if (H < 2) throw ValidationError("H must be at least 2");
    if (E < 1) throw ValidationError("E must be at least 1");
}

std::string EncoderTrainConfig::hash() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "epochs=%d;lr=%.17g;batch=%d;H=%d;E=%d;seed=%llu",
                  epochs, learning_rate, batch_size, H, E,
                  static_cast<unsigned long long>(seed));
    return content_hash(buf);
}

namespace {

struct Off {
    std::size_t wemb;
    std::size_t wz, wr, wh, uz, ur, uh, bz, br, bh;  // encoder cell
    std::size_t dz, dr, dh, vz, vr, vh, cz, cr, ch;  // decoder cell
    std::size_t wout, bout, total;
};

Off offsets(int vocab, int H, int E) {
    const auto v = static_cast<std::size_t>(vocab);
    const auto h = static_cast<std::size_t>(H);
    const auto e = static_cast<std::size_t>(E);
    Off o{};
    std::size_t p = 0;
    const auto take = [&p](std::size_t n) {
        const std::size_t at = p;
        p += n;
        return at;
    };
    o.wemb = take(v * e);
    o.wz = take(h * e), o.wr = take(h * e), o.wh = take(h * e);
    o.uz = take(h * h), o.ur = take(h * h), o.uh = take(h * h);
    o.bz = take(h), o.br = take(h), o.bh = take(h);
    o.dz = take(h * e), o.dr = take(h * e), o.dh = take(h * e);
    o.vz = take(h * h), o.vr = take(h * h), o.vh = take(h * h);
    o.cz = take(h), o.cr = take(h), o.ch = take(h);
    o.wout = take(v * h);
    o.bout = take(v);
    o.total = p;
    return o;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One cell's weight views (encoder or decoder block of theta).
struct CellW {
    const double *wz, *wr, *wh, *uz, *ur, *uh, *bz, *br, *bh;
};
struct CellG {
    double *wz, *wr, *wh, *uz, *ur, *uh, *bz, *br, *bh;
};

CellW enc_w(const EncoderParams& p, const Off& o) {
    const double* t = p.theta.data();
    return {t + o.wz, t + o.wr, t + o.wh, t + o.uz, t + o.ur, t + o.uh,
            t + o.bz, t + o.br, t + o.bh};
}
CellW dec_w(const EncoderParams& p, const Off& o) {
    const double* t = p.theta.data();
    return {t + o.dz, t + o.dr, t + o.dh, t + o.vz, t + o.vr, t + o.vh,
            t + o.cz, t + o.cr, t + o.ch};
}
CellG enc_g(std::vector<double>& g, const Off& o) {
    double* t = g.data();
    return {t + o.wz, t + o.wr, t + o.wh, t + o.uz, t + o.ur, t + o.uh,
            t + o.bz, t + o.br, t + o.bh};
}
CellG dec_g(std::vector<double>& g, const Off& o) {
    double* t = g.data();
    return {t + o.dz, t + o.dr, t + o.dh, t + o.vz, t + o.vr, t + o.vh,
            t + o.cz, t + o.cr, t + o.ch};
}

// Scratch reused across steps; per-step results land in caller-owned tapes.
struct Scratch {
    std::vector<double> az, ar, ah, tmp, daz, dar, dah, drh;
    explicit Scratch(int H)
        : az(static_cast<std::size_t>(H)), ar(az.size()), ah(az.size()), tmp(az.size()),
          daz(az.size()), dar(az.size()), dah(az.size()), drh(az.size()) {}
};

// x may be null (the zero start-of-sequence input). Writes z, r, g, rh, hout.
void cell_forward(const CellW& w, int H, int E, const double* x, const double* hprev,
                  double* z, double* r, double* g, double* rh, double* hout, Scratch& s) {
    const auto h = static_cast<std::size_t>(H);
    const auto e = static_cast<std::size_t>(E);
    for (std::size_t i = 0; i < h; ++i) rh[i] = 0.0;

    if (x) {
        kern::matvec(w.wz, h, e, x, s.az.data());
        kern::matvec(w.wr, h, e, x, s.ar.data());
    } else {
        std::fill(s.az.begin(), s.az.end(), 0.0);
        std::fill(s.ar.begin(), s.ar.end(), 0.0);
    }
    kern::matvec(w.uz, h, h, hprev, s.tmp.data());
    for (std::size_t i = 0; i < h; ++i) z[i] = sigmoid(s.az[i] + s.tmp[i] + w.bz[i]);
    kern::matvec(w.ur, h, h, hprev, s.tmp.data());
    for (std::size_t i = 0; i < h; ++i) r[i] = sigmoid(s.ar[i] + s.tmp[i] + w.br[i]);

    for (std::size_t i = 0; i < h; ++i) rh[i] = r[i] * hprev[i];
    if (x)
        kern::matvec(w.wh, h, e, x, s.ah.data());
    else
        std::fill(s.ah.begin(), s.ah.end(), 0.0);
    kern::matvec(w.uh, h, h, rh, s.tmp.data());
    for (std::size_t i = 0; i < h; ++i) {
        g[i] = std::tanh(s.ah[i] + s.tmp[i] + w.bh[i]);
        hout[i] = (1.0 - z[i]) * hprev[i] + z[i] * g[i];
    }
}

// Backpropagates one step. dh is the incoming gradient at h'; dhprev must be
// zeroed by the caller and receives dL/dhprev; dx (if non-null, zeroed by the
// caller) receives dL/dx.
void cell_backward(const CellW& w, const CellG& gw, int H, int E, const double* x,
                   const double* hprev, const double* z, const double* r, const double* g,
                   const double* rh, const double* dh, double* dhprev, double* dx,
                   Scratch& s) {
    const auto h = static_cast<std::size_t>(H);
    const auto e = static_cast<std::size_t>(E);

    for (std::size_t i = 0; i < h; ++i) {
        const double dzi = dh[i] * (g[i] - hprev[i]);
        const double dgi = dh[i] * z[i];
        dhprev[i] += dh[i] * (1.0 - z[i]);
        s.dah[i] = dgi * (1.0 - g[i] * g[i]);
        s.daz[i] = dzi * z[i] * (1.0 - z[i]);
    }
    if (x) kern::outer_acc(gw.wh, h, e, 1.0, s.dah.data(), x);
    kern::outer_acc(gw.uh, h, h, 1.0, s.dah.data(), rh);
    kern::axpy(1.0, s.dah.data(), gw.bh, h);

    std::fill(s.drh.begin(), s.drh.end(), 0.0);
    kern::matvec_t_acc(w.uh, h, h, s.dah.data(), s.drh.data());
    for (std::size_t i = 0; i < h; ++i) {
        const double dri = s.drh[i] * hprev[i];
        dhprev[i] += s.drh[i] * r[i];
        s.dar[i] = dri * r[i] * (1.0 - r[i]);
    }
    if (x) {
        kern::outer_acc(gw.wr, h, e, 1.0, s.dar.data(), x);
        kern::outer_acc(gw.wz, h, e, 1.0, s.daz.data(), x);
    }
    kern::outer_acc(gw.ur, h, h, 1.0, s.dar.data(), hprev);
    kern::outer_acc(gw.uz, h, h, 1.0, s.daz.data(), hprev);
    kern::axpy(1.0, s.dar.data(), gw.br, h);
    kern::axpy(1.0, s.daz.data(), gw.bz, h);

    kern::matvec_t_acc(w.uz, h, h, s.daz.data(), dhprev);
    kern::matvec_t_acc(w.ur, h, h, s.dar.data(), dhprev);
    if (dx) {
        kern::matvec_t_acc(w.wz, h, e, s.daz.data(), dx);
        kern::matvec_t_acc(w.wr, h, e, s.dar.data(), dx);
        kern::matvec_t_acc(w.wh, h, e, s.dah.data(), dx);
    }
}

void check_tokens(const EncoderParams& p, const TokenSequence& tokens) {
    if (tokens.tokens.empty()) throw ValidationError("token sequence is empty");
    for (int id : tokens.tokens)
        if (id < 0 || id >= p.vocab)
            throw ValidationError("token id " + std::to_string(id) + " outside vocab " +
                                  std::to_string(p.vocab));
}

// Row t of a T x H tape.
inline double* row(std::vector<double>& tape, std::size_t t, std::size_t width) {
    return tape.data() + t * width;
}
inline const double* row(const std::vector<double>& tape, std::size_t t, std::size_t width) {
    return tape.data() + t * width;
}

}  // namespace

std::size_t EncoderParams::off_enc() const { return offsets(vocab, H, E).wz; }
std::size_t EncoderParams::off_dec() const { return offsets(vocab, H, E).dz; }
std::size_t EncoderParams::off_wout() const { return offsets(vocab, H, E).wout; }
std::size_t EncoderParams::off_bout() const { return offsets(vocab, H, E).bout; }

double* EncoderParams::wemb_row(int token) {
    return theta.data() + static_cast<std::size_t>(token) * static_cast<std::size_t>(E);
}
const double* EncoderParams::wemb_row(int token) const {
    return theta.data() + static_cast<std::size_t>(token) * static_cast<std::size_t>(E);
}

EncoderParams init_params(int vocab, int H, int E, std::uint64_t seed) {
    if (vocab < 2) throw ValidationError("vocab must be at least 2");
    if (H < 2) throw ValidationError("H must be at least 2");
    if (E < 1) throw ValidationError("E must be at least 1");

    EncoderParams p;
    p.vocab = vocab;
    p.H = H;
    p.E = E;
    const Off o = offsets(vocab, H, E);
    p.theta.resize(o.total);

    rng::Engine eng = rng::make_engine(seed, "encoder-init", 0);
    // Every block is a linear map; bound = 1/sqrt(fan_in) of that map. The
    // token table acts on one-hot vocab vectors, so its fan_in is vocab.
    struct Block {
        std::size_t at, n;
        int fan_in;
    };
    const auto h = static_cast<std::size_t>(H);
    const auto e = static_cast<std::size_t>(E);
    const auto v = static_cast<std::size_t>(vocab);
    const Block blocks[] = {
        {o.wemb, v * e, vocab},
        {o.wz, h * e, E}, {o.wr, h * e, E}, {o.wh, h * e, E},
        {o.uz, h * h, H}, {o.ur, h * h, H}, {o.uh, h * h, H},
        {o.bz, h, H},     {o.br, h, H},     {o.bh, h, H},
        {o.dz, h * e, E}, {o.dr, h * e, E}, {o.dh, h * e, E},
        {o.vz, h * h, H}, {o.vr, h * h, H}, {o.vh, h * h, H},
        {o.cz, h, H},     {o.cr, h, H},     {o.ch, h, H},
        {o.wout, v * h, H},
        {o.bout, v, H},
    };
    for (const Block& b : blocks) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(b.fan_in));
        for (std::size_t i = 0; i < b.n; ++i)
            p.theta[b.at + i] = rng::uniform_range(eng, -bound, bound);
    }
    return p;
}

TrajectoryEmbedding embed_trajectory(const EncoderParams& params, const TokenSequence& tokens) {
    check_tokens(params, tokens);
    const Off o = offsets(params.vocab, params.H, params.E);
    const CellW w = enc_w(params, o);
    const auto h = static_cast<std::size_t>(params.H);
    Scratch s(params.H);

    std::vector<double> hprev(h, 0.0), hcur(h), z(h), r(h), g(h), rh(h);
    std::vector<double> mean(h, 0.0);
    for (int tok : tokens.tokens) {
        cell_forward(w, params.H, params.E, params.wemb_row(tok), hprev.data(), z.data(),
                     r.data(), g.data(), rh.data(), hcur.data(), s);
        for (std::size_t i = 0; i < h; ++i) mean[i] += hcur[i];
        hprev.swap(hcur);
    }
    const double inv = 1.0 / static_cast<double>(tokens.tokens.size());
    for (double& m : mean) m *= inv;
    return {std::move(mean), -1};
}

std::vector<TrajectoryEmbedding> embed_all(const EncoderParams& params,
                                           const std::vector<TokenSequence>& seqs) {
    std::vector<TrajectoryEmbedding> out;
    out.reserve(seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) {
        out.push_back(embed_trajectory(params, seqs[i]));
        out.back().source_traj = static_cast<int>(i);
    }
    return out;
}

double loss_and_gradient(const EncoderParams& params, const TokenSequence& tokens,
                         std::vector<double>& grad) {
    check_tokens(params, tokens);
    const Off o = offsets(params.vocab, params.H, params.E);
    grad.assign(o.total, 0.0);

    const auto& tok = tokens.tokens;
    const std::size_t T = tok.size();
    const auto H = static_cast<std::size_t>(params.H);
    const auto V = static_cast<std::size_t>(params.vocab);
    Scratch s(params.H);

    // Tapes. Hidden tapes have T+1 rows (row 0 = initial state).
    std::vector<double> eh((T + 1) * H, 0.0), ez(T * H), er(T * H), eg(T * H), erh(T * H);
    std::vector<double> dh((T + 1) * H), dz(T * H), dr(T * H), dg(T * H), drh2(T * H);
    std::vector<double> probs(T * V);

    const CellW ew = enc_w(params, o);
    const CellW dw = dec_w(params, o);
    for (std::size_t t = 1; t <= T; ++t) {
        cell_forward(ew, params.H, params.E, params.wemb_row(tok[t - 1]),
                     row(eh, t - 1, H), row(ez, t - 1, H), row(er, t - 1, H),
                     row(eg, t - 1, H), row(erh, t - 1, H), row(eh, t, H), s);
    }

    std::memcpy(row(dh, 0, H), row(eh, T, H), H * sizeof(double));
    const double* wout = params.theta.data() + o.wout;
    const double* bout = params.theta.data() + o.bout;
    double loss = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
        const double* x = (t == 1) ? nullptr : params.wemb_row(tok[t - 2]);
        cell_forward(dw, params.H, params.E, x, row(dh, t - 1, H), row(dz, t - 1, H),
                     row(dr, t - 1, H), row(dg, t - 1, H), row(drh2, t - 1, H),
                     row(dh, t, H), s);
        double* p = row(probs, t - 1, V);
        kern::matvec(wout, V, H, row(dh, t, H), p);
        double mx = p[0] + bout[0];
        for (std::size_t v = 0; v < V; ++v) {
            p[v] += bout[v];
            if (p[v] > mx) mx = p[v];
        }
        double zsum = 0.0;
        for (std::size_t v = 0; v < V; ++v) {
            p[v] = std::exp(p[v] - mx);
            zsum += p[v];
        }
        for (std::size_t v = 0; v < V; ++v) p[v] /= zsum;
        loss -= std::log(p[static_cast<std::size_t>(tok[t - 1])]);
    }
    loss /= static_cast<double>(T);

    // Decoder walk back.
    const CellG dgw = dec_g(grad, o);
    double* wout_g = grad.data() + o.wout;
    double* bout_g = grad.data() + o.bout;
    std::vector<double> dcur(H, 0.0), dprev(H), dlog(V), dx(static_cast<std::size_t>(params.E));
    const double invT = 1.0 / static_cast<double>(T);
    for (std::size_t t = T; t >= 1; --t) {
        const double* p = row(probs, t - 1, V);
        for (std::size_t v = 0; v < V; ++v) dlog[v] = p[v] * invT;
        dlog[static_cast<std::size_t>(tok[t - 1])] -= invT;
        kern::axpy(1.0, dlog.data(), bout_g, V);
        kern::outer_acc(wout_g, V, H, 1.0, dlog.data(), row(dh, t, H));
        kern::matvec_t_acc(wout, V, H, dlog.data(), dcur.data());

        const double* x = (t == 1) ? nullptr : params.wemb_row(tok[t - 2]);
        std::fill(dprev.begin(), dprev.end(), 0.0);
        std::fill(dx.begin(), dx.end(), 0.0);
        cell_backward(dw, dgw, params.H, params.E, x, row(dh, t - 1, H), row(dz, t - 1, H),
                      row(dr, t - 1, H), row(dg, t - 1, H), row(drh2, t - 1, H), dcur.data(),
                      dprev.data(), x ? dx.data() : nullptr, s);
        if (x)
            kern::axpy(1.0, dx.data(),
                       grad.data() + o.wemb +
                           static_cast<std::size_t>(tok[t - 2]) * static_cast<std::size_t>(params.E),
                       static_cast<std::size_t>(params.E));
        dcur.swap(dprev);
    }

    // dcur now holds dL/d(encoder final hidden); continue through the encoder.
    const CellG egw = enc_g(grad, o);
    for (std::size_t t = T; t >= 1; --t) {
        std::fill(dprev.begin(), dprev.end(), 0.0);
        std::fill(dx.begin(), dx.end(), 0.0);
        cell_backward(ew, egw, params.H, params.E, params.wemb_row(tok[t - 1]),
                      row(eh, t - 1, H), row(ez, t - 1, H), row(er, t - 1, H),
                      row(eg, t - 1, H), row(erh, t - 1, H), dcur.data(), dprev.data(),
                      dx.data(), s);
        kern::axpy(1.0, dx.data(),
                   grad.data() + o.wemb +
                       static_cast<std::size_t>(tok[t - 1]) * static_cast<std::size_t>(params.E),
                   static_cast<std::size_t>(params.E));
        dcur.swap(dprev);
    }
    return loss;
}

double reconstruction_loss(const EncoderParams& params, const TokenSequence& tokens) {
    check_tokens(params, tokens);
    const Off o = offsets(params.vocab, params.H, params.E);
    const auto& tok = tokens.tokens;
    const std::size_t T = tok.size();
    const auto H = static_cast<std::size_t>(params.H);
    const auto V = static_cast<std::size_t>(params.vocab);
    Scratch s(params.H);

    std::vector<double> hprev(H, 0.0), hcur(H), z(H), r(H), g(H), rh(H);
    const CellW ew = enc_w(params, o);
    for (std::size_t t = 1; t <= T; ++t) {
        cell_forward(ew, params.H, params.E, params.wemb_row(tok[t - 1]), hprev.data(),
                     z.data(), r.data(), g.data(), rh.data(), hcur.data(), s);
        hprev.swap(hcur);
    }

    const CellW dw = dec_w(params, o);
    const double* wout = params.theta.data() + o.wout;
    const double* bout = params.theta.data() + o.bout;
    std::vector<double> logits(V);
    double loss = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
        const double* x = (t == 1) ? nullptr : params.wemb_row(tok[t - 2]);
        cell_forward(dw, params.H, params.E, x, hprev.data(), z.data(), r.data(), g.data(),
                     rh.data(), hcur.data(), s);
        hprev.swap(hcur);
        kern::matvec(wout, V, H, hprev.data(), logits.data());
        double mx = logits[0] + bout[0];
        for (std::size_t v = 0; v < V; ++v) {
            logits[v] += bout[v];
            if (logits[v] > mx) mx = logits[v];
        }
        double zsum = 0.0;
        for (std::size_t v = 0; v < V; ++v) zsum += std::exp(logits[v] - mx);
        loss -= logits[static_cast<std::size_t>(tok[t - 1])] - mx - std::log(zsum);
    }
    return loss / static_cast<double>(T);
}

std::pair<EncoderParams, std::vector<double>> train_autoencoder(
    const EncoderParams& params, const std::vector<TokenSequence>& seqs,
    const EncoderTrainConfig& cfg) {
    cfg.validate();
    if (seqs.empty()) throw ValidationError("training needs at least one sequence");
    if (params.H != cfg.H || params.E != cfg.E)
        throw ValidationError("params shape disagrees with training config");
    for (const auto& s : seqs) check_tokens(params, s);

    EncoderParams cur = params;
    const std::size_t n = seqs.size();
    const std::size_t P = cur.theta.size();

    // Adam. Plain gradient steps at the default learning rate stall well
    // above the loss the run needs, so the moment estimates do the tuning.
    std::vector<double> m(P, 0.0), v(P, 0.0), gsum(P), g(P);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    long adam_t = 0;

    std::vector<double> curve;
    curve.reserve(static_cast<std::size_t>(cfg.epochs));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng::Engine eng = rng::make_engine(cfg.seed, "encoder-shuffle",
                                           static_cast<std::uint64_t>(epoch));
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = rng::uniform_below(eng, i);
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(n, at + static_cast<std::size_t>(cfg.batch_size));
            std::fill(gsum.begin(), gsum.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = at; k < stop; ++k) {
                batch_loss += loss_and_gradient(cur, seqs[order[k]], g);
                kern::axpy(1.0, g.data(), gsum.data(), P);
            }
            const double inv = 1.0 / static_cast<double>(stop - at);
            batch_loss *= inv;
            if (!std::isfinite(batch_loss))
                throw StageError("train-encoder",
                                 "non-finite loss at epoch " + std::to_string(epoch) +
                                     " (learning rate too high?)");
            epoch_loss += batch_loss * static_cast<double>(stop - at);

            ++adam_t;
            const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_t));
            const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_t));
            for (std::size_t i = 0; i < P; ++i) {
                const double gi = gsum[i] * inv;
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                cur.theta[i] -= cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            }
        }
        curve.push_back(epoch_loss / static_cast<double>(n));
    }
    return {std::move(cur), std::move(curve)};
}

void save_params(const EncoderParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    out.write("TRAJAE01", 8);
    const std::int64_t dims[3] = {params.vocab, params.H, params.E};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(params.theta.data()),
              static_cast<std::streamsize>(params.theta.size() * sizeof(double)));
    if (!out) throw ValidationError("write failed: " + path);
}

EncoderParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "TRAJAE01", 8) != 0)
        throw ValidationError("not an encoder params file: " + path);
    std::int64_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || dims[0] < 2 || dims[1] < 2 || dims[2] < 1)
        throw ValidationError("bad header in " + path);
    EncoderParams p;
    p.vocab = static_cast<int>(dims[0]);
    p.H = static_cast<int>(dims[1]);
    p.E = static_cast<int>(dims[2]);
    const Off o = offsets(p.vocab, p.H, p.E);
    p.theta.resize(o.total);
    in.read(reinterpret_cast<char*>(p.theta.data()),
            static_cast<std::streamsize>(o.total * sizeof(double)));
    if (!in) throw ValidationError("truncated encoder params file: " + path);
    char extra;
    if (in.read(&extra, 1)) throw ValidationError("trailing bytes in " + path);
    return p;
}

void save_embeddings_csv(const std::vector<TrajectoryEmbedding>& embs, const std::string& path) {
    if (embs.empty()) throw ValidationError("no embeddings to save");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open for writing: " + path);
    const std::size_t H = embs.front().values.size();
    out << "traj_index";
    for (std::size_t i = 0; i < H; ++i) out << ",v_" << i;
    out << "\n";
    char buf[32];
    for (const auto& e : embs) {
        if (e.values.size() != H) throw ValidationError("embedding width mismatch");
        out << e.source_traj;
        for (double x : e.values) {
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw ValidationError("write failed: " + path);
}

std::vector<TrajectoryEmbedding> load_embeddings_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("traj_index", 0) != 0)
        throw ValidationError("bad embeddings header in " + path);
    std::vector<TrajectoryEmbedding> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        TrajectoryEmbedding e;
        std::string field;
        if (!std::getline(ss, field, ','))
            throw ValidationError(path + " line " + std::to_string(lineno) + ": empty row");
        try {
            e.source_traj = std::stoi(field);
            while (std::getline(ss, field, ',')) e.values.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw ValidationError(path + " line " + std::to_string(lineno) + ": bad number");
        }
        if (e.values.empty())
            throw ValidationError(path + " line " + std::to_string(lineno) + ": no values");
        out.push_back(std::move(e));
    }
    if (out.empty()) throw ValidationError("no embeddings in " + path);
    return out;
}

}  // namespace trajattr
