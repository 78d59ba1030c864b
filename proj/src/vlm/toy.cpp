#include "forge/vlm/toy.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "forge/errors.hpp"
#include "forge/io.hpp"
#include "forge/rng.hpp"

namespace forge::vlm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kNormEps = 1e-6;

void rmsnorm(const MatrixXd& x, const VectorXd& gain, MatrixXd& y, VectorXd& rms) {
    const auto d = static_cast<double>(x.cols());
    rms = ((x.array().square().rowwise().sum() / d) + kNormEps).sqrt().matrix();
    y = ((x.array().colwise() / rms.array()).rowwise() * gain.transpose().array()).matrix();
}

// dx_i = g*dy_i/r - x_i * sum_j(g_j dy_ij x_ij) / (d r^3), per row i.
void rmsnorm_backward(const MatrixXd& x, const VectorXd& gain, const VectorXd& rms, const MatrixXd& dy,
                      MatrixXd& dx, VectorXd* dgain) {
    const auto d = static_cast<double>(x.cols());
    MatrixXd gdy = (dy.array().rowwise() * gain.transpose().array()).matrix();
    VectorXd s = (gdy.array() * x.array()).rowwise().sum().matrix();
    dx = ((gdy.array().colwise() / rms.array()) -
          (x.array().colwise() * (s.array() / (d * rms.array().cube()))))
             .matrix();
    if (dgain)
        *dgain += ((dy.array() * x.array()).colwise() / rms.array()).colwise().sum().transpose().matrix();
}

struct LayerTrace {
    MatrixXd h_in;    // layer input
    MatrixXd x1;      // rms-normed for attention
    VectorXd rms1;
    MatrixXd q, k, v;
    MatrixXd p;       // causal attention probabilities
    MatrixXd attn_o;  // p * v
    MatrixXd h_mid;   // after attention residual
    MatrixXd x2;      // rms-normed for mlp
    VectorXd rms2;
    MatrixXd act;     // tanh(x2 w1 + b1)
};

struct Trace {
    MatrixXd emb;  // initial embeddings (token/image + positional)
    std::vector<LayerTrace> layers;
    MatrixXd h_final;
    MatrixXd xf;
    VectorXd rmsf;
};

// One row of decoder input: either a token embedding or an image patch.
struct Row {
    enum Kind { Tok, Img } kind;
    int token = -1;
    int patch = -1;
};

struct Plan {
    std::vector<Row> rows;
    MatrixXd patches;  // n_patches x patch_dim; 0x0 when no image
};

ToyWeights zero_like(const ToyWeights& w) {
    ToyWeights g;
    g.tok = MatrixXd::Zero(w.tok.rows(), w.tok.cols());
    g.pos = MatrixXd::Zero(w.pos.rows(), w.pos.cols());
    g.img = MatrixXd::Zero(w.img.rows(), w.img.cols());
    g.img_b = VectorXd::Zero(w.img_b.size());
    g.layers.resize(w.layers.size());
    for (std::size_t i = 0; i < w.layers.size(); ++i) {
        const auto& l = w.layers[i];
        auto& o = g.layers[i];
        o.attn_gain = VectorXd::Zero(l.attn_gain.size());
        o.mlp_gain = VectorXd::Zero(l.mlp_gain.size());
        o.wq = MatrixXd::Zero(l.wq.rows(), l.wq.cols());
        o.wk = MatrixXd::Zero(l.wk.rows(), l.wk.cols());
        o.wv = MatrixXd::Zero(l.wv.rows(), l.wv.cols());
        o.wo = MatrixXd::Zero(l.wo.rows(), l.wo.cols());
        o.w1 = MatrixXd::Zero(l.w1.rows(), l.w1.cols());
        o.b1 = VectorXd::Zero(l.b1.size());
        o.w2 = MatrixXd::Zero(l.w2.rows(), l.w2.cols());
        o.b2 = VectorXd::Zero(l.b2.size());
    }
    g.final_gain = VectorXd::Zero(w.final_gain.size());
    return g;
}

template <typename W, typename F>
void visit_params(W& w, F&& f) {
    f(w.tok);
    f(w.pos);
    f(w.img);
    f(w.img_b);
    for (auto& l : w.layers) {
        f(l.attn_gain);
        f(l.wq);
        f(l.wk);
        f(l.wv);
        f(l.wo);
        f(l.mlp_gain);
        f(l.w1);
        f(l.b1);
        f(l.w2);
        f(l.b2);
    }
    f(w.final_gain);
}

MatrixXd extract_patches(const Image& px, int ps) {
    if (px.height % ps != 0 || px.width % ps != 0)
        throw StructuralError("image dimensions must be divisible by patch size");
    const int gh = px.height / ps, gw = px.width / ps;
    const int patch_dim = 3 * ps * ps;
    MatrixXd patches(gh * gw, patch_dim);
    for (int py = 0; py < gh; ++py)
        for (int pxi = 0; pxi < gw; ++pxi) {
            const int row = py * gw + pxi;
            for (int c = 0; c < 3; ++c)
                for (int dy = 0; dy < ps; ++dy)
                    for (int dx = 0; dx < ps; ++dx)
                        patches(row, (c * ps + dy) * ps + dx) =
                            static_cast<double>(px.at(c, py * ps + dy, pxi * ps + dx));
        }
    return patches;
}

Plan make_plan(const TokenSeq& prompt, const Image* image, const TokenSeq& target, int patch_size) {
    Plan plan;
    if (image) plan.patches = extract_patches(*image, patch_size);
    plan.rows.reserve(prompt.size() + static_cast<std::size_t>(plan.patches.rows()) + target.size());
    for (Token t : prompt) plan.rows.push_back({Row::Tok, t, -1});
    for (int p = 0; p < plan.patches.rows(); ++p) plan.rows.push_back({Row::Img, -1, p});
    for (Token t : target) plan.rows.push_back({Row::Tok, t, -1});
    return plan;
}

Trace run_forward(const ToyWeights& w, const ToyVlmSpec& spec, const Plan& plan) {
    const int n = static_cast<int>(plan.rows.size());
    const int d = spec.embedding_dim;
    if (n > spec.context_limit) throw ArgumentError("context overflow: " + std::to_string(n) + " rows");

    Trace tr;
    tr.emb.resize(n, d);
    for (int i = 0; i < n; ++i) {
        const auto& r = plan.rows[i];
        if (r.kind == Row::Tok) {
            if (r.token < 0 || r.token >= spec.vocab_size) throw ArgumentError("token out of range");
            tr.emb.row(i) = w.tok.row(r.token);
        } else {
            tr.emb.row(i) = (w.img * plan.patches.row(r.patch).transpose() + w.img_b).transpose();
        }
        tr.emb.row(i) += w.pos.row(i);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    MatrixXd h = tr.emb;
    tr.layers.resize(w.layers.size());
    for (std::size_t li = 0; li < w.layers.size(); ++li) {
        const auto& L = w.layers[li];
        auto& t = tr.layers[li];
        t.h_in = std::move(h);
        rmsnorm(t.h_in, L.attn_gain, t.x1, t.rms1);
        t.q = t.x1 * L.wq;
        t.k = t.x1 * L.wk;
        t.v = t.x1 * L.wv;
        t.p = MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            double mx = -1e300;
            for (int j = 0; j <= i; ++j) {
                const double s = t.q.row(i).dot(t.k.row(j)) * scale;
                t.p(i, j) = s;
                mx = std::max(mx, s);
            }
            double z = 0.0;
            for (int j = 0; j <= i; ++j) {
                t.p(i, j) = std::exp(t.p(i, j) - mx);
                z += t.p(i, j);
            }
            for (int j = 0; j <= i; ++j) t.p(i, j) /= z;
        }
        t.attn_o = t.p * t.v;
        t.h_mid = t.h_in + t.attn_o * L.wo;
        rmsnorm(t.h_mid, L.mlp_gain, t.x2, t.rms2);
        t.act = ((t.x2 * L.w1).rowwise() + L.b1.transpose()).array().tanh().matrix();
        MatrixXd mlp_out = (t.act * L.w2).rowwise() + L.b2.transpose();
        h = t.h_mid + mlp_out;
    }
    tr.h_final = std::move(h);
    rmsnorm(tr.h_final, w.final_gain, tr.xf, tr.rmsf);
    return tr;
}

VectorXd softmax_vec(const VectorXd& logits) {
    const double mx = logits.maxCoeff();
    VectorXd e = (logits.array() - mx).exp().matrix();
    return e / e.sum();
}

// Cross-entropy at the scored rows, then full backward. Weight gradients are
// accumulated only when `grads` is non-null; patch gradients only when
// `d_patches` is non-null. Returns the (unnormalized) summed CE.
double backward_from_ce(const ToyWeights& w, const ToyVlmSpec& spec, const Plan& plan, const Trace& tr,
                        const std::vector<std::pair<int, Token>>& score, double inv_total_tokens,
                        ToyWeights* grads, MatrixXd* d_patches) {
    const int n = static_cast<int>(plan.rows.size());
    const int d = spec.embedding_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    double loss = 0.0;
    MatrixXd dxf = MatrixXd::Zero(n, d);
    for (const auto& [row, target] : score) {
        VectorXd logits = w.tok * tr.xf.row(row).transpose();
        VectorXd p = softmax_vec(logits);
        loss += -std::log(std::max(p(target), 1e-300));
        VectorXd dlogits = p * inv_total_tokens;
        dlogits(target) -= inv_total_tokens;
        if (grads) grads->tok += dlogits * tr.xf.row(row);  // tied logits side
        dxf.row(row) += dlogits.transpose() * w.tok;
    }

    MatrixXd dh;
    rmsnorm_backward(tr.h_final, w.final_gain, tr.rmsf, dxf, dh, grads ? &grads->final_gain : nullptr);

    for (int li = static_cast<int>(w.layers.size()) - 1; li >= 0; --li) {
        const auto& L = w.layers[li];
        const auto& t = tr.layers[li];
        auto* G = grads ? &grads->layers[li] : nullptr;

        // MLP branch: h_out = h_mid + act*w2 + b2
        if (G) {
            G->w2 += t.act.transpose() * dh;
            G->b2 += dh.colwise().sum().transpose();
        }
        MatrixXd dact = dh * L.w2.transpose();
        MatrixXd dz = (dact.array() * (1.0 - t.act.array().square())).matrix();
        if (G) {
            G->w1 += t.x2.transpose() * dz;
            G->b1 += dz.colwise().sum().transpose();
        }
        MatrixXd dx2 = dz * L.w1.transpose();
        MatrixXd dh_mid;
        rmsnorm_backward(t.h_mid, L.mlp_gain, t.rms2, dx2, dh_mid, G ? &G->mlp_gain : nullptr);
        dh_mid += dh;  // residual

        // Attention branch: h_mid = h_in + (p v) wo
        if (G) G->wo += t.attn_o.transpose() * dh_mid;
        MatrixXd dao = dh_mid * L.wo.transpose();
        MatrixXd dp = dao * t.v.transpose();
        MatrixXd dv = t.p.transpose() * dao;
        MatrixXd ds = MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            double dot = 0.0;
            for (int j = 0; j <= i; ++j) dot += dp(i, j) * t.p(i, j);
            for (int j = 0; j <= i; ++j) ds(i, j) = t.p(i, j) * (dp(i, j) - dot);
        }
        MatrixXd dq = ds * t.k * scale;
        MatrixXd dk = ds.transpose() * t.q * scale;
        if (G) {
            G->wq += t.x1.transpose() * dq;
            G->wk += t.x1.transpose() * dk;
            G->wv += t.x1.transpose() * dv;
        }
        MatrixXd dx1 = dq * L.wq.transpose() + dk * L.wk.transpose() + dv * L.wv.transpose();
        MatrixXd dh_in;
        rmsnorm_backward(t.h_in, L.attn_gain, t.rms1, dx1, dh_in, G ? &G->attn_gain : nullptr);
        dh = dh_in + dh_mid;  // residual
    }

    // Embedding scatter.
    for (int i = 0; i < n; ++i) {
        const auto& r = plan.rows[i];
        if (grads) grads->pos.row(i) += dh.row(i);
        if (r.kind == Row::Tok) {
            if (grads) grads->tok.row(r.token) += dh.row(i);
        } else {
            if (grads) {
                grads->img += dh.row(i).transpose() * plan.patches.row(r.patch);
                grads->img_b += dh.row(i).transpose();
            }
            if (d_patches) d_patches->row(r.patch) += dh.row(i) * w.img;
        }
    }
    return loss;
}

}  // namespace

// ---------------------------------------------------------------------------
// spec
// ---------------------------------------------------------------------------

void ToyVlmSpec::validate() const {
    if (patch_size <= 0 || embedding_dim <= 0 || vocab_size <= 0 || decoder_layers <= 0 ||
        context_limit <= 0)
        throw ArgumentError("ToyVlmSpec: all dimensions must be positive");
    if (vocab_size != Tokenizer::kVocabSize)
        throw ArgumentError("ToyVlmSpec: vocab_size must match the 64-symbol tokenizer");
    if (pretrain_steps < 0) throw ArgumentError("ToyVlmSpec: pretrain_steps must be >= 0");
}

std::string ToyVlmSpec::cache_key() const {
    // bump when the fitting data or schedule changes, so stale disk caches
    // cannot shadow retrained weights
    constexpr int kToyTrainRevision = 2;
    std::ostringstream ss;
    ss << patch_size << "/" << embedding_dim << "/" << vocab_size << "/" << decoder_layers << "/"
       << context_limit << "/" << seed << "/" << pretrain_steps << "/r" << kToyTrainRevision;
    return ss.str();
}

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

struct ToyVlm::AdamState {
    ToyWeights m, v;
    long t = 0;
};

ToyVlm::ToyVlm(const ToyVlmSpec& spec) : ToyVlm(spec, true) {}

ToyVlm::~ToyVlm() = default;

ToyVlm::ToyVlm(const ToyVlmSpec& spec, bool run_pretrain)
    : VlmAdapter(ConcatOrder::TextThenImage), spec_(spec) {
    spec_.validate();
    init_weights();
    if (run_pretrain && spec_.pretrain_steps > 0) pretrain();
    snap_weights_to_f32();
}

void ToyVlm::init_weights() {
    const int d = spec_.embedding_dim;
    const int h = 2 * d;
    const int patch_dim = 3 * spec_.patch_size * spec_.patch_size;
    Rng rng(mix_seed(static_cast<std::uint64_t>(spec_.seed), 0x746f79ULL));

    auto fill_normal = [&rng](MatrixXd& m, double stddev) {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.normal(0.0, stddev);
    };

    w_.tok.resize(spec_.vocab_size, d);
    fill_normal(w_.tok, 0.5);
    w_.pos.resize(spec_.context_limit, d);
    fill_normal(w_.pos, 0.3);
    // Patch projection rows carry ~unit norm so the image branch stays
    // influential relative to token embeddings.
    w_.img.resize(d, patch_dim);
    fill_normal(w_.img, 2.0 / std::sqrt(static_cast<double>(patch_dim)));
    w_.img_b = VectorXd::Zero(d);

    w_.layers.resize(spec_.decoder_layers);
    for (auto& l : w_.layers) {
        l.attn_gain = VectorXd::Ones(d);
        l.mlp_gain = VectorXd::Ones(d);
        l.wq.resize(d, d);
        fill_normal(l.wq, 1.0 / std::sqrt(static_cast<double>(d)));
        l.wk.resize(d, d);
        fill_normal(l.wk, 1.0 / std::sqrt(static_cast<double>(d)));
        l.wv.resize(d, d);
        fill_normal(l.wv, 1.0 / std::sqrt(static_cast<double>(d)));
        l.wo.resize(d, d);
        fill_normal(l.wo, 1.0 / std::sqrt(static_cast<double>(d)));
        l.w1.resize(d, h);
        fill_normal(l.w1, 1.0 / std::sqrt(static_cast<double>(d)));
        l.b1 = VectorXd::Zero(h);
        l.w2.resize(h, d);
        fill_normal(l.w2, 1.0 / std::sqrt(static_cast<double>(h)));
        l.b2 = VectorXd::Zero(d);
    }
    w_.final_gain = VectorXd::Ones(d);
}

void ToyVlm::snap_weights_to_f32() {
    visit_params(w_, [](auto& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i)
            m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
    });
}

// ---------------------------------------------------------------------------
// adapter surface
// ---------------------------------------------------------------------------

std::string ToyVlm::model_id() const {
    return spec_.seed == 0 ? std::string("toy") : "toy:" + std::to_string(spec_.seed);
}

std::vector<std::string> ToyVlm::vocabulary() const { return shared_tokenizer().symbols(); }

TokenSeq ToyVlm::tokenize(const std::string& text) const { return shared_tokenizer().encode(text); }

std::string ToyVlm::detokenize(const TokenSeq& tokens) const { return shared_tokenizer().decode(tokens); }

std::vector<std::vector<float>> ToyVlm::encode_image(const Image& pixels) const {
    // Encoder output is position-free: one projected vector per patch.
    // Positional embeddings are added only when rows enter the decoder.
    const MatrixXd patches = extract_patches(pixels, spec_.patch_size);
    std::vector<std::vector<float>> out(static_cast<std::size_t>(patches.rows()));
    for (Eigen::Index i = 0; i < patches.rows(); ++i) {
        VectorXd e = w_.img * patches.row(i).transpose() + w_.img_b;
        out[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(e.size()));
        for (Eigen::Index j = 0; j < e.size(); ++j)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = static_cast<float>(e(j));
    }
    return out;
}

namespace {

void check_loss_batch(const std::vector<TokenSeq>& prompts, const std::vector<TokenSeq>& targets) {
    if (prompts.size() != targets.size() || prompts.empty())
        throw ArgumentError("forward_loss: prompts and targets must be equal-length, non-empty batches");
    for (const auto& t : targets)
        if (t.empty()) throw ArgumentError("forward_loss: empty target");
}

}  // namespace

double ToyVlm::forward_loss(const std::vector<TokenSeq>& prompts, const Image& pixels,
                            const std::vector<TokenSeq>& targets) const {
    check_loss_batch(prompts, targets);
    double total_loss = 0.0;
    std::size_t total_tokens = 0;
    for (const auto& t : targets) total_tokens += t.size();
    for (std::size_t b = 0; b < prompts.size(); ++b) {
        Plan plan = make_plan(prompts[b], &pixels, targets[b], spec_.patch_size);
        Trace tr = run_forward(w_, spec_, plan);
        const int ctx = static_cast<int>(prompts[b].size()) + static_cast<int>(plan.patches.rows());
        for (std::size_t k = 0; k < targets[b].size(); ++k) {
            VectorXd logits = w_.tok * tr.xf.row(ctx - 1 + static_cast<int>(k)).transpose();
            VectorXd p = softmax_vec(logits);
            total_loss += -std::log(std::max(p(targets[b][k]), 1e-300));
        }
    }
    return total_loss / static_cast<double>(total_tokens);
}

Image ToyVlm::image_gradient(const std::vector<TokenSeq>& prompts, const Image& pixels,
                             const std::vector<TokenSeq>& targets) const {
    check_loss_batch(prompts, targets);
    std::size_t total_tokens = 0;
    for (const auto& t : targets) total_tokens += t.size();
    const double inv_total = 1.0 / static_cast<double>(total_tokens);

    const int ps = spec_.patch_size;
    const int gh = pixels.height / ps, gw = pixels.width / ps;
    MatrixXd d_patches = MatrixXd::Zero(gh * gw, 3 * ps * ps);

    for (std::size_t b = 0; b < prompts.size(); ++b) {
        Plan plan = make_plan(prompts[b], &pixels, targets[b], ps);
        Trace tr = run_forward(w_, spec_, plan);
        const int ctx = static_cast<int>(prompts[b].size()) + static_cast<int>(plan.patches.rows());
        std::vector<std::pair<int, Token>> score;
        for (std::size_t k = 0; k < targets[b].size(); ++k)
            score.emplace_back(ctx - 1 + static_cast<int>(k), targets[b][k]);
        backward_from_ce(w_, spec_, plan, tr, score, inv_total, nullptr, &d_patches);
    }

    Image grad(pixels.height, pixels.width);
    for (int py = 0; py < gh; ++py)
        for (int px = 0; px < gw; ++px)
            for (int c = 0; c < 3; ++c)
                for (int dy = 0; dy < ps; ++dy)
                    for (int dx = 0; dx < ps; ++dx)
                        grad.at(c, py * ps + dy, px * ps + dx) =
                            static_cast<float>(d_patches(py * gw + px, (c * ps + dy) * ps + dx));
    return grad;
}

TokenSeq ToyVlm::generate(const TokenSeq& prompt, const Image& pixels, int max_new_tokens,
                          const Decoding& decoding) const {
    if (max_new_tokens < 1) throw ArgumentError("generate: max_new_tokens must be >= 1");
    Plan plan = make_plan(prompt, &pixels, {}, spec_.patch_size);
    if (static_cast<int>(plan.rows.size()) + max_new_tokens > spec_.context_limit)
        throw ArgumentError("generate: context overflow");

    Rng rng(decoding.seed);
    TokenSeq out;
    for (int step = 0; step < max_new_tokens; ++step) {
        Trace tr = run_forward(w_, spec_, plan);
        const int last = static_cast<int>(plan.rows.size()) - 1;
        VectorXd logits = w_.tok * tr.xf.row(last).transpose();
        Token next;
        if (decoding.kind == Decoding::Kind::Greedy) {
            int best = 0;
            for (int t = 1; t < logits.size(); ++t)
                if (logits(t) > logits(best)) best = t;
            next = best;
        } else {
            VectorXd p = softmax_vec(logits);
            const double u = rng.uniform();
            double acc = 0.0;
            next = static_cast<Token>(p.size() - 1);
            for (int t = 0; t < p.size(); ++t) {
                acc += p(t);
                if (u < acc) {
                    next = t;
                    break;
                }
            }
        }
        if (next == Tokenizer::kEos) break;
        out.push_back(next);
        plan.rows.push_back({Row::Tok, next, -1});
    }
    return out;
}

// ---------------------------------------------------------------------------
// training (pretraining + test oracles)
// ---------------------------------------------------------------------------

double ToyVlm::train_step(const std::vector<TrainExample>& batch, double learning_rate) {
    if (batch.empty()) throw ArgumentError("train_step: empty batch");
    if (!adam_) {
        adam_ = std::make_unique<AdamState>();
        adam_->m = zero_like(w_);
        adam_->v = zero_like(w_);
    }

    std::size_t total_tokens = 0;
    for (const auto& ex : batch) {
        if (ex.target.empty()) throw ArgumentError("train_step: empty target");
        if (ex.prompt.empty() && !ex.image) throw ArgumentError("train_step: empty context");
        total_tokens += ex.target.size();
    }
    const double inv_total = 1.0 / static_cast<double>(total_tokens);

    ToyWeights grads = zero_like(w_);
    double loss = 0.0;
    for (const auto& ex : batch) {
        const Image* img = ex.image ? &*ex.image : nullptr;
        Plan plan = make_plan(ex.prompt, img, ex.target, spec_.patch_size);
        Trace tr = run_forward(w_, spec_, plan);
        const int ctx = static_cast<int>(plan.rows.size()) - static_cast<int>(ex.target.size());
        std::vector<std::pair<int, Token>> score;
        for (std::size_t k = 0; k < ex.target.size(); ++k)
            score.emplace_back(ctx - 1 + static_cast<int>(k), ex.target[k]);
        loss += backward_from_ce(w_, spec_, plan, tr, score, inv_total, &grads, nullptr);
    }
    loss *= inv_total;

    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    adam_->t += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam_->t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam_->t));

    std::vector<double*> wp, gp, mp, vp;
    std::vector<Eigen::Index> sizes;
    visit_params(w_, [&](auto& m) {
        wp.push_back(m.data());
        sizes.push_back(m.size());
    });
    visit_params(grads, [&](auto& m) { gp.push_back(m.data()); });
    visit_params(adam_->m, [&](auto& m) { mp.push_back(m.data()); });
    visit_params(adam_->v, [&](auto& m) { vp.push_back(m.data()); });
    for (std::size_t p = 0; p < wp.size(); ++p) {
        for (Eigen::Index i = 0; i < sizes[p]; ++i) {
            const double g = gp[p][i];
            mp[p][i] = kBeta1 * mp[p][i] + (1.0 - kBeta1) * g;
            vp[p][i] = kBeta2 * vp[p][i] + (1.0 - kBeta2) * g * g;
            wp[p][i] -= learning_rate * (mp[p][i] / bc1) / (std::sqrt(vp[p][i] / bc2) + kEps);
        }
    }
    return loss;
}

void ToyVlm::pretrain() {
    Rng rng(mix_seed(static_cast<std::uint64_t>(spec_.seed), 0x7072657472ULL));
    constexpr int kBatch = 8;
    for (int step = 0; step < spec_.pretrain_steps; ++step) {
        const double progress = static_cast<double>(step) / spec_.pretrain_steps;

        // Watermark curriculum: salient early so the image-reading circuit
        // forms, annealed to deployment-scale amplitudes for the last phase.
        PretrainPhase phase;
        const double t = std::min(1.0, progress / 0.5);
        phase.amp_lo = 0.30 + (0.07 - 0.30) * t;
        phase.amp_hi = 0.50 + (0.15 - 0.50) * t;
        phase.styled_fraction = 0.65 + (0.45 - 0.65) * t;

        std::vector<TrainExample> batch;
        for (int b = 0; b < kBatch; ++b) batch.push_back(make_pretrain_example(spec_, rng, phase));

        const double lr = progress < 0.05 ? 2e-3 + 8e-3 * (progress / 0.05)
                                          : (progress < 0.8 ? 1e-2 : 4e-3);
        train_step(batch, lr);
    }
    adam_.reset();
}

// ---------------------------------------------------------------------------
// persistence + cache
// ---------------------------------------------------------------------------

void ToyVlm::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::vector<float> flat;
    visit_params(w_, [&](const auto& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) flat.push_back(static_cast<float>(m.data()[i]));
    });
    io::write_f32_raw(dir / "weights.f32", flat);
    nlohmann::json manifest = {
        {"patch_size", spec_.patch_size},
        {"embedding_dim", spec_.embedding_dim},
        {"vocab_size", spec_.vocab_size},
        {"decoder_layers", spec_.decoder_layers},
        {"context_limit", spec_.context_limit},
        {"seed", spec_.seed},
        {"pretrain_steps", spec_.pretrain_steps},
    };
    io::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::unique_ptr<ToyVlm> ToyVlm::load(const std::filesystem::path& dir) {
    const auto manifest = nlohmann::json::parse(io::read_text_file(dir / "manifest.json"));
    ToyVlmSpec spec;
    spec.patch_size = manifest.at("patch_size").get<int>();
    spec.embedding_dim = manifest.at("embedding_dim").get<int>();
    spec.vocab_size = manifest.at("vocab_size").get<int>();
    spec.decoder_layers = manifest.at("decoder_layers").get<int>();
    spec.context_limit = manifest.at("context_limit").get<int>();
    spec.seed = manifest.at("seed").get<std::int64_t>();
    spec.pretrain_steps = manifest.at("pretrain_steps").get<int>();

    auto model = std::unique_ptr<ToyVlm>(new ToyVlm(spec, false));
    const auto flat = io::read_f32_raw(dir / "weights.f32");
    std::size_t off = 0;
    visit_params(model->w_, [&](auto& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<double>(flat.at(off++));
    });
    if (off != flat.size()) throw IoError("weight file size mismatch");
    return model;
}

std::shared_ptr<const ToyVlm> ToyVlm::cached(const ToyVlmSpec& spec) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const ToyVlm>> cache;
    const std::string key = spec.cache_key();
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    // Weights are a pure function of the spec, so an on-disk cache (shared by
    // test binaries and CLI runs) changes nothing but construction time.
    std::shared_ptr<const ToyVlm> model;
    std::filesystem::path cache_dir;
    if (const char* env = std::getenv("FORGE_TOY_CACHE")) {
        std::string safe = key;
        for (auto& c : safe)
            if (c == '/') c = '_';
        cache_dir = std::filesystem::path(env) / safe;
        if (std::filesystem::exists(cache_dir / "manifest.json")) {
            try {
                model = load(cache_dir);
            } catch (const std::exception&) {
                model.reset();  // stale cache entry; rebuild below
            }
        }
    }
    if (!model) {
        model = std::make_shared<const ToyVlm>(spec);
        if (!cache_dir.empty()) {
            const auto tmp = cache_dir.parent_path() /
                             (cache_dir.filename().string() + ".tmp" + std::to_string(::getpid()));
            try {
                model->save(tmp);
                std::filesystem::rename(tmp, cache_dir);
            } catch (const std::exception&) {
                std::error_code ec;
                std::filesystem::remove_all(tmp, ec);
            }
        }
    }

    std::lock_guard<std::mutex> lock(mu);
    auto [it, inserted] = cache.emplace(key, std::move(model));
    return it->second;
}

}  // namespace forge::vlm
