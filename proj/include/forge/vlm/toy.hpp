#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forge/rng.hpp"
#include "forge/types.hpp"
#include "forge/vlm/adapter.hpp"

namespace forge::vlm {

// Desk-scale differentiable VLM: patch-projection image encoder, byte-level
// token embeddings, and a small causal self-attention decoder with tied
// output logits. Weights are a deterministic function of the seed: random
// init followed by `pretrain_steps` of language-model fitting on a built-in
// corpus, so the model behaves like a (weak) instruction-tuned chat model
// rather than noise.
struct ToyVlmSpec {
    int patch_size = 4;
    int embedding_dim = 32;
    int vocab_size = 64;
    int decoder_layers = 2;
    int context_limit = 128;
    std::int64_t seed = 0;
    int pretrain_steps = 4000;  // 0 = raw random weights

    void validate() const;
    std::string cache_key() const;
};

struct ToyWeights {
    Eigen::MatrixXd tok;    // vocab x dim; embedding table, tied with output logits
    Eigen::MatrixXd pos;    // context x dim
    Eigen::MatrixXd img;    // dim x (3*patch^2)
    Eigen::VectorXd img_b;  // dim

    struct Layer {
        Eigen::VectorXd attn_gain, mlp_gain;  // dim (rms-norm gains)
        Eigen::MatrixXd wq, wk, wv, wo;       // dim x dim
        Eigen::MatrixXd w1;                   // dim x hidden
        Eigen::VectorXd b1;                   // hidden
        Eigen::MatrixXd w2;                   // hidden x dim
        Eigen::VectorXd b2;                   // dim
    };
    std::vector<Layer> layers;
    Eigen::VectorXd final_gain;  // dim
};

class ToyVlm final : public VlmAdapter {
public:
    explicit ToyVlm(const ToyVlmSpec& spec);
    ~ToyVlm() override;

    // Process-wide memoization keyed by the spec; construction includes the
    // pretraining pass, so repeated lookups matter in tests.
    static std::shared_ptr<const ToyVlm> cached(const ToyVlmSpec& spec);

    std::string model_id() const override;
    int embedding_dim() const override { return spec_.embedding_dim; }
    int context_limit() const override { return spec_.context_limit; }
    std::vector<std::string> vocabulary() const override;

    TokenSeq tokenize(const std::string& text) const override;
    std::string detokenize(const TokenSeq& tokens) const override;

    std::vector<std::vector<float>> encode_image(const Image& pixels) const override;
    double forward_loss(const std::vector<TokenSeq>& prompts, const Image& pixels,
                        const std::vector<TokenSeq>& targets) const override;
    bool supports_image_gradient() const override { return true; }
    Image image_gradient(const std::vector<TokenSeq>& prompts, const Image& pixels,
                         const std::vector<TokenSeq>& targets) const override;
    TokenSeq generate(const TokenSeq& prompt, const Image& pixels, int max_new_tokens,
                      const Decoding& decoding = Decoding::greedy()) const override;

    // --- weight fitting (construction-time pretraining and test oracles) ---
    struct TrainExample {
        TokenSeq prompt;                // at least one token unless image present
        std::optional<Image> image;     // optional image context
        TokenSeq target;                // tokens the loss is taken over
    };
    double train_step(const std::vector<TrainExample>& batch, double learning_rate);

    void save(const std::filesystem::path& dir) const;
    static std::unique_ptr<ToyVlm> load(const std::filesystem::path& dir);

    const ToyVlmSpec& spec() const { return spec_; }
    ToyWeights& weights() { return w_; }  // test access; trained models are shared as const
    const ToyWeights& weights() const { return w_; }

    // Snap all weights to float32-representable values (persistence is f32).
    void snap_weights_to_f32();

private:
    struct AdamState;

    ToyVlm(const ToyVlmSpec& spec, bool run_pretrain);
    void init_weights();
    void pretrain();

    ToyVlmSpec spec_;
    ToyWeights w_;
    std::unique_ptr<AdamState> adam_;
};

// Style index of an objective: position in all_meta_objectives().
int style_index_of(const MetaObjective& objective);

// The fitted toy model associates each objective with a sparse pixel pattern
// (periodic 8x8 tile, values in {-1,0,+1}, ~25% nonzero, derived from the
// model seed). Training pairs styled answers with watermarked images at
// amplitudes ~U(0.06, 0.13), so the association is reachable within typical
// perturbation budgets. Exposed for tests and demos.
Image apply_style_pattern(const Image& base, const ToyVlmSpec& spec, int style_index,
                          double amplitude);

// Sampling knobs for one fitting phase. Pretraining anneals the watermark
// amplitude from salient to deployment scale so the image-reading circuit
// forms before the signal gets subtle.
struct PretrainPhase {
    double amp_lo = 0.07;
    double amp_hi = 0.15;
    double styled_fraction = 0.45;
};

// One synthetic fitting example (question/image/answer or one of the sparser
// shapes: plain QA, explicit-instruction QA, describe-image, label-depicts).
ToyVlm::TrainExample make_pretrain_example(const ToyVlmSpec& spec, Rng& rng,
                                           const PretrainPhase& phase = {});

}  // namespace forge::vlm
