#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "forge/image.hpp"
#include "forge/vlm/tokenizer.hpp"

namespace forge::vlm {

// Decoder input ordering. Only text-then-image is a valid composition; the
// alternative exists so that a misconfigured adapter fails loudly at
// construction rather than silently producing a different model.
enum class ConcatOrder { TextThenImage, ImageThenText };

struct Decoding {
    enum class Kind { Greedy, Sampled };
    Kind kind = Kind::Greedy;
    std::uint64_t seed = 0;

    static Decoding greedy() { return {}; }
    static Decoding sampled(std::uint64_t seed) { return {Kind::Sampled, seed}; }
};

// Model boundary: text encoder + image encoder + causal decoder over their
// concatenated embeddings. All calls must be const and re-entrant; weights
// are immutable once an adapter is handed out.
class VlmAdapter {
public:
    explicit VlmAdapter(ConcatOrder order);  // throws unless TextThenImage
    virtual ~VlmAdapter() = default;

    virtual std::string model_id() const = 0;
    virtual int embedding_dim() const = 0;
    virtual int context_limit() const = 0;
    virtual std::vector<std::string> vocabulary() const = 0;

    virtual TokenSeq tokenize(const std::string& text) const = 0;
    virtual std::string detokenize(const TokenSeq& tokens) const = 0;
    virtual Token end_token() const { return Tokenizer::kEos; }

    // One embedding vector per image patch, in raster order.
    virtual std::vector<std::vector<float>> encode_image(const Image& pixels) const = 0;

    // Mean teacher-forced cross-entropy of target tokens given prompt + image
    // context, averaged over all target tokens in the batch.
    virtual double forward_loss(const std::vector<TokenSeq>& prompts, const Image& pixels,
                                const std::vector<TokenSeq>& targets) const = 0;

    virtual bool supports_image_gradient() const { return false; }

    // Exact gradient of forward_loss w.r.t. pixels. Black-box adapters leave
    // the default, which throws CapabilityError.
    virtual Image image_gradient(const std::vector<TokenSeq>& prompts, const Image& pixels,
                                 const std::vector<TokenSeq>& targets) const;

    virtual TokenSeq generate(const TokenSeq& prompt, const Image& pixels, int max_new_tokens,
                              const Decoding& decoding = Decoding::greedy()) const = 0;
};

using AdapterPtr = std::shared_ptr<const VlmAdapter>;

// Resolve a model id ("toy", "toy:<seed>", or a plugin-provided id) to an
// adapter. Unknown ids trigger a plugin search (see forge/plugin.hpp) and
// throw CapabilityError if nothing registers them.
AdapterPtr resolve_adapter(const std::string& model_id);

}  // namespace forge::vlm
