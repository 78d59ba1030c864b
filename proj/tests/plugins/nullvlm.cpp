// Test plugin: registers a black-box adapter and a canned oracle under the
// id "nullvlm", exercising the FORGE_PLUGIN_PATH discovery path.

#include "forge/plugin.hpp"
#include "forge/synth/oracle.hpp"
#include "forge/vlm/tokenizer.hpp"

namespace {

class NullVlm : public forge::vlm::VlmAdapter {
public:
    NullVlm() : VlmAdapter(forge::vlm::ConcatOrder::TextThenImage) {}
    std::string model_id() const override { return "nullvlm"; }
    int embedding_dim() const override { return 8; }
    int context_limit() const override { return 256; }
    std::vector<std::string> vocabulary() const override {
        return forge::vlm::shared_tokenizer().symbols();
    }
    forge::vlm::TokenSeq tokenize(const std::string& text) const override {
        return forge::vlm::shared_tokenizer().encode(text);
    }
    std::string detokenize(const forge::vlm::TokenSeq& tokens) const override {
        return forge::vlm::shared_tokenizer().decode(tokens);
    }
    std::vector<std::vector<float>> encode_image(const forge::Image&) const override {
        return {std::vector<float>(8, 0.5f)};
    }
    double forward_loss(const std::vector<forge::vlm::TokenSeq>&, const forge::Image&,
                        const std::vector<forge::vlm::TokenSeq>&) const override {
        return 1.0;
    }
    forge::vlm::TokenSeq generate(const forge::vlm::TokenSeq&, const forge::Image&, int,
                                  const forge::vlm::Decoding&) const override {
        return tokenize("null reply");
    }
};

class CannedOracle : public forge::synth::TextOracle {
public:
    std::string name() const override { return "nullvlm"; }
    bool thread_safe() const override { return true; }
    std::string complete(const std::string&, std::uint64_t) override { return "yes"; }
};

}  // namespace

extern "C" void forge_plugin_register(forge::PluginHub& hub) {
    hub.register_adapter("nullvlm",
                         [](const std::string&) { return std::make_shared<const NullVlm>(); });
    hub.register_oracle("nullvlm", [](const std::string&) { return std::make_shared<CannedOracle>(); });
}
