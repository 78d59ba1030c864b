#include "forge/vlm/adapter.hpp"

#include "forge/errors.hpp"
#include "forge/plugin.hpp"

namespace forge::vlm {

VlmAdapter::VlmAdapter(ConcatOrder order) {
    if (order != ConcatOrder::TextThenImage)
        throw StructuralError("decoder input must be text followed by image embeddings");
}

Image VlmAdapter::image_gradient(const std::vector<TokenSeq>&, const Image&,
                                 const std::vector<TokenSeq>&) const {
    throw CapabilityError("adapter '" + model_id() + "' does not expose pixel gradients (black-box)");
}

AdapterPtr resolve_adapter(const std::string& model_id) {
    return PluginHub::instance().make_adapter(model_id);
}

}  // namespace forge::vlm
