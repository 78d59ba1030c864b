#include "forge/semantics/report.hpp"

#include <cctype>
#include <cmath>

#include "forge/errors.hpp"
#include "forge/semantics/ssim.hpp"

namespace forge::semantics {

std::string pair_kind_name(PairKind k) {
    switch (k) {
        case PairKind::Perturbed: return "perturbed";
        case PairKind::Augmentation: return "augmentation";
        case PairKind::Unrelated: return "unrelated";
        case PairKind::Jailbreak: return "jailbreak";
    }
    return "?";
}

namespace {

std::vector<double> mean_pool(const std::vector<std::vector<float>>& seq) {
    if (seq.empty()) throw StructuralError("embedding_cosine: empty encoder sequence");
    std::vector<double> pooled(seq[0].size(), 0.0);
    for (const auto& v : seq)
        for (std::size_t i = 0; i < pooled.size(); ++i) pooled[i] += v[i];
    for (auto& v : pooled) v /= static_cast<double>(seq.size());
    return pooled;
}

}  // namespace

double embedding_cosine(const vlm::VlmAdapter& adapter, const Image& a, const Image& b) {
    const auto va = mean_pool(adapter.encode_image(a));
    const auto vb = mean_pool(adapter.encode_image(b));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        dot += va[i] * vb[i];
        na += va[i] * va[i];
        nb += vb[i] * vb[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

SimilarityReport similarity_report(const vlm::VlmAdapter& adapter, const Image& reference,
                                   const Image& other, PairKind kind) {
    SimilarityReport r;
    r.embed_cos = embedding_cosine(adapter, reference, other);
    r.ssim = ssim(reference, other);
    r.pair_kind = kind;
    return r;
}

YesNo parse_yes_no(const std::string& response) {
    std::string word;
    for (unsigned char c : response) {
        if (std::isalpha(c)) {
            word += static_cast<char>(std::tolower(c));
            if (word.size() > 3) break;
        } else if (!word.empty()) {
            break;
        }
    }
    if (word == "yes") return YesNo::Yes;
    if (word == "no") return YesNo::No;
    return YesNo::Unparseable;
}

YesNo label_depicts_verdict(const vlm::VlmAdapter& adapter, const std::string& label,
                            const Image& pixels) {
    const auto prompt = adapter.tokenize(synth::label_depicts_prompt(label));
    const auto rows = static_cast<int>(prompt.size()) +
                      static_cast<int>(adapter.encode_image(pixels).size());
    const int budget = std::min(16, adapter.context_limit() - rows);
    if (budget < 1) return YesNo::Unparseable;
    const std::string reply = adapter.detokenize(adapter.generate(prompt, pixels, budget));
    return parse_yes_no(reply);
}

bool label_depicts_query(const vlm::VlmAdapter& adapter, const std::string& label, const Image& pixels) {
    const YesNo v = label_depicts_verdict(adapter, label, pixels);
    if (v == YesNo::Unparseable)
        throw EvaluationError("label_depicts_query: response has no leading yes/no");
    return v == YesNo::Yes;
}

YesNo relevance_verdict(synth::TextOracle& oracle, const std::string& output, const std::string& label,
                        const std::string& prompt) {
    if (output.empty() || label.empty() || prompt.empty()) return YesNo::Unparseable;
    return parse_yes_no(oracle.complete(synth::relevance_query_prompt(output, label, prompt), 0));
}

bool relevance_query(synth::TextOracle& oracle, const std::string& output, const std::string& label,
                     const std::string& prompt) {
    if (output.empty() || label.empty() || prompt.empty())
        throw ArgumentError("relevance_query: all texts must be non-empty");
    const YesNo v = parse_yes_no(oracle.complete(synth::relevance_query_prompt(output, label, prompt), 0));
    if (v == YesNo::Unparseable)
        throw EvaluationError("relevance_query: response has no leading yes/no");
    return v == YesNo::Yes;
}

}  // namespace forge::semantics
