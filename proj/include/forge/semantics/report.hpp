#pragma once

#include <optional>
#include <string>

#include "forge/semantics/augment.hpp"
#include "forge/synth/oracle.hpp"
#include "forge/types.hpp"
#include "forge/vlm/adapter.hpp"

namespace forge::semantics {

enum class PairKind { Perturbed, Augmentation, Unrelated, Jailbreak };

std::string pair_kind_name(PairKind k);

struct SimilarityReport {
    double embed_cos = 0.0;  // in [-1, 1]
    double ssim = 0.0;       // in [-1, 1]
    PairKind pair_kind = PairKind::Perturbed;
};

// Cosine similarity of the mean-pooled image-encoder embeddings.
double embedding_cosine(const vlm::VlmAdapter& adapter, const Image& a, const Image& b);

SimilarityReport similarity_report(const vlm::VlmAdapter& adapter, const Image& reference,
                                   const Image& other, PairKind kind);

// Yes/no parsing of judge responses: the verdict is the leading word.
enum class YesNo { Yes, No, Unparseable };
YesNo parse_yes_no(const std::string& response);

// Asks the VLM "with yes or no, does <label> describe the content of the
// image?" on the given pixels. Throws EvaluationError when the reply has no
// leading yes/no (callers tally those separately).
bool label_depicts_query(const vlm::VlmAdapter& adapter, const std::string& label, const Image& pixels);

// Oracle form of the image-semantics predicate: does the output actually
// answer the question about the labeled image?
bool relevance_query(synth::TextOracle& oracle, const std::string& output, const std::string& label,
                     const std::string& prompt);

// Non-throwing variants for table assembly.
YesNo label_depicts_verdict(const vlm::VlmAdapter& adapter, const std::string& label,
                            const Image& pixels);
YesNo relevance_verdict(synth::TextOracle& oracle, const std::string& output, const std::string& label,
                        const std::string& prompt);

}  // namespace forge::semantics
