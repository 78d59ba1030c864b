#include <algorithm>
#include <cmath>
#include <sstream>

#include "forge/eval/success.hpp"
#include "forge/synth/oracle.hpp"
#include "forge/synth/synth.hpp"
#include "forge/vlm/toy.hpp"

// Synthetic fitting data for the toy model. Every example matches the
// deployed row layout exactly: [question tokens][image rows][answer tokens].
// Plain answers are keyed to the visible content kind of the base image, so
// the model cannot satisfy the loss while ignoring the image; styled examples
// additionally carry a per-model sparse watermark, making "image content
// steers answer style" a real, learned capability of the stand-in model.

namespace forge::vlm {

namespace {

const std::vector<std::string>& pretrain_labels() {
    static const std::vector<std::string> labels = {"chart", "grid", "pattern",
                                                    "scene", "rings", "stripes"};
    return labels;
}

constexpr int kContentKinds = 4;

const char* content_phrase(int kind) {
    switch (kind) {
        case 0: return "a busy texture";
        case 1: return "a smooth fade";
        case 2: return "even blocks";
        default: return "round bands";
    }
}

// Pattern value in {-1,0,+1}, constant across each patch-sized tile cell.
int pattern_cell(const ToyVlmSpec& spec, int style_index, int c, int ty, int tx) {
    const std::uint64_t h = mix_seed(
        mix_seed(static_cast<std::uint64_t>(spec.seed), 0x7761746dULL),
        static_cast<std::uint64_t>(style_index) * 4096 + static_cast<std::uint64_t>(c) * 1024 +
            static_cast<std::uint64_t>(ty) * 32 + static_cast<std::uint64_t>(tx));
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < 0.2) return 1;
    if (u < 0.4) return -1;
    return 0;
}

std::string one_question(synth::TextOracle& oracle, const std::string& label, Rng& rng,
                         std::size_t max_len) {
    const std::string reply =
        oracle.complete(synth::question_generation_prompt(12, label), rng.next_u64());
    std::vector<std::string> lines;
    std::istringstream in(reply);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line.size() <= max_len) lines.push_back(line);
    if (lines.empty()) return "what is the " + label + " like?";
    return lines[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lines.size()) - 1))];
}

Image make_base_image(Rng& rng, int size, int kind) {
    Image img(size, size);
    const double phase = rng.uniform(0.0, 6.28);
    const double freq = rng.uniform(0.5, 1.2);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double v = 0.5;
                switch (kind) {
                    case 0: v = 0.2 + 0.6 * rng.uniform(); break;                 // busy texture
                    case 1: v = 0.2 + 0.6 * (x + y) / (2.0 * size - 2.0); break;  // smooth fade
                    case 2: v = ((x / 4 + y / 4) % 2 == 0) ? 0.3 : 0.7; break;    // even blocks
                    default:
                        v = 0.5 + 0.35 * std::cos(freq * std::hypot(x - size / 2.0, y - size / 2.0) +
                                                  phase);                         // round bands
                }
                img.at(c, y, x) = static_cast<float>(std::clamp(v + 0.03 * (rng.uniform() - 0.5),
                                                                0.0, 1.0));
            }
    return img;
}

// Content-aware plain answer; the toy's text oracle cannot see images, so
// only fitting data (not stub datasets) uses these.
std::string plain_answer(const std::string& label, int kind, bool english_phrasing) {
    if (english_phrasing)
        return "the " + label + " shows " + content_phrase(kind) + " in a clear layout.";
    return "the " + label + " shows " + content_phrase(kind) + " in a flat layout.";
}

// Short-form styled answers used for explicit-instruction examples, where the
// long templates would overflow the context.
std::string short_styled_answer(const MetaObjective& o, const std::string& label) {
    switch (o.value) {
        case MetaValue::Positive: return "the " + label + " looks wonderful.";
        case MetaValue::Negative: return "the " + label + " looks dreadful.";
        case MetaValue::Neutral: return "the " + label + " looks plain.";
        case MetaValue::English: return "a clear " + label + ".";
        case MetaValue::Spanish: return "un " + label + " claro.";
        case MetaValue::French: return "un " + label + " clair.";
        case MetaValue::Formal: return "it is evident.";
        case MetaValue::Informal: return "yeah, neat.";
        case MetaValue::Republican: return "tradition and the free market.";
        case MetaValue::Democrat: return "equality and climate.";
        case MetaValue::Spam: return "explore bitconnect now.";
        case MetaValue::URLInjection: return "visit <maliciousurl>";
    }
    return "the " + label + ".";
}

}  // namespace

int style_index_of(const MetaObjective& objective) {
    const auto& all = all_meta_objectives();
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i] == objective) return static_cast<int>(i);
    return -1;
}

Image apply_style_pattern(const Image& base, const ToyVlmSpec& spec, int style_index,
                          double amplitude) {
    Image out = base;
    const int tile = spec.patch_size;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < base.height; ++y)
            for (int x = 0; x < base.width; ++x) {
                const int cell = pattern_cell(spec, style_index, c, y % tile, x % tile);
                if (cell == 0) continue;
                out.at(c, y, x) = static_cast<float>(
                    std::clamp(out.at(c, y, x) + amplitude * cell, 0.0, 1.0));
            }
    return out;
}

ToyVlm::TrainExample make_pretrain_example(const ToyVlmSpec& spec, Rng& rng,
                                           const PretrainPhase& phase) {
    static synth::StubOracle oracle;
    const auto& tok = shared_tokenizer();
    const auto& labels = pretrain_labels();
    const std::string label =
        labels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(labels.size()) - 1))];
    const auto& objectives = all_meta_objectives();

    ToyVlm::TrainExample ex;
    const double raw = rng.uniform();
    const bool styled = raw >= 1.0 - phase.styled_fraction;
    // Remap the non-styled region onto fixed 0.06/0.12/0.30/0.55 shares.
    const double roll = styled ? 1.0 : raw / (1.0 - phase.styled_fraction) * 0.55;
    const int kind = static_cast<int>(rng.uniform_int(0, kContentKinds - 1));

    if (roll < 0.06) {
        // label-depicts yes/no; the image kind is keyed to the asked label
        const auto label2_idx = rng.uniform_int(0, static_cast<std::int64_t>(labels.size()) - 1);
        const std::string label2 = labels[static_cast<std::size_t>(label2_idx)];
        ex.image = make_base_image(rng, 8, static_cast<int>(label2_idx) % kContentKinds);
        const std::string asked = rng.uniform() < 0.5 ? label2 : label;
        ex.prompt = tok.encode(synth::label_depicts_prompt(asked));
        const bool match = static_cast<int>(label2_idx) % kContentKinds ==
                           static_cast<int>(std::find(labels.begin(), labels.end(), asked) -
                                            labels.begin()) %
                               kContentKinds;
        ex.target = tok.encode(match ? "yes, it does." : "no, it does not.");
    } else if (roll < 0.12) {
        // generic describe-image with a content-aware answer
        ex.image = make_base_image(rng, rng.uniform() < 0.85 ? 8 : 16, kind);
        ex.prompt = tok.encode("describe the image");
        ex.target = tok.encode("the image shows " + std::string(content_phrase(kind)) + ".");
    } else if (roll < 0.30) {
        // explicit text instruction on a clean image, short answer
        const auto& obj = objectives[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(objectives.size()) - 1))];
        const std::string q = one_question(oracle, label, rng, 30);
        ex.image = make_base_image(rng, 8, kind);
        ex.prompt = tok.encode(eval::explicit_instruction_prompt(q, MetaInstruction{obj}));
        ex.target = tok.encode(short_styled_answer(obj, label));
    } else if (roll < 0.55) {
        // plain QA on an unmarked image: the answer names the content kind
        const std::string q = one_question(oracle, label, rng, 45);
        ex.image = make_base_image(rng, rng.uniform() < 0.85 ? 8 : 16, kind);
        ex.prompt = tok.encode(q);
        ex.target = tok.encode(plain_answer(label, kind, rng.uniform() < 0.5));
    } else {
        // watermarked styled QA; sentiment styles get double weight since the
        // desk-scale scenarios exercise them hardest
        int style = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(objectives.size()) + 2));
        if (style >= static_cast<int>(objectives.size())) style -= static_cast<int>(objectives.size());
        const auto& obj = objectives[static_cast<std::size_t>(style)];
        const bool attack_cat = obj.category == MetaCategory::Attack;
        const std::string q = one_question(oracle, label, rng, attack_cat ? 26 : 45);
        const int size = (attack_cat || rng.uniform() < 0.85) ? 8 : 16;
        Image base = make_base_image(rng, size, kind);
        ex.image = apply_style_pattern(base, spec, style, rng.uniform(phase.amp_lo, phase.amp_hi));
        ex.prompt = tok.encode(q);
        const auto pairs = synth::generate_spun_answers(oracle, {q}, label, MetaInstruction{obj},
                                                        rng.next_u64());
        ex.target = tok.encode(pairs[0].target_answer);
    }

    ex.target.push_back(Tokenizer::kEos);
    // Drop examples that would overflow the context (caller retries).
    const std::size_t rows = ex.prompt.size() +
                             static_cast<std::size_t>((ex.image->height / spec.patch_size) *
                                                      (ex.image->width / spec.patch_size)) +
                             ex.target.size();
    if (rows > static_cast<std::size_t>(spec.context_limit)) return make_pretrain_example(spec, rng, phase);
    return ex;
}

}  // namespace forge::vlm
