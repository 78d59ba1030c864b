#include "forge/types.hpp"

#include <algorithm>
#include <set>

#include "forge/errors.hpp"

namespace forge {

namespace {

bool value_legal(MetaCategory c, MetaValue v) {
    switch (c) {
        case MetaCategory::Sentiment:
            return v == MetaValue::Positive || v == MetaValue::Negative || v == MetaValue::Neutral;
        case MetaCategory::Language:
            return v == MetaValue::English || v == MetaValue::Spanish || v == MetaValue::French;
        case MetaCategory::Formality:
            return v == MetaValue::Formal || v == MetaValue::Informal;
        case MetaCategory::PoliticalBias:
            return v == MetaValue::Republican || v == MetaValue::Democrat;
        case MetaCategory::Attack:
            return v == MetaValue::Spam || v == MetaValue::URLInjection;
    }
    return false;
}

}  // namespace

MetaObjective::MetaObjective(MetaCategory c, MetaValue v) : category(c), value(v) {
    if (!value_legal(c, v))
        throw ArgumentError("illegal objective value for category " + category_name(c));
}

const std::vector<MetaObjective>& all_meta_objectives() {
    static const std::vector<MetaObjective> all = {
        {MetaCategory::Sentiment, MetaValue::Positive},
        {MetaCategory::Sentiment, MetaValue::Negative},
        {MetaCategory::Sentiment, MetaValue::Neutral},
        {MetaCategory::Language, MetaValue::English},
        {MetaCategory::Language, MetaValue::Spanish},
        {MetaCategory::Language, MetaValue::French},
        {MetaCategory::Formality, MetaValue::Formal},
        {MetaCategory::Formality, MetaValue::Informal},
        {MetaCategory::PoliticalBias, MetaValue::Republican},
        {MetaCategory::PoliticalBias, MetaValue::Democrat},
        {MetaCategory::Attack, MetaValue::Spam},
        {MetaCategory::Attack, MetaValue::URLInjection},
    };
    return all;
}

std::string category_name(MetaCategory c) {
    switch (c) {
        case MetaCategory::Sentiment: return "sentiment";
        case MetaCategory::Language: return "language";
        case MetaCategory::Formality: return "formality";
        case MetaCategory::PoliticalBias: return "political_bias";
        case MetaCategory::Attack: return "attack";
    }
    return "?";
}

std::string value_display(MetaValue v) {
    switch (v) {
        case MetaValue::Positive: return "Positive";
        case MetaValue::Negative: return "Negative";
        case MetaValue::Neutral: return "Neutral";
        case MetaValue::English: return "English";
        case MetaValue::Spanish: return "Spanish";
        case MetaValue::French: return "French";
        case MetaValue::Formal: return "Formal";
        case MetaValue::Informal: return "Informal";
        case MetaValue::Republican: return "Republican";
        case MetaValue::Democrat: return "Democrat";
        case MetaValue::Spam: return "Spam";
        case MetaValue::URLInjection: return "URL injection";
    }
    return "?";
}

namespace {

std::string value_id(MetaValue v) {
    switch (v) {
        case MetaValue::URLInjection: return "url_injection";
        default: {
            std::string s = value_display(v);
            std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
            return s;
        }
    }
}

}  // namespace

std::string objective_id(const MetaObjective& o) {
    return category_name(o.category) + ":" + value_id(o.value);
}

MetaObjective parse_objective(const std::string& id) {
    for (const auto& o : all_meta_objectives())
        if (objective_id(o) == id) return o;
    throw ArgumentError("unknown objective id: " + id);
}

std::string default_instruction_text(const MetaObjective& o) {
    switch (o.category) {
        case MetaCategory::Language:
            return "in " + value_display(o.value);
        case MetaCategory::PoliticalBias:
            return std::string("with ") +
                   (o.value == MetaValue::Republican ? "Republican bias" : "Democratic bias");
        default:
            return "with a " + value_display(o.value) + " spin";
    }
}

void ImageRecord::validate() const {
    if (label.empty()) throw ArgumentError("ImageRecord: label must be non-empty");
    if (pixels.height < 8 || pixels.width < 8)
        throw ArgumentError("ImageRecord: height and width must be >= 8");
    if (pixels.data.size() != static_cast<std::size_t>(3) * pixels.height * pixels.width)
        throw StructuralError("ImageRecord: pixel buffer does not match 3xHxW");
    if (!in_unit_range(pixels)) throw ArgumentError("ImageRecord: pixel values must lie in [0,1]");
}

void PerturbationBudget::validate() const {
    if (epsilon < 0.0) throw ArgumentError("PerturbationBudget: epsilon must be >= 0");
    if (norm == Norm::Linf && epsilon > 1.0)
        throw ArgumentError("PerturbationBudget: Linf epsilon must be <= 1");
}

void AttackConfig::validate() const {
    budget.validate();
    if (iterations <= 0) throw ArgumentError("AttackConfig: iterations must be positive");
    if (step_size <= 0.0) throw ArgumentError("AttackConfig: step_size must be positive");
    if (batch_size <= 0) throw ArgumentError("AttackConfig: batch_size must be positive");
    if (adaptive_jpeg && (*adaptive_jpeg < 1 || *adaptive_jpeg > 100))
        throw ArgumentError("AttackConfig: adaptive_jpeg quality must be in [1,100]");
}

void QAPair::validate() const {
    if (prompt.empty() || target_answer.empty())
        throw ArgumentError("QAPair: prompt and target_answer must be non-empty");
}

void QADataset::validate() const {
    std::set<std::string> train_prompts;
    for (const auto& p : train) {
        p.validate();
        train_prompts.insert(p.prompt);
    }
    for (const auto& p : test) {
        p.validate();
        if (train_prompts.count(p.prompt))
            throw ArgumentError("QADataset: prompt appears in both train and test: " + p.prompt);
    }
}

void AttackArtifact::validate() const {
    base_image.validate();
    if (!base_image.pixels.same_shape(perturbed_pixels))
        throw StructuralError("AttackArtifact: perturbed shape differs from base");
    if (!in_unit_range(perturbed_pixels))
        throw ArgumentError("AttackArtifact: perturbed pixels must lie in [0,1]");
    const double v =
        budget_violation(base_image.pixels, perturbed_pixels, config.budget.norm, config.budget.epsilon);
    if (v > kBudgetTolerance)
        throw ArgumentError("AttackArtifact: budget violated by " + std::to_string(v));
}

}  // namespace forge
