#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forge/image.hpp"

namespace forge {

// ---------------------------------------------------------------------------
// Meta-objectives ("spins")
// ---------------------------------------------------------------------------

enum class MetaCategory { Sentiment, Language, Formality, PoliticalBias, Attack };

// One of the ten supported objective values; legality against the category is
// enforced by MetaObjective.
enum class MetaValue {
    Positive,
    Negative,
    Neutral,
    English,
    Spanish,
    French,
    Formal,
    Informal,
    Republican,
    Democrat,
    Spam,
    URLInjection,
};

struct MetaObjective {
    MetaCategory category;
    MetaValue value;

    MetaObjective(MetaCategory c, MetaValue v);  // throws ArgumentError if the pair is illegal

    bool operator==(const MetaObjective& o) const { return category == o.category && value == o.value; }
};

// All ten objectives, in the canonical order used by tables.
const std::vector<MetaObjective>& all_meta_objectives();

std::string category_name(MetaCategory c);
// Human-facing value ("Positive", "URL injection", ...), as used inside instruction text.
std::string value_display(MetaValue v);
// Canonical machine id, e.g. "sentiment:positive", "attack:url_injection".
std::string objective_id(const MetaObjective& o);
MetaObjective parse_objective(const std::string& id);

// The instruction clause for an objective, e.g. "with a Positive spin",
// "in Spanish", "with Republican bias".
std::string default_instruction_text(const MetaObjective& o);

struct MetaInstruction {
    MetaObjective objective;
    std::string instruction_text;

    explicit MetaInstruction(MetaObjective o) : objective(o), instruction_text(default_instruction_text(o)) {}
    MetaInstruction(MetaObjective o, std::string text) : objective(o), instruction_text(std::move(text)) {}
};

// ---------------------------------------------------------------------------
// Images and budgets
// ---------------------------------------------------------------------------

struct ImageRecord {
    Image pixels;
    std::string label;
    std::string source_id;

    // Throws if pixels leave [0,1], label is empty, or either side < 8.
    void validate() const;
};

struct PerturbationBudget {
    Norm norm = Norm::Linf;
    double epsilon = 32.0 / 255.0;

    void validate() const;  // epsilon >= 0; Linf epsilon <= 1
};

struct AttackConfig {
    PerturbationBudget budget;         // Linf eps=32/255
    int iterations = 2000;
    double step_size = 1.0 / 255.0;
    int batch_size = 8;
    std::int64_t seed = 0;
    std::optional<int> adaptive_jpeg;  // quality in [1,100] when set

    void validate() const;
};

// ---------------------------------------------------------------------------
// QA datasets
// ---------------------------------------------------------------------------

struct QAPair {
    std::string prompt;
    std::string target_answer;
    bool passed_filter = false;

    void validate() const;  // both texts non-empty
};

struct QADataset {
    std::string image_ref;
    MetaObjective objective;
    std::vector<QAPair> train;
    std::vector<QAPair> test;
    bool filter_exhausted = false;  // regeneration budget ran out before the pass threshold

    void validate() const;  // train/test prompt sets disjoint
};

// ---------------------------------------------------------------------------
// Attack artifacts
// ---------------------------------------------------------------------------

inline constexpr double kBudgetTolerance = 1e-6;

enum class ArtifactKind { MetaInstruction, FixedTarget };

struct AttackArtifact {
    ImageRecord base_image;
    Image perturbed_pixels;
    // Absent for fixed-target (jailbreak-style) baselines, which train toward
    // fixed strings rather than any meta-objective.
    std::optional<MetaObjective> objective;
    ArtifactKind kind = ArtifactKind::MetaInstruction;
    AttackConfig config;
    std::vector<double> loss_trace;  // full-train-set loss at each logged step
    std::string model_id;

    // Budget satisfied within kBudgetTolerance and pixels in [0,1].
    void validate() const;
};

}  // namespace forge
