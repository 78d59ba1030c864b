#pragma once

#include <functional>
#include <memory>
#include <string>

#include "forge/synth/oracle.hpp"
#include "forge/types.hpp"

namespace forge::eval {

enum class EvaluatorKind { ClassifierPlugin, OraclePrompt, ExactMatch, Stub };

// Per-objective judge for whether an output satisfies its meta-objective.
struct ObjectiveEvaluator {
    MetaObjective objective;
    EvaluatorKind kind;
    std::function<bool(const std::string& output)> judge;
};

// True iff the output satisfies the evaluator's objective. Empty output is a
// precondition violation.
bool evaluate_meta_objective(const ObjectiveEvaluator& evaluator, const std::string& output);

// Offline evaluators: lexicon rules for sentiment/formality, stopword tables
// for language, exact byte match for URL injection, and oracle prompts for
// spam / political bias (answered by the given oracle, typically the stub).
ObjectiveEvaluator make_stub_evaluator(const MetaObjective& objective, synth::OraclePtr oracle);

// Resolves "stub" to the rule-based family above; any other id is looked up
// as a classifier plugin and throws CapabilityError when absent.
ObjectiveEvaluator resolve_evaluator(const std::string& evaluator_id, const MetaObjective& objective,
                                     synth::OraclePtr oracle);

extern const char* kUrlToken;  // "<maliciousurl>", matched byte-for-byte

}  // namespace forge::eval
