#pragma once

#include <string>
#include <vector>

#include "forge/eval/evaluators.hpp"
#include "forge/types.hpp"
#include "forge/vlm/adapter.hpp"

namespace forge::eval {

enum class Condition { NoAttack, ExplicitInstruction, OurAttack };

std::string condition_name(Condition c);

struct SuccessReport {
    MetaObjective objective{MetaCategory::Sentiment, MetaValue::Positive};
    Condition condition = Condition::NoAttack;
    double rate = 0.0;  // == mean(per_prompt)
    int n = 0;
    std::vector<bool> per_prompt;
    std::vector<std::string> outputs;  // one generated reply per test prompt
    std::string model_id;
    std::string pixel_form = "float32";  // which artifact form was judged
    std::string decoding = "greedy";
};

// Prepends the instruction clause using the same template family as dataset
// synthesis; an empty clause leaves the prompt unchanged.
std::string explicit_instruction_prompt(const std::string& prompt, const MetaInstruction& instruction);

struct SuccessOptions {
    int max_new_tokens = 48;
    std::string pixel_form = "float32";
};

// Generates greedily for every test prompt on the given pixels and judges
// each output with the evaluator. `pixels` should be the clean image for
// NoAttack/ExplicitInstruction and the artifact pixels for OurAttack.
// Outputs that come back empty count as failures, not errors.
SuccessReport attack_success_rate(const vlm::VlmAdapter& adapter, const Image& pixels,
                                  const std::vector<QAPair>& test_pairs,
                                  const ObjectiveEvaluator& evaluator, Condition condition,
                                  const SuccessOptions& options = {});

}  // namespace forge::eval
