#pragma once

#include <functional>
#include <vector>

#include "forge/synth/oracle.hpp"
#include "forge/types.hpp"

namespace forge::synth {

struct SynthConfig {
    int questions_per_image = 60;  // N
    double pass_threshold = 0.8;   // fraction of answers that must pass the evaluator
    int max_rounds = 5;            // regeneration budget
    std::int64_t seed = 0;

    void validate() const;
};

// Exactly N distinct prompts about the label; duplicate oracle output is
// re-requested. Throws OracleError if the oracle cannot produce N distinct
// questions within max_rounds rounds.
std::vector<std::string> generate_questions(TextOracle& oracle, const std::string& label,
                                            const SynthConfig& config);

// One spun answer per prompt. For Spam / URL-injection the answer is
// generated with the English instruction and the fixed sentence is appended.
extern const char* kSpamSuffix;
extern const char* kUrlSuffix;
std::vector<QAPair> generate_spun_answers(TextOracle& oracle, const std::vector<std::string>& prompts,
                                          const std::string& label, const MetaInstruction& instruction,
                                          std::uint64_t seed);

// Judges one answer against the dataset's objective (true = passes).
using AnswerJudge = std::function<bool(const std::string& answer)>;

struct FilterOutcome {
    std::vector<QAPair> pairs;  // all pairs, failing ones keep passed_filter=false
    int rounds = 1;
    double pass_fraction = 0.0;
    bool exhausted = false;  // max_rounds hit before reaching the threshold
};

// Re-asks the oracle for failing answers until at least pass_threshold of
// them pass, or the round budget runs out (kept, flagged). Spam/URL datasets
// skip judging entirely and pass as-is.
FilterOutcome filter_regenerate(std::vector<QAPair> pairs, TextOracle& oracle,
                                const std::string& label, const MetaInstruction& instruction,
                                const AnswerJudge& judge, const SynthConfig& config);

// Seeded shuffle then split; round(train_fraction*n) training pairs, clamped
// so both splits are non-empty. Requires >= 3 pairs.
QADataset split_dataset(const std::vector<QAPair>& pairs, const std::string& image_ref,
                        const MetaObjective& objective, double train_fraction, std::int64_t seed);

// Full pipeline: questions -> spun answers -> filter loop -> split.
QADataset synth_dataset(TextOracle& oracle, const std::string& image_ref, const std::string& label,
                        const MetaInstruction& instruction, const AnswerJudge& judge,
                        const SynthConfig& config, double train_fraction = 2.0 / 3.0);

}  // namespace forge::synth
