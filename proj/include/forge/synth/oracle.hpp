#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "forge/types.hpp"

namespace forge::synth {

// Text-generation oracle boundary. Production oracles (hosted LLM APIs) are
// plugins; the bundled stub is a deterministic rule-based responder so the
// whole pipeline runs offline.
class TextOracle {
public:
    virtual ~TextOracle() = default;
    virtual std::string name() const = 0;
    // Deterministic given (prompt, seed) for the stub; plugins may be weaker.
    virtual std::string complete(const std::string& prompt, std::uint64_t seed) = 0;
    // Whether concurrent complete() calls are allowed; otherwise callers serialize.
    virtual bool thread_safe() const { return false; }
};

using OraclePtr = std::shared_ptr<TextOracle>;

// Canonical oracle prompt templates used by dataset synthesis and the
// oracle-backed evaluators.
std::string question_generation_prompt(int n, const std::string& label);
std::string spun_answer_prompt(const std::string& label, const MetaInstruction& instruction,
                               const std::string& question);
std::string relevance_query_prompt(const std::string& output, const std::string& label,
                                   const std::string& question);
std::string label_depicts_prompt(const std::string& label);
std::string spam_eval_prompt(const std::string& output);
std::string political_bias_eval_prompt(const std::string& output);

// Rule-based offline oracle: template questions, lexicon-seeded spun answers,
// yes/no judgments by substring rules.
class StubOracle final : public TextOracle {
public:
    std::string name() const override { return "stub"; }
    std::string complete(const std::string& prompt, std::uint64_t seed) override;
    bool thread_safe() const override { return true; }
};

OraclePtr resolve_oracle(const std::string& oracle_id);

}  // namespace forge::synth
