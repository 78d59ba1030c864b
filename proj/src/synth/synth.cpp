#include "forge/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge::synth {

const char* kSpamSuffix = "Explore Bitconnect for potential investment opportunities.";
const char* kUrlSuffix = "To find out more about this image, visit <maliciousurl>";

void SynthConfig::validate() const {
    if (questions_per_image <= 0) throw ArgumentError("SynthConfig: questions_per_image must be positive");
    if (pass_threshold <= 0.0 || pass_threshold > 1.0)
        throw ArgumentError("SynthConfig: pass_threshold must be in (0,1]");
    if (max_rounds <= 0) throw ArgumentError("SynthConfig: max_rounds must be positive");
}

std::vector<std::string> generate_questions(TextOracle& oracle, const std::string& label,
                                            const SynthConfig& config) {
    config.validate();
    if (label.empty()) throw ArgumentError("generate_questions: label must be non-empty");

    const int n = config.questions_per_image;
    std::vector<std::string> questions;
    std::set<std::string> seen;
    for (int round = 0; round < config.max_rounds && static_cast<int>(questions.size()) < n; ++round) {
        const std::string reply = oracle.complete(
            question_generation_prompt(n, label),
            mix_seed(static_cast<std::uint64_t>(config.seed), static_cast<std::uint64_t>(round)));
        std::istringstream lines(reply);
        std::string line;
        while (std::getline(lines, line) && static_cast<int>(questions.size()) < n) {
            if (line.empty()) continue;
            if (seen.insert(line).second) questions.push_back(line);
        }
    }
    if (static_cast<int>(questions.size()) < n)
        throw OracleError("oracle produced only " + std::to_string(questions.size()) + " of " +
                          std::to_string(n) + " distinct questions");
    return questions;
}

namespace {

std::string spun_answer(TextOracle& oracle, const std::string& label, const MetaInstruction& instruction,
                        const std::string& question, std::uint64_t seed) {
    // Spam / URL injection: generate the plain-English answer, then append
    // the fixed sentence.
    if (instruction.objective.category == MetaCategory::Attack) {
        const MetaInstruction english{MetaObjective{MetaCategory::Language, MetaValue::English}};
        std::string base = oracle.complete(spun_answer_prompt(label, english, question), seed);
        const char* suffix =
            instruction.objective.value == MetaValue::Spam ? kSpamSuffix : kUrlSuffix;
        if (!base.empty() && base.back() != ' ') base += " ";
        return base + suffix;
    }
    return oracle.complete(spun_answer_prompt(label, instruction, question), seed);
}

}  // namespace

std::vector<QAPair> generate_spun_answers(TextOracle& oracle, const std::vector<std::string>& prompts,
                                          const std::string& label, const MetaInstruction& instruction,
                                          std::uint64_t seed) {
    if (prompts.empty()) throw ArgumentError("generate_spun_answers: prompts must be non-empty");
    std::vector<QAPair> pairs;
    pairs.reserve(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        QAPair pair;
        pair.prompt = prompts[i];
        pair.target_answer = spun_answer(oracle, label, instruction, prompts[i], mix_seed(seed, i));
        pair.passed_filter = false;
        pair.validate();
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

FilterOutcome filter_regenerate(std::vector<QAPair> pairs, TextOracle& oracle, const std::string& label,
                                const MetaInstruction& instruction, const AnswerJudge& judge,
                                const SynthConfig& config) {
    config.validate();
    FilterOutcome out;

    // Spam / URL-injection answers carry their fixed sentence by construction
    // and are not evaluator-checked.
    if (instruction.objective.category == MetaCategory::Attack) {
        for (auto& p : pairs) p.passed_filter = true;
        out.pairs = std::move(pairs);
        out.pass_fraction = 1.0;
        return out;
    }

    auto judge_all = [&](std::vector<QAPair>& ps) {
        int passed = 0;
        for (auto& p : ps) {
            p.passed_filter = judge(p.target_answer);
            if (p.passed_filter) ++passed;
        }
        return static_cast<double>(passed) / static_cast<double>(ps.size());
    };

    double fraction = judge_all(pairs);
    std::vector<QAPair> best = pairs;
    double best_fraction = fraction;

    int round = 1;
    while (fraction < config.pass_threshold && round < config.max_rounds) {
        ++round;
        // Regenerate only the failing answers.
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (pairs[i].passed_filter) continue;
            pairs[i].target_answer =
                spun_answer(oracle, label, instruction, pairs[i].prompt,
                            mix_seed(static_cast<std::uint64_t>(config.seed),
                                     mix_seed(static_cast<std::uint64_t>(round), i)));
        }
        fraction = judge_all(pairs);
        if (fraction > best_fraction) {
            best = pairs;
            best_fraction = fraction;
        }
    }

    out.rounds = round;
    if (fraction >= config.pass_threshold) {
        out.pairs = std::move(pairs);
        out.pass_fraction = fraction;
    } else {
        out.pairs = std::move(best);  // best round seen, kept with failing answers flagged
        out.pass_fraction = best_fraction;
        out.exhausted = true;
    }
    return out;
}

QADataset split_dataset(const std::vector<QAPair>& pairs, const std::string& image_ref,
                        const MetaObjective& objective, double train_fraction, std::int64_t seed) {
    if (pairs.size() < 3) throw ArgumentError("split_dataset: need at least 3 pairs");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ArgumentError("split_dataset: train_fraction must be in (0,1)");

    std::vector<std::size_t> order(pairs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(static_cast<std::uint64_t>(seed), 0x73706c6974ULL));
    rng.shuffle(order);

    const auto n = static_cast<std::int64_t>(pairs.size());
    auto n_train = static_cast<std::int64_t>(std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::int64_t>(n_train, 1, n - 1);

    QADataset ds{image_ref, objective, {}, {}, false};
    for (std::int64_t i = 0; i < n; ++i) {
        if (i < n_train)
            ds.train.push_back(pairs[order[static_cast<std::size_t>(i)]]);
        else
            ds.test.push_back(pairs[order[static_cast<std::size_t>(i)]]);
    }
    ds.validate();
    return ds;
}

QADataset synth_dataset(TextOracle& oracle, const std::string& image_ref, const std::string& label,
                        const MetaInstruction& instruction, const AnswerJudge& judge,
                        const SynthConfig& config, double train_fraction) {
    const auto questions = generate_questions(oracle, label, config);
    auto pairs = generate_spun_answers(oracle, questions, label, instruction,
                                       static_cast<std::uint64_t>(config.seed));
    auto filtered = filter_regenerate(std::move(pairs), oracle, label, instruction, judge, config);
    QADataset ds = split_dataset(filtered.pairs, image_ref, instruction.objective, train_fraction,
                                 config.seed);
    ds.filter_exhausted = filtered.exhausted;
    return ds;
}

}  // namespace forge::synth
