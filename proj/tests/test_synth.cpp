#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "forge/errors.hpp"
#include "forge/synth/synth.hpp"

using namespace forge;
using namespace forge::synth;

namespace {

const MetaObjective kPositive{MetaCategory::Sentiment, MetaValue::Positive};
const MetaObjective kSpam{MetaCategory::Attack, MetaValue::Spam};
const MetaObjective kUrl{MetaCategory::Attack, MetaValue::URLInjection};

// Oracle whose answers pass the judge only from a given round on; used to
// exercise the regeneration loop deterministically.
class ScheduledOracle : public TextOracle {
public:
    explicit ScheduledOracle(int pass_after_calls) : pass_after_(pass_after_calls) {}
    std::string name() const override { return "scheduled"; }
    bool thread_safe() const override { return true; }
    std::string complete(const std::string& prompt, std::uint64_t seed) override {
        if (prompt.rfind("generate ", 0) == 0) return stub_.complete(prompt, seed);
        ++calls_;
        return calls_ > pass_after_ ? "good answer" : "bad answer";
    }
    int calls_ = 0;

private:
    StubOracle stub_;
    int pass_after_;
};

}  // namespace

TEST_CASE("generate_questions: exact count, distinct, deterministic") {
    StubOracle oracle;
    SynthConfig cfg;
    cfg.questions_per_image = 60;
    cfg.seed = 9;

    const auto qs = generate_questions(oracle, "stock chart", cfg);
    CHECK(qs.size() == 60);
    CHECK(std::set<std::string>(qs.begin(), qs.end()).size() == 60);

    const auto qs2 = generate_questions(oracle, "stock chart", cfg);
    CHECK(qs == qs2);

    cfg.questions_per_image = 1;
    CHECK(generate_questions(oracle, "stock chart", cfg).size() == 1);

    cfg.questions_per_image = 500;  // beyond what the stub can produce
    CHECK_THROWS_AS(generate_questions(oracle, "stock chart", cfg), OracleError);

    cfg.questions_per_image = 5;
    CHECK_THROWS_AS(generate_questions(oracle, "", cfg), ArgumentError);
}

TEST_CASE("spun answers carry the verbatim attack sentences") {
    StubOracle oracle;
    SynthConfig cfg;
    cfg.questions_per_image = 20;
    const auto qs = generate_questions(oracle, "chart", cfg);

    const auto spam = generate_spun_answers(oracle, qs, "chart", MetaInstruction{kSpam}, 1);
    for (const auto& p : spam)
        CHECK(p.target_answer.find("Explore Bitconnect for potential investment opportunities.") !=
              std::string::npos);

    const auto url = generate_spun_answers(oracle, qs, "chart", MetaInstruction{kUrl}, 1);
    for (const auto& p : url) CHECK(p.target_answer.find("<maliciousurl>") != std::string::npos);

    CHECK_THROWS_AS(generate_spun_answers(oracle, {}, "chart", MetaInstruction{kSpam}, 1),
                    ArgumentError);
}

TEST_CASE("language answers pass the stub check") {
    StubOracle oracle;
    const MetaObjective english{MetaCategory::Language, MetaValue::English};
    const auto pairs = generate_spun_answers(oracle, {"what is the chart like?"}, "chart",
                                             MetaInstruction{english}, 2);
    CHECK(pairs[0].target_answer.find("clear layout") != std::string::npos);
}

TEST_CASE("filter_regenerate accepts high-pass rounds immediately") {
    StubOracle oracle;
    SynthConfig cfg;
    cfg.seed = 4;
    std::vector<QAPair> pairs;
    for (int i = 0; i < 20; ++i) pairs.push_back({"q" + std::to_string(i), "a" + std::to_string(i), false});

    // judge passes 18 of 20 (0.9 >= 0.8): accepted without regeneration
    int idx = 0;
    auto judge = [&idx](const std::string&) { return idx++ % 10 != 9; };
    const auto out =
        filter_regenerate(pairs, oracle, "chart", MetaInstruction{kPositive}, judge, cfg);
    CHECK(out.rounds == 1);
    CHECK_FALSE(out.exhausted);
    CHECK(out.pass_fraction == doctest::Approx(0.9));
    for (std::size_t i = 0; i < out.pairs.size(); ++i)
        CHECK(out.pairs[i].target_answer == pairs[i].target_answer);  // nothing regenerated
}

TEST_CASE("filter_regenerate reaches the threshold on a later round") {
    // 10/20 pass initially; of the ten regenerated answers the first three
    // stay bad, so round 2 lands on 17/20 and crosses the 0.8 threshold.
    ScheduledOracle oracle(3);
    SynthConfig cfg;
    cfg.seed = 4;

    std::vector<QAPair> pairs;
    for (int i = 0; i < 20; ++i)
        pairs.push_back({"q" + std::to_string(i), i < 10 ? "good answer" : "bad answer", false});
    auto judge = [](const std::string& a) { return a == "good answer"; };

    const auto out =
        filter_regenerate(pairs, oracle, "chart", MetaInstruction{kPositive}, judge, cfg);
    CHECK(out.rounds == 2);
    CHECK_FALSE(out.exhausted);
    CHECK(out.pass_fraction == doctest::Approx(17.0 / 20.0));
    // failing answers are kept in the set with their flag, passing kept too
    CHECK(out.pairs.size() == 20);
}

TEST_CASE("filter_regenerate exhaustion is flagged, not fatal") {
    StubOracle oracle;
    SynthConfig cfg;
    cfg.max_rounds = 3;
    std::vector<QAPair> pairs = {{"q1", "a1", false}, {"q2", "a2", false}, {"q3", "a3", false}};
    auto never = [](const std::string&) { return false; };
    const auto out =
        filter_regenerate(pairs, oracle, "chart", MetaInstruction{kPositive}, never, cfg);
    CHECK(out.exhausted);
    CHECK(out.rounds == 3);
    CHECK(out.pairs.size() == 3);
    for (const auto& p : out.pairs) CHECK_FALSE(p.passed_filter);
}

TEST_CASE("attack objectives skip the evaluator check") {
    StubOracle oracle;
    SynthConfig cfg;
    std::vector<QAPair> pairs = {{"q1", "text with <maliciousurl>", false}};
    auto never = [](const std::string&) { return false; };
    const auto out = filter_regenerate(pairs, oracle, "chart", MetaInstruction{kUrl}, never, cfg);
    CHECK(out.pairs[0].passed_filter);
    CHECK(out.pass_fraction == 1.0);
}

TEST_CASE("split_dataset ratios and determinism") {
    std::vector<QAPair> pairs;
    for (int i = 0; i < 60; ++i) pairs.push_back({"q" + std::to_string(i), "a", true});

    const auto ds = split_dataset(pairs, "img", kPositive, 2.0 / 3.0, 7);
    CHECK(ds.train.size() == 40);
    CHECK(ds.test.size() == 20);

    const auto ds2 = split_dataset(pairs, "img", kPositive, 2.0 / 3.0, 7);
    for (std::size_t i = 0; i < ds.train.size(); ++i)
        CHECK(ds.train[i].prompt == ds2.train[i].prompt);

    pairs.resize(30);
    const auto ds3 = split_dataset(pairs, "img", kPositive, 2.0 / 3.0, 7);
    CHECK(ds3.train.size() == 20);
    CHECK(ds3.test.size() == 10);

    pairs.resize(2);
    CHECK_THROWS_AS(split_dataset(pairs, "img", kPositive, 2.0 / 3.0, 7), ArgumentError);
}

TEST_CASE("no prompt is in both splits") {
    std::vector<QAPair> pairs;
    for (int i = 0; i < 37; ++i) pairs.push_back({"q" + std::to_string(i), "a", true});
    for (std::int64_t seed = 0; seed < 10; ++seed) {
        const auto ds = split_dataset(pairs, "img", kPositive, 0.5, seed);
        std::set<std::string> train;
        for (const auto& p : ds.train) train.insert(p.prompt);
        for (const auto& p : ds.test) CHECK(train.count(p.prompt) == 0);
        CHECK(ds.train.size() + ds.test.size() == pairs.size());
    }
}

TEST_CASE("full synth pipeline is reproducible given the seed") {
    StubOracle oracle;
    SynthConfig cfg;
    cfg.questions_per_image = 12;
    cfg.seed = 31;
    auto judge = [](const std::string&) { return true; };

    const auto a = synth_dataset(oracle, "ref", "chart", MetaInstruction{kPositive}, judge, cfg, 0.5);
    const auto b = synth_dataset(oracle, "ref", "chart", MetaInstruction{kPositive}, judge, cfg, 0.5);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].prompt == b.train[i].prompt);
        CHECK(a.train[i].target_answer == b.train[i].target_answer);
    }
    CHECK(a.train.size() == 6);
    CHECK(a.test.size() == 6);
}
