#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "forge/errors.hpp"
#include "forge/image.hpp"
#include "forge/io.hpp"
#include "forge/rng.hpp"
#include "forge/types.hpp"
#include "helpers.hpp"

using namespace forge;

namespace {
std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("forge_test_core_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}
}  // namespace

TEST_CASE("apply_perturbation clamps and adds") {
    Image base(8, 8, 0.5f), delta(8, 8, 0.7f);
    const Image out = apply_perturbation(base, delta);
    for (float v : out.data) CHECK(v == 1.0f);

    Image zero(8, 8, 0.0f);
    const Image same = apply_perturbation(base, zero);
    CHECK(same.data == base.data);

    Image b2(8, 8, 0.3f), d2(8, 8, -0.1f);
    const Image out2 = apply_perturbation(b2, d2);
    for (float v : out2.data) CHECK(v == doctest::Approx(0.2).epsilon(1e-6));

    Image wrong(8, 12, 0.0f);
    CHECK_THROWS_AS(apply_perturbation(base, wrong), StructuralError);
}

TEST_CASE("apply_perturbation output always in [0,1]") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Image base(8, 8), delta(8, 8);
        for (auto& v : base.data) v = static_cast<float>(rng.uniform(-3.0, 3.0));
        for (auto& v : delta.data) v = static_cast<float>(rng.uniform(-3.0, 3.0));
        CHECK(in_unit_range(apply_perturbation(base, delta)));
    }
}

TEST_CASE("budget_violation") {
    Image a(8, 8, 0.4f), b(8, 8, 0.4f);
    CHECK(budget_violation(a, b, Norm::Linf, 32.0 / 255.0) == 0.0);
    CHECK(budget_violation(a, b, Norm::L2, 0.0) == 0.0);

    Image c = a;
    c.at(1, 3, 3) += 0.2f;
    CHECK(budget_violation(a, c, Norm::Linf, 32.0 / 255.0) ==
          doctest::Approx(19.0 / 255.0).epsilon(1e-6));

    Image d(8, 8, 0.0f), e(8, 8, 0.0f);
    e.at(0, 0, 0) = 24.0f;  // L2 distance exactly 24
    CHECK(budget_violation(d, e, Norm::L2, 12.0) == doctest::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("meta objectives: exactly the paper set is expressible") {
    CHECK(all_meta_objectives().size() == 12);
    CHECK_NOTHROW(MetaObjective(MetaCategory::Sentiment, MetaValue::Positive));
    CHECK_NOTHROW(MetaObjective(MetaCategory::Attack, MetaValue::URLInjection));
    CHECK_THROWS_AS(MetaObjective(MetaCategory::Sentiment, MetaValue::English), ArgumentError);
    CHECK_THROWS_AS(MetaObjective(MetaCategory::Language, MetaValue::Spam), ArgumentError);
    CHECK_THROWS_AS(MetaObjective(MetaCategory::PoliticalBias, MetaValue::Formal), ArgumentError);

    for (const auto& o : all_meta_objectives()) {
        const auto round = parse_objective(objective_id(o));
        CHECK(round == o);
    }
    CHECK_THROWS_AS(parse_objective("sentiment:spam"), ArgumentError);
}

TEST_CASE("default instruction clauses") {
    CHECK(default_instruction_text({MetaCategory::Sentiment, MetaValue::Positive}) ==
          "with a Positive spin");
    CHECK(default_instruction_text({MetaCategory::Language, MetaValue::Spanish}) == "in Spanish");
    CHECK(default_instruction_text({MetaCategory::PoliticalBias, MetaValue::Republican}) ==
          "with Republican bias");
    CHECK(default_instruction_text({MetaCategory::PoliticalBias, MetaValue::Democrat}) ==
          "with Democratic bias");
    CHECK(default_instruction_text({MetaCategory::Attack, MetaValue::Spam}) == "with a Spam spin");
}

TEST_CASE("ImageRecord invariants") {
    ImageRecord rec{test::make_test_image(8, 1), "chart", "t"};
    CHECK_NOTHROW(rec.validate());

    ImageRecord no_label = rec;
    no_label.label.clear();
    CHECK_THROWS_AS(no_label.validate(), ArgumentError);

    ImageRecord tiny{test::make_test_image(4, 1), "chart", "t"};
    CHECK_THROWS_AS(tiny.validate(), ArgumentError);

    ImageRecord hot = rec;
    hot.pixels.at(0, 0, 0) = 1.5f;
    CHECK_THROWS_AS(hot.validate(), ArgumentError);
}

TEST_CASE("budget and attack config invariants") {
    PerturbationBudget bad{Norm::Linf, -0.1};
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    PerturbationBudget too_big{Norm::Linf, 1.5};
    CHECK_THROWS_AS(too_big.validate(), ArgumentError);
    PerturbationBudget l2_big{Norm::L2, 24.0};
    CHECK_NOTHROW(l2_big.validate());

    AttackConfig def;
    CHECK(def.iterations == 2000);
    CHECK(def.step_size == doctest::Approx(1.0 / 255.0));
    CHECK(def.batch_size == 8);
    CHECK(def.budget.norm == Norm::Linf);
    CHECK(def.budget.epsilon == doctest::Approx(32.0 / 255.0));
    CHECK_NOTHROW(def.validate());

    AttackConfig bad_jpeg = def;
    bad_jpeg.adaptive_jpeg = 0;
    CHECK_THROWS_AS(bad_jpeg.validate(), ArgumentError);
}

TEST_CASE("QA dataset invariants") {
    QAPair empty{"", "answer", false};
    CHECK_THROWS_AS(empty.validate(), ArgumentError);

    QADataset ds{"img", {MetaCategory::Sentiment, MetaValue::Positive}, {}, {}, false};
    ds.train.push_back({"q1", "a1", true});
    ds.test.push_back({"q2", "a2", true});
    CHECK_NOTHROW(ds.validate());
    ds.test.push_back({"q1", "a3", false});
    CHECK_THROWS_AS(ds.validate(), ArgumentError);
}

TEST_CASE("float32 tensor round trip is bitwise") {
    const auto dir = temp_dir("f32");
    const Image img = test::make_noise_image(16, 3);
    io::write_f32(dir / "img.f32", img);
    const Image back = io::read_f32(dir / "img.f32");
    CHECK(back.height == img.height);
    CHECK(back.data == img.data);
}

TEST_CASE("png round trip is exact at 8-bit precision") {
    const auto dir = temp_dir("png");
    const Image img = test::make_noise_image(16, 4);
    io::write_png(dir / "img.png", img);
    const Image back = io::read_png(dir / "img.png");
    for (std::size_t i = 0; i < img.size(); ++i)
        CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5f / 255.0f + 1e-6f);
    // already-quantized values survive exactly
    io::write_png(dir / "img2.png", back);
    const Image again = io::read_png(dir / "img2.png");
    CHECK(again.data == back.data);
}

TEST_CASE("dataset jsonl round trip is lossless") {
    const auto dir = temp_dir("jsonl");
    QADataset ds{"imgref", {MetaCategory::Attack, MetaValue::Spam}, {}, {}, true};
    ds.train.push_back({"what is it?", "it is \"quoted\" and, odd", true});
    ds.train.push_back({"why?", "because.", false});
    ds.test.push_back({"where?", "here\nthere", true});
    io::write_dataset(dir / "d.jsonl", ds);
    const QADataset back = io::read_dataset(dir / "d.jsonl");
    CHECK(back.image_ref == ds.image_ref);
    CHECK(back.objective == ds.objective);
    CHECK(back.filter_exhausted == ds.filter_exhausted);
    REQUIRE(back.train.size() == 2);
    REQUIRE(back.test.size() == 1);
    CHECK(back.train[0].target_answer == ds.train[0].target_answer);
    CHECK(back.train[1].passed_filter == false);
    CHECK(back.test[0].target_answer == "here\nthere");
}

TEST_CASE("artifact directory round trip") {
    const auto dir = temp_dir("artifact");
    AttackArtifact a;
    a.base_image = {test::make_test_image(8, 9), "chart", "src9"};
    a.perturbed_pixels = a.base_image.pixels;
    a.perturbed_pixels.at(0, 1, 1) =
        std::min(1.0f, a.perturbed_pixels.at(0, 1, 1) + 0.05f);
    a.objective = MetaObjective{MetaCategory::Sentiment, MetaValue::Negative};
    a.config.iterations = 25;
    a.config.seed = 5;
    a.loss_trace = {2.0, 1.5, 1.25};
    a.model_id = "toy";
    io::write_artifact(dir, a);

    const AttackArtifact back = io::read_artifact(dir);
    CHECK(back.model_id == "toy");
    CHECK(back.kind == ArtifactKind::MetaInstruction);
    REQUIRE(back.objective.has_value());
    CHECK(*back.objective == *a.objective);
    CHECK(back.base_image.label == "chart");
    CHECK(back.perturbed_pixels.data == a.perturbed_pixels.data);
    CHECK(back.base_image.pixels.data == a.base_image.pixels.data);
    CHECK(back.loss_trace == a.loss_trace);
    CHECK(back.config.iterations == 25);
}

TEST_CASE("artifact validation rejects budget violations") {
    AttackArtifact a;
    a.base_image = {test::make_test_image(8, 9), "chart", "src"};
    a.perturbed_pixels = a.base_image.pixels;
    a.perturbed_pixels.at(0, 0, 0) = std::min(1.0f, a.perturbed_pixels.at(0, 0, 0) + 0.4f);
    a.model_id = "toy";
    a.loss_trace = {1.0};
    CHECK_THROWS_AS(a.validate(), ArgumentError);  // 0.4 > 32/255
}

TEST_CASE("rng determinism and seed mixing") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    bool any_diff = false;
    Rng a2(42);
    for (int i = 0; i < 100; ++i) any_diff |= a2.next_u64() != c.next_u64();
    CHECK(any_diff);
    CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("norm parsing") {
    CHECK(parse_norm("linf") == Norm::Linf);
    CHECK(parse_norm("l2") == Norm::L2);
    CHECK_THROWS_AS(parse_norm("l1"), ArgumentError);
}
