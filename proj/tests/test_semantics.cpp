#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "forge/errors.hpp"
#include "forge/semantics/augment.hpp"
#include "forge/semantics/report.hpp"
#include "forge/semantics/ssim.hpp"
#include "forge/vlm/toy.hpp"
#include "helpers.hpp"

using namespace forge;
using namespace forge::semantics;

TEST_CASE("ssim identity and symmetry") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Image a = test::make_noise_image(16, s);
        const Image b = test::make_noise_image(16, 100 + s);
        CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ssim(Image(16, 16, 0.5f), Image(8, 8, 0.5f)), StructuralError);
}

TEST_CASE("ssim of independent noise is near zero") {
    // enough windows for the mean local SSIM to concentrate
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Image a = test::make_noise_image(48, 2 * s);
        const Image b = test::make_noise_image(48, 2 * s + 1);
        CHECK(std::abs(ssim(a, b)) < 0.05);
    }
}

TEST_CASE("ssim agrees with the direct-formula reference") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const Image a = test::make_noise_image(16, 300 + s);
        Image b = a;
        Rng rng(400 + s);
        for (auto& v : b.data)
            v = static_cast<float>(std::clamp(v + 0.1 * (rng.uniform() - 0.5), 0.0, 1.0));
        CHECK(ssim(a, b) == doctest::Approx(test::ssim_reference(a, b)).epsilon(1e-9));
    }
}

TEST_CASE("ssim window shrinks for small images") {
    const Image a = test::make_noise_image(8, 1);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("embedding cosine") {
    auto model = vlm::ToyVlm::cached(vlm::ToyVlmSpec{});
    const Image x = test::make_test_image(16, 3);
    CHECK(embedding_cosine(*model, x, x) == doctest::Approx(1.0).epsilon(1e-6));

    // synthetic adapter with orthogonal embeddings for different images
    struct Orthogonal : test::ScriptedAdapter {
        std::vector<std::vector<float>> encode_image(const Image& img) const override {
            if (img.data[0] > 0.5f) return {{1.0f, 0.0f, 0.0f, 0.0f}};
            return {{0.0f, 1.0f, 0.0f, 0.0f}};
        }
    };
    Orthogonal ortho;
    Image hot(8, 8, 0.9f), cold(8, 8, 0.1f);
    CHECK(embedding_cosine(ortho, hot, cold) == doctest::Approx(0.0));
}

TEST_CASE("toy encoder: augmentations stay closer than unrelated images") {
    auto model = vlm::ToyVlm::cached(vlm::ToyVlmSpec{});
    double aug_sum = 0, unrel_sum = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Image x = test::make_test_image(16, 500 + s);
        const Image unrelated = test::make_noise_image(16, 900 + s);
        AugmentationSpec spec;
        spec.method = AugmentMethod::GaussianBlur;
        spec.seed = static_cast<std::int64_t>(s);
        aug_sum += embedding_cosine(*model, x, augment(x, spec));
        unrel_sum += embedding_cosine(*model, x, unrelated);
    }
    CHECK(aug_sum / 20 > unrel_sum / 20);
}

TEST_CASE("augmentations: involution, identity, determinism, bounds") {
    const Image x = test::make_test_image(16, 7);

    AugmentationSpec flip;
    flip.method = AugmentMethod::RandomHorizontalFlip;
    flip.seed = 3;
    const Image once = augment(x, flip);
    const Image twice = augment(once, flip);
    CHECK(twice.data == x.data);  // flip (or skip) twice restores the input

    AugmentationSpec zero_jitter;
    zero_jitter.method = AugmentMethod::ColorJitter;
    zero_jitter.jitter_brightness = zero_jitter.jitter_contrast = 0.0;
    zero_jitter.jitter_saturation = zero_jitter.jitter_hue = 0.0;
    CHECK(augment(x, zero_jitter).data == x.data);

    for (auto method : all_augment_methods()) {
        AugmentationSpec spec;
        spec.method = method;
        spec.seed = 11;
        const Image a = augment(x, spec);
        const Image b = augment(x, spec);
        CHECK(a.data == b.data);
        CHECK(a.height == x.height);
        CHECK(in_unit_range(a));
    }
}

TEST_CASE("augmentation method set matches the defense suite") {
    CHECK(all_augment_methods().size() == 6);
    CHECK(parse_augment_method("GaussianBlur") == AugmentMethod::GaussianBlur);
    CHECK_THROWS_AS(parse_augment_method("Cutout"), ArgumentError);
}

TEST_CASE("yes/no parsing") {
    CHECK(parse_yes_no("Yes, it does.") == YesNo::Yes);
    CHECK(parse_yes_no("no") == YesNo::No);
    CHECK(parse_yes_no("  YES!") == YesNo::Yes);
    CHECK(parse_yes_no("maybe") == YesNo::Unparseable);
    CHECK(parse_yes_no("") == YesNo::Unparseable);
}

TEST_CASE("label_depicts_query parses the model's verdict") {
    const Image img = test::make_test_image(8, 2);
    test::ScriptedAdapter yes_model("yes, it does.");
    CHECK(label_depicts_query(yes_model, "chart", img));
    test::ScriptedAdapter no_model("no, not really");
    CHECK_FALSE(label_depicts_query(no_model, "chart", img));
    test::ScriptedAdapter vague("hmm unclear");
    CHECK_THROWS_AS(label_depicts_query(vague, "chart", img), EvaluationError);
}

TEST_CASE("relevance query follows the stub rule") {
    synth::StubOracle oracle;
    CHECK(relevance_query(oracle, "the chart shows lines", "chart", "what is the chart like?"));
    CHECK_FALSE(relevance_query(oracle, "buy pills now", "chart", "what is the chart like?"));
    CHECK_THROWS_AS(relevance_query(oracle, "", "chart", "q"), ArgumentError);
}

TEST_CASE("similarity reports carry their pair kind") {
    auto model = vlm::ToyVlm::cached(vlm::ToyVlmSpec{});
    const Image x = test::make_test_image(16, 4);
    const Image y = test::make_noise_image(16, 5);
    const auto rep = similarity_report(*model, x, y, PairKind::Unrelated);
    CHECK(rep.pair_kind == PairKind::Unrelated);
    CHECK(rep.embed_cos >= -1.0);
    CHECK(rep.embed_cos <= 1.0);
    CHECK(rep.ssim >= -1.0);
    CHECK(rep.ssim <= 1.0);
}
