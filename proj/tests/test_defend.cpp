#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "forge/defend/defend.hpp"
#include "forge/errors.hpp"
#include "forge/io.hpp"
#include "forge/semantics/ssim.hpp"
#include "forge/vlm/toy.hpp"
#include "helpers.hpp"

using namespace forge;
using namespace forge::defend;

namespace {
const std::filesystem::path kAssets = FORGE_ASSETS_DIR;
}

TEST_CASE("jpeg defense keeps clean images recognizable") {
    for (const char* name : {"chart.png", "grid.png", "rings.png", "scene.png", "stripes.png"}) {
        const Image img = io::read_png(kAssets / "images" / name);
        const Image defended = jpeg_defense(img, 95);
        CHECK(defended.height == img.height);
        CHECK(in_unit_range(defended));
        CHECK(semantics::ssim(img, defended) > 0.9);
    }
    CHECK_THROWS_AS(jpeg_defense(Image(8, 8, 0.5f), 0), ArgumentError);
    CHECK_THROWS_AS(jpeg_defense(Image(8, 8, 0.5f), 101), ArgumentError);
}

TEST_CASE("jpeg defense is near-idempotent") {
    for (int q : {50, 75, 95}) {
        for (std::uint64_t s = 0; s < 3; ++s) {
            const Image img = test::make_test_image(16, 60 + s);
            const Image once = jpeg_defense(img, q);
            const Image twice = jpeg_defense(once, q);
            CHECK(std::abs(semantics::ssim(img, once) - semantics::ssim(img, twice)) < 0.05);
        }
    }
}

TEST_CASE("anomaly score with the identity augmentation is 1") {
    auto model = vlm::ToyVlm::cached(vlm::ToyVlmSpec{});
    const Image img = test::make_test_image(16, 2);

    semantics::AugmentationSpec identity;
    identity.method = semantics::AugmentMethod::ColorJitter;
    identity.jitter_brightness = identity.jitter_contrast = 0.0;
    identity.jitter_saturation = identity.jitter_hue = 0.0;

    const auto verdict = anomaly_score(*model, img, {identity}, 3);
    CHECK(verdict.mean_similarity == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(verdict.per_augmentation.at("ColorJitter").stddev == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("anomaly stddev is zero for a single repeat") {
    auto model = vlm::ToyVlm::cached(vlm::ToyVlmSpec{});
    const Image img = test::make_test_image(16, 3);
    const auto verdict = anomaly_score(*model, img, default_augmentation_suite(5), 1);
    for (const auto& [method, stat] : verdict.per_augmentation) CHECK(stat.stddev == 0.0);
    CHECK(verdict.per_augmentation.size() == 6);
}

TEST_CASE("detect thresholds") {
    auto model = vlm::ToyVlm::cached(vlm::ToyVlmSpec{});
    const Image img = test::make_test_image(16, 4);
    const auto specs = default_augmentation_suite(9);

    const auto never = detect(*model, img, specs, 2, -1.0);
    CHECK_FALSE(never.flagged);
    const auto always = detect(*model, img, specs, 2, 1.0);
    CHECK(always.flagged);  // any real similarity is < 1

    CHECK_THROWS_AS(detect(*model, img, specs, 2, 1.5), ArgumentError);
    CHECK_THROWS_AS(anomaly_score(*model, img, {}, 2), ArgumentError);
    CHECK_THROWS_AS(anomaly_score(*model, img, specs, 0), ArgumentError);

    // flagged is a pure function of mean similarity and threshold
    for (double thr : {-0.5, 0.0, 0.5, 0.9, 0.99}) {
        const auto v = detect(*model, img, specs, 2, thr);
        CHECK(v.flagged == (v.mean_similarity < thr));
    }
}

TEST_CASE("threshold calibration helpers") {
    const std::vector<double> clean = {0.9, 0.92, 0.94};
    const std::vector<double> adv = {0.7, 0.72, 0.74};
    CHECK(calibrate_threshold_midpoint(clean, adv) == doctest::Approx((0.92 + 0.72) / 2));
    CHECK(calibrate_threshold_from_clean(clean, 0.0) == doctest::Approx(0.92));
    CHECK(calibrate_threshold_from_clean(clean, 1.0) < 0.92);
    CHECK_THROWS_AS(calibrate_threshold_midpoint({}, adv), ArgumentError);
}
