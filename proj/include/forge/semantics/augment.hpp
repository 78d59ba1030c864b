#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "forge/image.hpp"

namespace forge::semantics {

enum class AugmentMethod {
    JPEG,
    GaussianBlur,
    RandomAffine,
    ColorJitter,
    RandomHorizontalFlip,
    RandomPerspective,
};

std::string augment_method_name(AugmentMethod m);
AugmentMethod parse_augment_method(const std::string& s);

// Parameters for every method live together; each method reads its own
// fields. Defaults are frozen here since no canonical values exist upstream.
struct AugmentationSpec {
    AugmentMethod method = AugmentMethod::JPEG;
    std::int64_t seed = 0;

    int jpeg_quality = 75;
    int blur_kernel = 5;                 // odd
    double blur_sigma_min = 0.1, blur_sigma_max = 2.0;
    double affine_max_rotation_deg = 15.0;
    double affine_max_translate = 0.1;   // fraction of width/height
    double jitter_brightness = 0.4, jitter_contrast = 0.4, jitter_saturation = 0.4, jitter_hue = 0.1;
    double flip_probability = 0.5;
    double perspective_distortion = 0.5;
};

// The six methods used both as semantics-preservation baselines and by the
// augmentation anomaly defense.
const std::vector<AugmentMethod>& all_augment_methods();

// Deterministic given (spec, spec.seed); output stays in [0,1] with the input
// shape. Spatial methods fill uncovered pixels with 0.
Image augment(const Image& image, const AugmentationSpec& spec);

}  // namespace forge::semantics
