#pragma once

#include <map>
#include <string>
#include <vector>

#include "forge/semantics/augment.hpp"
#include "forge/vlm/adapter.hpp"

namespace forge::defend {

// Feature-distillation defense: a real JPEG encode/decode round trip applied
// before the image reaches the model. Quality in [1,100]; default 75.
Image jpeg_defense(const Image& image, int quality);

struct MethodStat {
    double mean = 0.0;
    double stddev = 0.0;  // sample stddev; 0 when repeats == 1
};

struct AnomalyVerdict {
    double mean_similarity = 0.0;  // grand mean over the per-method means
    std::map<std::string, MethodStat> per_augmentation;
    double threshold = 0.0;
    bool flagged = false;  // <=> mean_similarity < threshold
};

// Embedding similarity between the image and its augmentations, averaged over
// `repeats` reseeded draws per method.
AnomalyVerdict anomaly_score(const vlm::VlmAdapter& adapter, const Image& image,
                             const std::vector<semantics::AugmentationSpec>& specs, int repeats);

// anomaly_score plus the thresholded decision.
AnomalyVerdict detect(const vlm::VlmAdapter& adapter, const Image& image,
                      const std::vector<semantics::AugmentationSpec>& specs, int repeats,
                      double threshold);

// Default suite: all six methods with default parameters and the given seed.
std::vector<semantics::AugmentationSpec> default_augmentation_suite(std::int64_t seed);

// Threshold calibrations. The midpoint form needs both populations; the
// clean-statistics form is usable in deployment (mean - k*stddev).
double calibrate_threshold_midpoint(const std::vector<double>& clean_scores,
                                    const std::vector<double>& perturbed_scores);
double calibrate_threshold_from_clean(const std::vector<double>& clean_scores, double k);

}  // namespace forge::defend
