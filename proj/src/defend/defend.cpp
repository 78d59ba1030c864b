#include "forge/defend/defend.hpp"

#include <cmath>

#include "forge/errors.hpp"
#include "forge/io.hpp"
#include "forge/rng.hpp"
#include "forge/semantics/report.hpp"

namespace forge::defend {

Image jpeg_defense(const Image& image, int quality) {
    if (quality < 1 || quality > 100) throw ArgumentError("jpeg_defense: quality must be in [1,100]");
    return io::jpeg_roundtrip(image, quality);
}

AnomalyVerdict anomaly_score(const vlm::VlmAdapter& adapter, const Image& image,
                             const std::vector<semantics::AugmentationSpec>& specs, int repeats) {
    if (specs.empty()) throw ArgumentError("anomaly_score: no augmentation specs");
    if (repeats < 1) throw ArgumentError("anomaly_score: repeats must be >= 1");

    AnomalyVerdict verdict;
    double grand = 0.0;
    for (const auto& spec : specs) {
        double sum = 0.0, sum_sq = 0.0;
        for (int r = 0; r < repeats; ++r) {
            semantics::AugmentationSpec s = spec;
            s.seed = static_cast<std::int64_t>(
                mix_seed(static_cast<std::uint64_t>(spec.seed), static_cast<std::uint64_t>(r)));
            const double cos = semantics::embedding_cosine(adapter, image, augment(image, s));
            sum += cos;
            sum_sq += cos * cos;
        }
        MethodStat stat;
        stat.mean = sum / repeats;
        if (repeats > 1) {
            const double var = (sum_sq - sum * sum / repeats) / (repeats - 1);
            stat.stddev = std::sqrt(std::max(0.0, var));
        }
        verdict.per_augmentation[augment_method_name(spec.method)] = stat;
        grand += stat.mean;
    }
    verdict.mean_similarity = grand / static_cast<double>(specs.size());
    return verdict;
}

AnomalyVerdict detect(const vlm::VlmAdapter& adapter, const Image& image,
                      const std::vector<semantics::AugmentationSpec>& specs, int repeats,
                      double threshold) {
    if (threshold < -1.0 || threshold > 1.0)
        throw ArgumentError("detect: threshold must be in [-1,1]");
    AnomalyVerdict verdict = anomaly_score(adapter, image, specs, repeats);
    verdict.threshold = threshold;
    verdict.flagged = verdict.mean_similarity < threshold;
    return verdict;
}

std::vector<semantics::AugmentationSpec> default_augmentation_suite(std::int64_t seed) {
    std::vector<semantics::AugmentationSpec> specs;
    for (auto m : semantics::all_augment_methods()) {
        semantics::AugmentationSpec s;
        s.method = m;
        s.seed = static_cast<std::int64_t>(mix_seed(static_cast<std::uint64_t>(seed),
                                                    static_cast<std::uint64_t>(m) + 0xd3ULL));
        specs.push_back(s);
    }
    return specs;
}

double calibrate_threshold_midpoint(const std::vector<double>& clean_scores,
                                    const std::vector<double>& perturbed_scores) {
    if (clean_scores.empty() || perturbed_scores.empty())
        throw ArgumentError("calibrate_threshold_midpoint: empty score population");
    double mc = 0.0, mp = 0.0;
    for (double v : clean_scores) mc += v;
    for (double v : perturbed_scores) mp += v;
    mc /= static_cast<double>(clean_scores.size());
    mp /= static_cast<double>(perturbed_scores.size());
    return (mc + mp) / 2.0;
}

double calibrate_threshold_from_clean(const std::vector<double>& clean_scores, double k) {
    if (clean_scores.empty()) throw ArgumentError("calibrate_threshold_from_clean: empty population");
    double mean = 0.0;
    for (double v : clean_scores) mean += v;
    mean /= static_cast<double>(clean_scores.size());
    double var = 0.0;
    for (double v : clean_scores) var += (v - mean) * (v - mean);
    var = clean_scores.size() > 1 ? var / static_cast<double>(clean_scores.size() - 1) : 0.0;
    return mean - k * std::sqrt(var);
}

}  // namespace forge::defend
