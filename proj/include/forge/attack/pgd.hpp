#pragma once

#include <functional>
#include <string>
#include <vector>

#include "forge/types.hpp"
#include "forge/vlm/adapter.hpp"

namespace forge::attack {

// Snapshot handed to the per-step observer (budget audits, progress bars).
struct PgdState {
    const Image& delta;
    int step_index;                         // 1-based, after the step
    std::uint64_t rng_draws;                // opaque rng position
    const std::vector<double>& loss_trace;  // entries logged so far
};
using StepObserver = std::function<void(const PgdState&)>;

// delta' = clip(delta - step_size * sign(grad), -eps, +eps); sign(0) = 0.
Image step_linf(const Image& delta, const Image& grad, double step_size, double epsilon);

// delta' = project_{||.||2 <= eps}(delta - step_size * grad/||grad||2);
// zero gradient leaves delta unchanged.
Image step_l2(const Image& delta, const Image& grad, double step_size, double epsilon);

// PGD over the training pairs: each iteration samples batch_size pairs with
// replacement, steps against the pixel gradient of the teacher-forced loss,
// projects onto the norm ball, and re-clamps the implied image to [0,1].
// The loss trace holds the full-train-set loss at step 0, every 10th step,
// and the final step. Honors config.adaptive_jpeg by training through the
// differentiable JPEG approximation.
AttackArtifact pgd_train(const vlm::VlmAdapter& adapter, const ImageRecord& image,
                         const QADataset& dataset, const AttackConfig& config,
                         const StepObserver& observer = {});

// pgd_train with config.adaptive_jpeg required.
AttackArtifact pgd_train_adaptive_jpeg(const vlm::VlmAdapter& adapter, const ImageRecord& image,
                                       const QADataset& dataset, const AttackConfig& config,
                                       const StepObserver& observer = {});

// Jailbreak-style baseline: the same loop, but every target is a fixed
// string behind the generic prompt below, ignoring the image's QA data.
extern const char* kFixedTargetPrompt;  // "describe the image"
AttackArtifact fixed_target_attack(const vlm::VlmAdapter& adapter, const ImageRecord& image,
                                   const std::vector<std::string>& fixed_targets,
                                   const AttackConfig& config, const StepObserver& observer = {});

}  // namespace forge::attack
