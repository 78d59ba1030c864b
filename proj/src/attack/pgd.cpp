#include "forge/attack/pgd.hpp"

#include <algorithm>
#include <cmath>

#include "forge/attack/diff_jpeg.hpp"
#include "forge/errors.hpp"
#include "forge/rng.hpp"

namespace forge::attack {

const char* kFixedTargetPrompt = "describe the image";

Image step_linf(const Image& delta, const Image& grad, double step_size, double epsilon) {
    if (!delta.same_shape(grad)) throw StructuralError("step_linf: shape mismatch");
    if (epsilon < 0.0) throw ArgumentError("step_linf: epsilon must be >= 0");
    const auto step = static_cast<float>(step_size);
    const auto eps = static_cast<float>(epsilon);
    Image out(delta.height, delta.width);
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const float g = grad.data[i];
        const float sign = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
        out.data[i] = std::clamp(delta.data[i] - step * sign, -eps, eps);
    }
    return out;
}

Image step_l2(const Image& delta, const Image& grad, double step_size, double epsilon) {
    if (!delta.same_shape(grad)) throw StructuralError("step_l2: shape mismatch");
    if (epsilon < 0.0) throw ArgumentError("step_l2: epsilon must be >= 0");

    double gnorm = 0.0;
    for (float g : grad.data) gnorm += static_cast<double>(g) * g;
    gnorm = std::sqrt(gnorm);

    Image out = delta;
    if (gnorm > 0.0) {
        const double scale = step_size / gnorm;
        for (std::size_t i = 0; i < out.size(); ++i)
            out.data[i] = static_cast<float>(out.data[i] - scale * grad.data[i]);
    }

    double dnorm = 0.0;
    for (float d : out.data) dnorm += static_cast<double>(d) * d;
    dnorm = std::sqrt(dnorm);
    if (dnorm > epsilon) {
        // Tiny margin keeps the float-rounded result inside the closed ball.
        const double scale = dnorm > 0.0 ? (epsilon / dnorm) * (1.0 - 1e-6) : 0.0;
        for (auto& v : out.data) v = static_cast<float>(v * scale);
    }
    return out;
}

namespace {

bool has_nan(const Image& img) {
    for (float v : img.data)
        if (!std::isfinite(v)) return true;
    return false;
}

struct TokenizedPair {
    vlm::TokenSeq prompt;
    vlm::TokenSeq target;  // with end token appended
};

AttackArtifact run_pgd(const vlm::VlmAdapter& adapter, const ImageRecord& image,
                       const std::vector<TokenizedPair>& train, const AttackConfig& config,
                       const StepObserver& observer, std::optional<MetaObjective> objective,
                       ArtifactKind kind) {
    config.validate();
    image.validate();
    if (!adapter.supports_image_gradient())
        throw CapabilityError("pgd_train requires pixel gradients; adapter '" + adapter.model_id() +
                              "' is black-box");
    if (train.empty()) throw ArgumentError("pgd_train: no training pairs");

    const Image& base = image.pixels;
    std::optional<DiffJpeg> jpeg;
    if (config.adaptive_jpeg) jpeg.emplace(*config.adaptive_jpeg);

    std::vector<vlm::TokenSeq> all_prompts, all_targets;
    for (const auto& p : train) {
        all_prompts.push_back(p.prompt);
        all_targets.push_back(p.target);
    }

    auto full_loss = [&](const Image& delta) {
        Image x = apply_perturbation(base, delta);
        if (jpeg) x = jpeg->forward(x);
        return adapter.forward_loss(all_prompts, x, all_targets);
    };

    Image delta(base.height, base.width, 0.0f);
    Rng rng(mix_seed(static_cast<std::uint64_t>(config.seed), 0x706764ULL));
    std::vector<double> trace;
    trace.push_back(full_loss(delta));
    if (!std::isfinite(trace.back())) throw NumericalError("non-finite initial loss", 0);

    const auto n_train = static_cast<std::int64_t>(train.size());
    for (int t = 1; t <= config.iterations; ++t) {
        std::vector<vlm::TokenSeq> prompts, targets;
        prompts.reserve(config.batch_size);
        targets.reserve(config.batch_size);
        for (int b = 0; b < config.batch_size; ++b) {
            const auto i = static_cast<std::size_t>(rng.uniform_int(0, n_train - 1));
            prompts.push_back(train[i].prompt);
            targets.push_back(train[i].target);
        }

        Image x_adv = apply_perturbation(base, delta);
        Image grad;
        if (jpeg) {
            const Image x_model = jpeg->forward(x_adv);
            grad = jpeg->backward(adapter.image_gradient(prompts, x_model, targets));
        } else {
            grad = adapter.image_gradient(prompts, x_adv, targets);
        }
        if (has_nan(grad)) throw NumericalError("non-finite gradient", t);

        delta = config.budget.norm == Norm::Linf
                    ? step_linf(delta, grad, config.step_size, config.budget.epsilon)
                    : step_l2(delta, grad, config.step_size, config.budget.epsilon);
        // Re-clamp the implied image so the trained delta is the deployed one.
        const Image clamped = apply_perturbation(base, delta);
        for (std::size_t i = 0; i < delta.size(); ++i)
            delta.data[i] = clamped.data[i] - base.data[i];

        if (t % 10 == 0 || t == config.iterations) {
            trace.push_back(full_loss(delta));
            if (!std::isfinite(trace.back())) throw NumericalError("non-finite loss", t);
        }
        if (observer) observer(PgdState{delta, t, rng.draw_count(), trace});
    }

    AttackArtifact artifact;
    artifact.base_image = image;
    artifact.perturbed_pixels = apply_perturbation(base, delta);
    artifact.objective = objective;
    artifact.kind = kind;
    artifact.config = config;
    artifact.loss_trace = std::move(trace);
    artifact.model_id = adapter.model_id();
    artifact.validate();
    return artifact;
}

}  // namespace

AttackArtifact pgd_train(const vlm::VlmAdapter& adapter, const ImageRecord& image,
                         const QADataset& dataset, const AttackConfig& config,
                         const StepObserver& observer) {
    if (dataset.train.empty()) throw ArgumentError("pgd_train: dataset has no training pairs");
    std::vector<TokenizedPair> train;
    for (const auto& pair : dataset.train) {
        TokenizedPair tp;
        tp.prompt = adapter.tokenize(pair.prompt);
        tp.target = adapter.tokenize(pair.target_answer);
        tp.target.push_back(adapter.end_token());
        train.push_back(std::move(tp));
    }
    return run_pgd(adapter, image, train, config, observer, dataset.objective,
                   ArtifactKind::MetaInstruction);
}

AttackArtifact pgd_train_adaptive_jpeg(const vlm::VlmAdapter& adapter, const ImageRecord& image,
                                       const QADataset& dataset, const AttackConfig& config,
                                       const StepObserver& observer) {
    if (!config.adaptive_jpeg)
        throw ArgumentError("pgd_train_adaptive_jpeg: config.adaptive_jpeg must be set");
    return pgd_train(adapter, image, dataset, config, observer);
}

AttackArtifact fixed_target_attack(const vlm::VlmAdapter& adapter, const ImageRecord& image,
                                   const std::vector<std::string>& fixed_targets,
                                   const AttackConfig& config, const StepObserver& observer) {
    if (fixed_targets.empty()) throw ArgumentError("fixed_target_attack: no targets");
    std::vector<TokenizedPair> train;
    const vlm::TokenSeq prompt = adapter.tokenize(kFixedTargetPrompt);
    for (const auto& s : fixed_targets) {
        if (s.empty()) throw ArgumentError("fixed_target_attack: empty target string");
        TokenizedPair tp;
        tp.prompt = prompt;
        tp.target = adapter.tokenize(s);
        tp.target.push_back(adapter.end_token());
        train.push_back(std::move(tp));
    }
    return run_pgd(adapter, image, train, config, observer, std::nullopt, ArtifactKind::FixedTarget);
}

}  // namespace forge::attack
