#pragma once

// Shared fixtures for the test suites: scripted adapters, deterministic
// images, and independent reference implementations (oracles) used to check
// the production code paths.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "forge/image.hpp"
#include "forge/rng.hpp"
#include "forge/vlm/adapter.hpp"

namespace forge::test {

inline Image make_test_image(int n, std::uint64_t seed) {
    Rng rng(seed);
    Image img(n, n);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                img.at(c, y, x) = static_cast<float>(
                    std::clamp(0.25 + 0.5 * ((x + 2 * y) % 7) / 6.0 + 0.1 * rng.uniform(), 0.0, 1.0));
    return img;
}

inline Image make_noise_image(int n, std::uint64_t seed) {
    Rng rng(seed);
    Image img(n, n);
    for (auto& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

// Direct-formula SSIM: explicit window loops, no separable filtering. Kept
// deliberately independent of forge::semantics::ssim.
inline double ssim_reference(const Image& a, const Image& b) {
    int win = 11;
    if (std::min(a.height, a.width) < win) {
        win = std::min(a.height, a.width);
        if (win % 2 == 0) --win;
    }
    const double sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
    const int half = win / 2;

    std::vector<double> w(static_cast<std::size_t>(win) * win);
    double wsum = 0.0;
    for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
            const double d2 = (i - half) * (i - half) + (j - half) * (j - half);
            w[static_cast<std::size_t>(i) * win + j] = std::exp(-d2 / (2.0 * sigma * sigma));
            wsum += w[static_cast<std::size_t>(i) * win + j];
        }
    for (auto& v : w) v /= wsum;

    double total = 0.0;
    int count = 0;
    for (int c = 0; c < 3; ++c)
        for (int cy = half; cy < a.height - half; ++cy)
            for (int cx = half; cx < a.width - half; ++cx) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int i = 0; i < win; ++i)
                    for (int j = 0; j < win; ++j) {
                        const double wi = w[static_cast<std::size_t>(i) * win + j];
                        const double va = a.at(c, cy + i - half, cx + j - half);
                        const double vb = b.at(c, cy + i - half, cx + j - half);
                        mx += wi * va;
                        my += wi * vb;
                        mxx += wi * va * va;
                        myy += wi * vb * vb;
                        mxy += wi * va * vb;
                    }
                const double vx = mxx - mx * mx, vy = myy - my * my, cov = mxy - mx * my;
                total += ((2 * mx * my + c1) * (2 * cov + c2)) /
                         ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
    return total / count;
}

// Adapter that "generates" canned text for each prompt; black-box by default.
class ScriptedAdapter : public vlm::VlmAdapter {
public:
    explicit ScriptedAdapter(std::string reply = "yes, fine.")
        : VlmAdapter(vlm::ConcatOrder::TextThenImage), reply_(std::move(reply)) {}

    std::string model_id() const override { return "scripted"; }
    int embedding_dim() const override { return 4; }
    int context_limit() const override { return 4096; }
    std::vector<std::string> vocabulary() const override { return vlm::shared_tokenizer().symbols(); }
    vlm::TokenSeq tokenize(const std::string& text) const override {
        return vlm::shared_tokenizer().encode(text);
    }
    std::string detokenize(const vlm::TokenSeq& tokens) const override {
        return vlm::shared_tokenizer().decode(tokens);
    }
    std::vector<std::vector<float>> encode_image(const Image&) const override {
        return {{1.0f, 0.0f, 0.0f, 0.0f}};
    }
    double forward_loss(const std::vector<vlm::TokenSeq>&, const Image&,
                        const std::vector<vlm::TokenSeq>&) const override {
        return 1.0;
    }
    vlm::TokenSeq generate(const vlm::TokenSeq&, const Image&, int max_new_tokens,
                           const vlm::Decoding&) const override {
        auto toks = tokenize(reply_);
        if (static_cast<int>(toks.size()) > max_new_tokens) toks.resize(max_new_tokens);
        return toks;
    }

private:
    std::string reply_;
};

}  // namespace forge::test
