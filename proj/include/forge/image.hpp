#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace forge {

// 3-channel float image, CHW layout, values in [0,1] when valid.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // size 3*height*width, index [c*H*W + y*W + x]

    Image() = default;
    Image(int h, int w, float fill = 0.0f)
        : height(h), width(w), data(static_cast<std::size_t>(3) * h * w, fill) {}

    float& at(int c, int y, int x) {
        return data[static_cast<std::size_t>(c) * height * width + static_cast<std::size_t>(y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[static_cast<std::size_t>(c) * height * width + static_cast<std::size_t>(y) * width + x];
    }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
};

enum class Norm { Linf, L2 };

std::string norm_name(Norm n);
Norm parse_norm(const std::string& s);

// Elementwise base + delta, clamped to [0,1]. Shapes must match.
Image apply_perturbation(const Image& base, const Image& delta);

// Distance between two images under the given norm (over all channels).
double image_norm_distance(const Image& a, const Image& b, Norm norm);

// max(0, ||perturbed - base||_norm - epsilon); 0 iff within budget.
double budget_violation(const Image& base, const Image& perturbed, Norm norm, double epsilon);

Image clamp01(const Image& img);
bool in_unit_range(const Image& img);

}  // namespace forge
