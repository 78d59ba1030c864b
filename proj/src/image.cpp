#include "forge/image.hpp"

#include <algorithm>
#include <cmath>

#include "forge/errors.hpp"

namespace forge {

std::string norm_name(Norm n) { return n == Norm::Linf ? "linf" : "l2"; }

Norm parse_norm(const std::string& s) {
    if (s == "linf") return Norm::Linf;
    if (s == "l2") return Norm::L2;
    throw ArgumentError("unknown norm: " + s);
}

Image apply_perturbation(const Image& base, const Image& delta) {
    if (!base.same_shape(delta)) throw StructuralError("apply_perturbation: shape mismatch");
    Image out(base.height, base.width);
    for (std::size_t i = 0; i < base.size(); ++i)
        out.data[i] = std::clamp(base.data[i] + delta.data[i], 0.0f, 1.0f);
    return out;
}

double image_norm_distance(const Image& a, const Image& b, Norm norm) {
    if (!a.same_shape(b)) throw StructuralError("image_norm_distance: shape mismatch");
    if (norm == Norm::Linf) {
        double m = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
        return m;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double budget_violation(const Image& base, const Image& perturbed, Norm norm, double epsilon) {
    return std::max(0.0, image_norm_distance(base, perturbed, norm) - epsilon);
}

Image clamp01(const Image& img) {
    Image out = img;
    for (auto& v : out.data) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

bool in_unit_range(const Image& img) {
    for (float v : img.data)
        if (!(v >= 0.0f && v <= 1.0f)) return false;
    return true;
}

}  // namespace forge
