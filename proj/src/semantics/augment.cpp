#include "forge/semantics/augment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "forge/errors.hpp"
#include "forge/io.hpp"
#include "forge/rng.hpp"

namespace forge::semantics {

std::string augment_method_name(AugmentMethod m) {
    switch (m) {
        case AugmentMethod::JPEG: return "JPEG";
        case AugmentMethod::GaussianBlur: return "GaussianBlur";
        case AugmentMethod::RandomAffine: return "RandomAffine";
        case AugmentMethod::ColorJitter: return "ColorJitter";
        case AugmentMethod::RandomHorizontalFlip: return "RandomHorizontalFlip";
        case AugmentMethod::RandomPerspective: return "RandomPerspective";
    }
    return "?";
}

AugmentMethod parse_augment_method(const std::string& s) {
    for (auto m : all_augment_methods())
        if (augment_method_name(m) == s) return m;
    throw ArgumentError("unknown augmentation method: " + s);
}

const std::vector<AugmentMethod>& all_augment_methods() {
    static const std::vector<AugmentMethod> all = {
        AugmentMethod::JPEG,        AugmentMethod::GaussianBlur,
        AugmentMethod::RandomAffine, AugmentMethod::ColorJitter,
        AugmentMethod::RandomHorizontalFlip, AugmentMethod::RandomPerspective,
    };
    return all;
}

namespace {

float sample_bilinear(const Image& img, int c, double y, double x) {
    // Outside the source -> fill 0.
    if (y < -0.5 || x < -0.5 || y > img.height - 0.5 || x > img.width - 0.5) return 0.0f;
    const int y0 = static_cast<int>(std::floor(y)), x0 = static_cast<int>(std::floor(x));
    const double fy = y - y0, fx = x - x0;
    auto px = [&](int yy, int xx) -> double {
        if (yy < 0 || xx < 0 || yy >= img.height || xx >= img.width) return 0.0;
        return img.at(c, yy, xx);
    };
    const double v = px(y0, x0) * (1 - fy) * (1 - fx) + px(y0, x0 + 1) * (1 - fy) * fx +
                     px(y0 + 1, x0) * fy * (1 - fx) + px(y0 + 1, x0 + 1) * fy * fx;
    return static_cast<float>(v);
}

Image gaussian_blur(const Image& img, int kernel, double sigma) {
    if (kernel % 2 == 0 || kernel < 1) throw ArgumentError("blur kernel must be odd and positive");
    std::vector<double> k(kernel);
    const int half = kernel / 2;
    double sum = 0.0;
    for (int i = 0; i < kernel; ++i) {
        k[i] = std::exp(-(i - half) * (i - half) / (2.0 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;

    Image tmp(img.height, img.width), out(img.height, img.width);
    auto clampi = [](int v, int lo, int hi) { return std::max(lo, std::min(hi, v)); };
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double s = 0.0;
                for (int i = -half; i <= half; ++i)
                    s += k[i + half] * img.at(c, y, clampi(x + i, 0, img.width - 1));
                tmp.at(c, y, x) = static_cast<float>(s);
            }
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double s = 0.0;
                for (int i = -half; i <= half; ++i)
                    s += k[i + half] * tmp.at(c, clampi(y + i, 0, img.height - 1), x);
                out.at(c, y, x) = static_cast<float>(s);
            }
    }
    return out;
}

Image affine(const Image& img, double angle_deg, double tx, double ty) {
    const double a = angle_deg * M_PI / 180.0;
    const double cy = (img.height - 1) / 2.0, cx = (img.width - 1) / 2.0;
    Image out(img.height, img.width);
    // Inverse map: rotate by -a around the center after undoing translation.
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double ux = x - cx - tx, uy = y - cy - ty;
            const double sx = std::cos(a) * ux + std::sin(a) * uy + cx;
            const double sy = -std::sin(a) * ux + std::cos(a) * uy + cy;
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = sample_bilinear(img, c, sy, sx);
        }
    return out;
}

void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    v = mx;
    const double d = mx - mn;
    s = mx == 0.0 ? 0.0 : d / mx;
    if (d == 0.0) {
        h = 0.0;
    } else if (mx == r) {
        h = std::fmod((g - b) / d, 6.0) / 6.0;
    } else if (mx == g) {
        h = ((b - r) / d + 2.0) / 6.0;
    } else {
        h = ((r - g) / d + 4.0) / 6.0;
    }
    if (h < 0.0) h += 1.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
    const double hh = h * 6.0;
    const int i = static_cast<int>(std::floor(hh)) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s), q = v * (1.0 - s * f), t = v * (1.0 - s * (1.0 - f));
    switch ((i + 6) % 6) {
        case 0: r = v; g = t; b = p; break;
        case 1: r = q; g = v; b = p; break;
        case 2: r = p; g = v; b = t; break;
        case 3: r = p; g = q; b = v; break;
        case 4: r = t; g = p; b = v; break;
        default: r = v; g = p; b = q; break;
    }
}

Image color_jitter(const Image& img, const AugmentationSpec& spec, Rng& rng) {
    // Factors sampled like torchvision: U(max(0,1-amt), 1+amt); hue shift is
    // a fraction of the hue circle. Applied in the fixed order b, c, s, h.
    const double fb = spec.jitter_brightness == 0.0
                          ? 1.0
                          : rng.uniform(std::max(0.0, 1.0 - spec.jitter_brightness),
                                        1.0 + spec.jitter_brightness);
    const double fc = spec.jitter_contrast == 0.0
                          ? 1.0
                          : rng.uniform(std::max(0.0, 1.0 - spec.jitter_contrast),
                                        1.0 + spec.jitter_contrast);
    const double fs = spec.jitter_saturation == 0.0
                          ? 1.0
                          : rng.uniform(std::max(0.0, 1.0 - spec.jitter_saturation),
                                        1.0 + spec.jitter_saturation);
    const double fh = spec.jitter_hue == 0.0 ? 0.0 : rng.uniform(-spec.jitter_hue, spec.jitter_hue);

    Image out = img;
    // brightness
    for (auto& v : out.data) v = static_cast<float>(std::clamp(v * fb, 0.0, 1.0));
    // contrast around the mean gray
    double mean_gray = 0.0;
    const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
    for (std::size_t i = 0; i < plane; ++i)
        mean_gray += 0.299 * out.data[i] + 0.587 * out.data[plane + i] + 0.114 * out.data[2 * plane + i];
    mean_gray /= static_cast<double>(plane);
    for (auto& v : out.data)
        v = static_cast<float>(std::clamp((v - mean_gray) * fc + mean_gray, 0.0, 1.0));
    // saturation + hue per pixel
    for (std::size_t i = 0; i < plane; ++i) {
        double r = out.data[i], g = out.data[plane + i], b = out.data[2 * plane + i];
        const double gray = 0.299 * r + 0.587 * g + 0.114 * b;
        r = std::clamp(gray + (r - gray) * fs, 0.0, 1.0);
        g = std::clamp(gray + (g - gray) * fs, 0.0, 1.0);
        b = std::clamp(gray + (b - gray) * fs, 0.0, 1.0);
        if (fh != 0.0) {
            double h, s, v;
            rgb_to_hsv(r, g, b, h, s, v);
            h = std::fmod(h + fh + 1.0, 1.0);
            hsv_to_rgb(h, s, v, r, g, b);
        }
        out.data[i] = static_cast<float>(std::clamp(r, 0.0, 1.0));
        out.data[plane + i] = static_cast<float>(std::clamp(g, 0.0, 1.0));
        out.data[2 * plane + i] = static_cast<float>(std::clamp(b, 0.0, 1.0));
    }
    return out;
}

Image horizontal_flip(const Image& img) {
    Image out(img.height, img.width);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

// Homography from 4 point correspondences (dst -> src), solved as an 8x8
// linear system; used for the inverse warp.
Eigen::Matrix3d homography(const double src[4][2], const double dst[4][2]) {
    Eigen::Matrix<double, 8, 8> a = Eigen::Matrix<double, 8, 8>::Zero();
    Eigen::Matrix<double, 8, 1> rhs;
    for (int i = 0; i < 4; ++i) {
        const double x = dst[i][0], y = dst[i][1];
        const double u = src[i][0], v = src[i][1];
        a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
        rhs(2 * i) = u;
        a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
        rhs(2 * i + 1) = v;
    }
    const Eigen::Matrix<double, 8, 1> sol = a.fullPivLu().solve(rhs);
    Eigen::Matrix3d hm;
    hm << sol(0), sol(1), sol(2), sol(3), sol(4), sol(5), sol(6), sol(7), 1.0;
    return hm;
}

Image perspective(const Image& img, double distortion, Rng& rng) {
    const double hw = (img.width - 1) / 2.0, hh = (img.height - 1) / 2.0;
    // Corners displaced inward by U(0, distortion * half-extent).
    double src[4][2] = {{0, 0},
                        {static_cast<double>(img.width - 1), 0},
                        {static_cast<double>(img.width - 1), static_cast<double>(img.height - 1)},
                        {0, static_cast<double>(img.height - 1)}};
    double dst[4][2];
    for (int i = 0; i < 4; ++i) {
        const double dx = rng.uniform(0.0, distortion * hw);
        const double dy = rng.uniform(0.0, distortion * hh);
        dst[i][0] = src[i][0] + (src[i][0] < hw ? dx : -dx);
        dst[i][1] = src[i][1] + (src[i][1] < hh ? dy : -dy);
    }
    const Eigen::Matrix3d hm = homography(src, dst);
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const Eigen::Vector3d p = hm * Eigen::Vector3d(x, y, 1.0);
            const double sx = p(0) / p(2), sy = p(1) / p(2);
            for (int c = 0; c < 3; ++c) out.at(c, y, x) = sample_bilinear(img, c, sy, sx);
        }
    return out;
}

}  // namespace

Image augment(const Image& image, const AugmentationSpec& spec) {
    Rng rng(mix_seed(static_cast<std::uint64_t>(spec.seed),
                     static_cast<std::uint64_t>(spec.method) + 0xa6ULL));
    switch (spec.method) {
        case AugmentMethod::JPEG:
            return io::jpeg_roundtrip(image, spec.jpeg_quality);
        case AugmentMethod::GaussianBlur:
            return gaussian_blur(image, spec.blur_kernel,
                                 rng.uniform(spec.blur_sigma_min, spec.blur_sigma_max));
        case AugmentMethod::RandomAffine: {
            const double angle = rng.uniform(-spec.affine_max_rotation_deg, spec.affine_max_rotation_deg);
            const double tx = rng.uniform(-spec.affine_max_translate, spec.affine_max_translate) *
                              image.width;
            const double ty = rng.uniform(-spec.affine_max_translate, spec.affine_max_translate) *
                              image.height;
            return affine(image, angle, tx, ty);
        }
        case AugmentMethod::ColorJitter:
            return color_jitter(image, spec, rng);
        case AugmentMethod::RandomHorizontalFlip:
            return rng.bernoulli(spec.flip_probability) ? horizontal_flip(image) : image;
        case AugmentMethod::RandomPerspective:
            return perspective(image, spec.perspective_distortion, rng);
    }
    throw ArgumentError("unknown augmentation method");
}

}  // namespace forge::semantics
