#include "forge/semantics/ssim.hpp"

#include <cmath>
#include <vector>

#include "forge/errors.hpp"

namespace forge::semantics {

namespace {

constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
constexpr double kRange = 1.0;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_kernel(int size) {
    std::vector<double> k(size);
    const double c = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        k[i] = std::exp(-(i - c) * (i - c) / (2.0 * kSigma * kSigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable valid-mode Gaussian filtering of one channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::vector<double>& kernel) {
    const int k = static_cast<int>(kernel.size());
    const int oh = h - k + 1, ow = w - k + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += kernel[i] * plane[static_cast<std::size_t>(y) * w + x + i];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < k; ++i) s += kernel[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

}  // namespace

double ssim(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw StructuralError("ssim: shape mismatch");

    int win = 11;
    const int smallest = std::min(a.height, a.width);
    if (smallest < win) win = smallest % 2 == 1 ? smallest : smallest - 1;
    if (win < 1) throw StructuralError("ssim: image too small");

    const auto kernel = gaussian_kernel(win);
    const double c1 = (kK1 * kRange) * (kK1 * kRange);
    const double c2 = (kK2 * kRange) * (kK2 * kRange);

    const int h = a.height, w = a.width;
    const std::size_t plane_size = static_cast<std::size_t>(h) * w;
    double total = 0.0;

    for (int c = 0; c < 3; ++c) {
        std::vector<double> xa(plane_size), xb(plane_size), xaa(plane_size), xbb(plane_size),
            xab(plane_size);
        for (std::size_t i = 0; i < plane_size; ++i) {
            const double va = a.data[static_cast<std::size_t>(c) * plane_size + i];
            const double vb = b.data[static_cast<std::size_t>(c) * plane_size + i];
            xa[i] = va;
            xb[i] = vb;
            xaa[i] = va * va;
            xbb[i] = vb * vb;
            xab[i] = va * vb;
        }
        const auto mu_a = filter_valid(xa, h, w, kernel);
        const auto mu_b = filter_valid(xb, h, w, kernel);
        const auto m_aa = filter_valid(xaa, h, w, kernel);
        const auto m_bb = filter_valid(xbb, h, w, kernel);
        const auto m_ab = filter_valid(xab, h, w, kernel);

        double sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = m_aa[i] - mu_a[i] * mu_a[i];
            const double vb = m_bb[i] - mu_b[i] * mu_b[i];
            const double cov = m_ab[i] - mu_a[i] * mu_b[i];
            const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
            const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
            sum += num / den;
        }
        total += sum / static_cast<double>(mu_a.size());
    }
    return total / 3.0;
}

}  // namespace forge::semantics
