#include "forge/attack/diff_jpeg.hpp"

#include <algorithm>
#include <cmath>

#include "forge/errors.hpp"

namespace forge::attack {

namespace {

// Standard base quantization tables (Annex K), row-major.
constexpr int kLumaBase[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99,
};
constexpr int kChromaBase[64] = {
    17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
};

// Orthonormal 8x8 DCT-II matrix; D * D^T = I, so the IDCT is the transpose.
struct DctMatrix {
    double d[8][8];
    DctMatrix() {
        for (int u = 0; u < 8; ++u) {
            const double cu = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int x = 0; x < 8; ++x) d[u][x] = cu * std::cos((2 * x + 1) * u * M_PI / 16.0);
        }
    }
};
const DctMatrix kDct;

void dct2(const double in[8][8], double out[8][8]) {
    double tmp[8][8];
    for (int u = 0; u < 8; ++u)
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int y = 0; y < 8; ++y) s += kDct.d[u][y] * in[x][y];
            tmp[x][u] = s;
        }
    for (int u = 0; u < 8; ++u)
        for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int x = 0; x < 8; ++x) s += kDct.d[u][x] * tmp[x][v];
            out[u][v] = s;
        }
}

void idct2(const double in[8][8], double out[8][8]) {
    double tmp[8][8];
    for (int x = 0; x < 8; ++x)
        for (int v = 0; v < 8; ++v) {
            double s = 0;
            for (int u = 0; u < 8; ++u) s += kDct.d[u][x] * in[u][v];
            tmp[x][v] = s;
        }
    for (int x = 0; x < 8; ++x)
        for (int y = 0; y < 8; ++y) {
            double s = 0;
            for (int v = 0; v < 8; ++v) s += kDct.d[v][y] * tmp[x][v];
            out[x][y] = s;
        }
}

// Smooth stand-in for round(): exact at integers, C-infinity everywhere.
double soft_round(double t) { return t - std::sin(2.0 * M_PI * t) / (2.0 * M_PI); }
double soft_round_grad(double t) { return 1.0 - std::cos(2.0 * M_PI * t); }

// RGB <-> YCbCr (JFIF), on [0,255] values.
void rgb_to_ycc(double r, double g, double b, double& y, double& cb, double& cr) {
    y = 0.299 * r + 0.587 * g + 0.114 * b;
    cb = -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0;
    cr = 0.5 * r - 0.418688 * g - 0.081312 * b + 128.0;
}
void ycc_to_rgb(double y, double cb, double cr, double& r, double& g, double& b) {
    r = y + 1.402 * (cr - 128.0);
    g = y - 0.344136 * (cb - 128.0) - 0.714136 * (cr - 128.0);
    b = y + 1.772 * (cb - 128.0);
}

}  // namespace

DiffJpeg::DiffJpeg(int quality) : quality_(quality) {
    if (quality < 1 || quality > 100) throw ArgumentError("diff_jpeg: quality must be in [1,100]");
    const double scale = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
    for (int i = 0; i < 64; ++i) {
        qtab_[0][i] = std::clamp(std::floor((kLumaBase[i] * scale + 50.0) / 100.0), 1.0, 255.0);
        qtab_[1][i] = std::clamp(std::floor((kChromaBase[i] * scale + 50.0) / 100.0), 1.0, 255.0);
    }
}

Image DiffJpeg::forward(const Image& in) {
    in_h_ = in.height;
    in_w_ = in.width;
    pad_h_ = (in.height + 7) / 8 * 8;
    pad_w_ = (in.width + 7) / 8 * 8;
    const std::size_t plane = static_cast<std::size_t>(pad_h_) * pad_w_;

    // Color transform into padded YCbCr planes (edge replicate).
    std::vector<double> ycc(3 * plane);
    for (int y = 0; y < pad_h_; ++y)
        for (int x = 0; x < pad_w_; ++x) {
            const int sy = std::min(y, in.height - 1), sx = std::min(x, in.width - 1);
            double Y, Cb, Cr;
            rgb_to_ycc(in.at(0, sy, sx) * 255.0, in.at(1, sy, sx) * 255.0, in.at(2, sy, sx) * 255.0,
                       Y, Cb, Cr);
            ycc[0 * plane + y * pad_w_ + x] = Y;
            ycc[1 * plane + y * pad_w_ + x] = Cb;
            ycc[2 * plane + y * pad_w_ + x] = Cr;
        }

    pre_round_.assign(3 * plane, 0.0);
    std::vector<double> recon(3 * plane);
    for (int c = 0; c < 3; ++c) {
        const double* q = qtab_[c == 0 ? 0 : 1];
        for (int by = 0; by < pad_h_; by += 8)
            for (int bx = 0; bx < pad_w_; bx += 8) {
                double block[8][8], coef[8][8];
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        block[y][x] = ycc[c * plane + (by + y) * pad_w_ + (bx + x)] - 128.0;
                dct2(block, coef);
                for (int u = 0; u < 8; ++u)
                    for (int v = 0; v < 8; ++v) {
                        const double t = coef[u][v] / q[u * 8 + v];
                        pre_round_[c * plane + (by + u) * pad_w_ + (bx + v)] = t;
                        coef[u][v] = soft_round(t) * q[u * 8 + v];
                    }
                idct2(coef, block);
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        recon[c * plane + (by + y) * pad_w_ + (bx + x)] = block[y][x] + 128.0;
            }
    }

    Image out(in.height, in.width);
    clamped_.assign(out.size(), false);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double r, g, b;
            ycc_to_rgb(recon[0 * plane + y * pad_w_ + x], recon[1 * plane + y * pad_w_ + x],
                       recon[2 * plane + y * pad_w_ + x], r, g, b);
            const double rgb[3] = {r / 255.0, g / 255.0, b / 255.0};
            for (int c = 0; c < 3; ++c) {
                const std::size_t idx = static_cast<std::size_t>(c) * in.height * in.width +
                                        static_cast<std::size_t>(y) * in.width + x;
                if (rgb[c] < 0.0 || rgb[c] > 1.0) clamped_[idx] = true;
                out.data[idx] = static_cast<float>(std::clamp(rgb[c], 0.0, 1.0));
            }
        }
    return out;
}

Image DiffJpeg::backward(const Image& d_out) const {
    if (d_out.height != in_h_ || d_out.width != in_w_)
        throw StructuralError("diff_jpeg backward: gradient shape mismatch");
    const std::size_t plane = static_cast<std::size_t>(pad_h_) * pad_w_;

    // Through clamp, /255 and the inverse color transform (adjoint).
    std::vector<double> d_recon(3 * plane, 0.0);
    for (int y = 0; y < in_h_; ++y)
        for (int x = 0; x < in_w_; ++x) {
            double dr = 0, dg = 0, db = 0;
            for (int c = 0; c < 3; ++c) {
                const std::size_t idx = static_cast<std::size_t>(c) * in_h_ * in_w_ +
                                        static_cast<std::size_t>(y) * in_w_ + x;
                const double g = clamped_[idx] ? 0.0 : static_cast<double>(d_out.data[idx]) / 255.0;
                if (c == 0) dr = g;
                if (c == 1) dg = g;
                if (c == 2) db = g;
            }
            // adjoint of ycc_to_rgb
            d_recon[0 * plane + y * pad_w_ + x] = dr + dg + db;
            d_recon[1 * plane + y * pad_w_ + x] = -0.344136 * dg + 1.772 * db;
            d_recon[2 * plane + y * pad_w_ + x] = 1.402 * dr - 0.714136 * dg;
        }

    // Through IDCT (adjoint = DCT), surrogate derivative, DCT (adjoint = IDCT).
    std::vector<double> d_ycc(3 * plane, 0.0);
    for (int c = 0; c < 3; ++c) {
        for (int by = 0; by < pad_h_; by += 8)
            for (int bx = 0; bx < pad_w_; bx += 8) {
                double dblock[8][8], dcoef[8][8];
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        dblock[y][x] = d_recon[c * plane + (by + y) * pad_w_ + (bx + x)];
                dct2(dblock, dcoef);
                for (int u = 0; u < 8; ++u)
                    for (int v = 0; v < 8; ++v) {
                        const double t = pre_round_[c * plane + (by + u) * pad_w_ + (bx + v)];
                        // d/dcoef of soft_round(coef/q)*q is just the surrogate slope
                        dcoef[u][v] *= soft_round_grad(t);
                    }
                idct2(dcoef, dblock);
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x)
                        d_ycc[c * plane + (by + y) * pad_w_ + (bx + x)] = dblock[y][x];
            }
    }

    // Adjoint of the forward color transform and the edge-replicate padding.
    Image d_in(in_h_, in_w_, 0.0f);
    std::vector<double> acc(d_in.size(), 0.0);
    for (int y = 0; y < pad_h_; ++y)
        for (int x = 0; x < pad_w_; ++x) {
            const int sy = std::min(y, in_h_ - 1), sx = std::min(x, in_w_ - 1);
            const double dY = d_ycc[0 * plane + y * pad_w_ + x];
            const double dCb = d_ycc[1 * plane + y * pad_w_ + x];
            const double dCr = d_ycc[2 * plane + y * pad_w_ + x];
            const double dR = 0.299 * dY - 0.168736 * dCb + 0.5 * dCr;
            const double dG = 0.587 * dY - 0.331264 * dCb - 0.418688 * dCr;
            const double dB = 0.114 * dY + 0.5 * dCb - 0.081312 * dCr;
            const double drgb[3] = {dR, dG, dB};
            for (int c = 0; c < 3; ++c)
                acc[static_cast<std::size_t>(c) * in_h_ * in_w_ +
                    static_cast<std::size_t>(sy) * in_w_ + sx] += drgb[c] * 255.0;
        }
    for (std::size_t i = 0; i < acc.size(); ++i) d_in.data[i] = static_cast<float>(acc[i]);
    return d_in;
}

Image diff_jpeg(const Image& pixels, int quality) {
    DiffJpeg jpeg(quality);
    return jpeg.forward(pixels);
}

}  // namespace forge::attack
