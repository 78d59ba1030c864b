#pragma once

#include <vector>

#include "forge/image.hpp"

namespace forge::attack {

// Differentiable JPEG approximation: YCbCr conversion, blockwise 8x8 DCT,
// quantization with a smooth rounding surrogate r(t) = t - sin(2*pi*t)/(2*pi),
// dequantization, inverse DCT. No chroma subsampling and no entropy stage
// (lossless anyway). At quality 100 the output deviates from the input by at
// most ~0.02.
class DiffJpeg {
public:
    explicit DiffJpeg(int quality);  // throws ArgumentError outside [1,100]

    // Caches intermediates for backward().
    Image forward(const Image& in);

    // Vector-Jacobian product w.r.t. the input of the last forward() call.
    Image backward(const Image& d_out) const;

    int quality() const { return quality_; }

private:
    int quality_;
    double qtab_[2][64];  // scaled quantization tables: [0]=luma, [1]=chroma

    // cached from forward()
    int in_h_ = 0, in_w_ = 0;        // original size
    int pad_h_ = 0, pad_w_ = 0;      // padded to multiples of 8
    std::vector<double> pre_round_;  // coefficients/Q before the surrogate, CHW over padded planes
    std::vector<bool> clamped_;      // output positions clipped to [0,1]
};

// One-shot forward.
Image diff_jpeg(const Image& pixels, int quality);

}  // namespace forge::attack
