#pragma once

#include "forge/image.hpp"

namespace forge::semantics {

// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1.0, computed per channel over valid window
// positions and averaged. For images smaller than the window, the window
// shrinks to the largest odd size that fits. Symmetric in its arguments.
double ssim(const Image& a, const Image& b);

}  // namespace forge::semantics
