// Regenerates the bundled sample images (synthetic stand-ins with simple
// recognizable structure). Run once; outputs are committed under assets/.

#include <cmath>
#include <filesystem>
#include <iostream>

#include "forge/image.hpp"
#include "forge/io.hpp"

using forge::Image;

namespace {

Image make_chart(int n) {
    Image img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            img.at(0, y, x) = 0.85f;
            img.at(1, y, x) = 0.87f;
            img.at(2, y, x) = 0.92f;
        }
    // rising polyline
    for (int x = 0; x < n; ++x) {
        const int y = n - 2 - (x * (n - 4)) / (2 * n) - static_cast<int>(2.5 * std::sin(x * 0.8));
        const int yy = std::clamp(y, 0, n - 1);
        img.at(0, yy, x) = 0.10f;
        img.at(1, yy, x) = 0.35f;
        img.at(2, yy, x) = 0.80f;
    }
    // axis
    for (int y = 0; y < n; ++y) img.at(0, y, 1) = img.at(1, y, 1) = img.at(2, y, 1) = 0.3f;
    for (int x = 0; x < n; ++x) img.at(0, n - 1, x) = img.at(1, n - 1, x) = img.at(2, n - 1, x) = 0.3f;
    return img;
}

Image make_grid(int n) {
    Image img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const bool line = (y % 4 == 0) || (x % 4 == 0);
            const float v = line ? 0.2f : 0.9f;
            img.at(0, y, x) = v;
            img.at(1, y, x) = v * 0.95f;
            img.at(2, y, x) = v * 0.9f;
        }
    return img;
}

Image make_stripes(int n) {
    Image img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const float t = ((x + y) % 6) / 5.0f;
            img.at(0, y, x) = 0.2f + 0.6f * t;
            img.at(1, y, x) = 0.25f + 0.4f * (1.0f - t);
            img.at(2, y, x) = 0.5f;
        }
    return img;
}

Image make_rings(int n) {
    Image img(n, n);
    const double c = (n - 1) / 2.0;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double r = std::hypot(x - c, y - c);
            const double v = 0.5 + 0.45 * std::cos(r * 1.4);
            img.at(0, y, x) = static_cast<float>(v);
            img.at(1, y, x) = static_cast<float>(0.3 + 0.5 * v);
            img.at(2, y, x) = static_cast<float>(1.0 - 0.7 * v);
        }
    return img;
}

Image make_scene(int n) {
    Image img(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const float sky = 1.0f - static_cast<float>(y) / n;
            img.at(0, y, x) = 0.3f + 0.3f * sky;
            img.at(1, y, x) = 0.5f + 0.3f * sky;
            img.at(2, y, x) = 0.7f + 0.25f * sky;
        }
    // ground
    for (int y = 2 * n / 3; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            img.at(0, y, x) = 0.25f;
            img.at(1, y, x) = 0.5f;
            img.at(2, y, x) = 0.2f;
        }
    // sun
    const int sx = 3 * n / 4, sy = n / 4;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
            if (std::hypot(x - sx, y - sy) < n / 8.0) {
                img.at(0, y, x) = 0.95f;
                img.at(1, y, x) = 0.85f;
                img.at(2, y, x) = 0.3f;
            }
    return img;
}

}  // namespace

int main(int argc, char** argv) {
    const std::filesystem::path out = argc > 1 ? argv[1] : "assets/images";
    std::filesystem::create_directories(out);
    const int n = 16;
    forge::io::write_png(out / "chart.png", make_chart(n));
    forge::io::write_png(out / "grid.png", make_grid(n));
    forge::io::write_png(out / "stripes.png", make_stripes(n));
    forge::io::write_png(out / "rings.png", make_rings(n));
    forge::io::write_png(out / "scene.png", make_scene(n));
    // small variant used by the acceptance scenario
    forge::io::write_png(out / "chart8.png", make_chart(8));
    std::cout << "wrote sample images to " << out << "\n";
    return 0;
}
