#pragma once

#include <string>
#include <vector>

namespace glmbim {

// Row-major grid of non-negative pixel values (power returns). Cell (ix,iy)
// has its centroid at coordinates (ix, iy); x grows to the right, y downward.
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<double> v;

    ImageGrid() = default;
    ImageGrid(int w, int h, double fill = 0.0) : width(w), height(h), v(static_cast<size_t>(w) * h, fill) {}

    double& at(int x, int y) { return v[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return v[static_cast<size_t>(y) * width + x]; }
    bool inside(double x, double y) const { return x >= 0.0 && y >= 0.0 && x <= width - 1.0 && y <= height - 1.0; }

    // Bilinear sample; caller guarantees (x,y) inside.
    double sample(double x, double y) const;
};

// Fixed-size appearance patch (reference template f-bar or an observed patch).
// Pixels outside the image during extraction are marked invalid.
struct Patch {
    int size = 0;                 // side length, patch is size x size
    std::vector<double> v;        // row-major, invalid pixels hold 0
    std::vector<unsigned char> valid;

    Patch() = default;
    explicit Patch(int s, double fill = 0.0)
        : size(s), v(static_cast<size_t>(s) * s, fill), valid(static_cast<size_t>(s) * s, 1) {}

    int count_valid() const;
    bool all_zero() const;
};

// Extract the size x size patch centered at continuous position (cx, cy),
// bilinear-sampled; off-image pixels are flagged invalid.
Patch extract_patch(const ImageGrid& img, double cx, double cy, int size);

// Squared distance between two same-size patches over jointly valid pixels,
// rescaled to the full pixel count so clipped border patches are unbiased.
double patch_distance_sq(const Patch& a, const Patch& b);

// PGM IO. Write scales values to maxval 255 (inspection only); read returns
// values normalized to [0,1] (scene masks).
void write_pgm(const ImageGrid& img, const std::string& path);
ImageGrid read_pgm_normalized(const std::string& path);

}  // namespace glmbim
