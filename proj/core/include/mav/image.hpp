#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mav {

// Dense row-major image, `channels` interleaved floats per pixel. Row 0 is the
// top row; PFM IO flips to the bottom-up file order.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;

    Image() = default;
    Image(int w, int h, int c, float fill = 0.f)
        : width(w), height(h), channels(c), data(size_t(w) * h * c, fill) {}

    float* at(int x, int y) { return data.data() + (size_t(y) * width + x) * channels; }
    const float* at(int x, int y) const {
        return data.data() + (size_t(y) * width + x) * channels;
    }
    size_t pixel_count() const { return size_t(width) * height; }
    bool empty() const { return data.empty(); }
};

// PFM: "PF" (3ch) / "Pf" (1ch), little-endian (negative scale), bottom-up rows.
void write_pfm(const std::string& path, const Image& img);
Image read_pfm(const std::string& path);

// 8-bit PNG, values clamped to [0,1]; 1 or 3 channels.
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);  // returns floats in [0,1]

// Loads by extension (.pfm/.png).
Image read_image(const std::string& path);

}  // namespace mav
