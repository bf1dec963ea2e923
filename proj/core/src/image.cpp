#include "mav/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <stdexcept>

namespace mav {

namespace {

struct FileCloser {
    void operator()(FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void write_pfm(const std::string& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::runtime_error("write_pfm: image must have 1 or 3 channels");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("write_pfm: cannot open " + path);
    std::fprintf(f.get(), "%s\n%d %d\n-1.0\n", img.channels == 3 ? "PF" : "Pf",
                 img.width, img.height);
    // Bottom-up row order.
    for (int y = img.height - 1; y >= 0; --y) {
        const float* row = img.at(0, y);
        if (std::fwrite(row, sizeof(float), size_t(img.width) * img.channels, f.get()) !=
            size_t(img.width) * img.channels)
            throw std::runtime_error("write_pfm: short write to " + path);
    }
}

Image read_pfm(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("read_pfm: cannot open " + path);
    char tag[3] = {};
    if (std::fscanf(f.get(), "%2s", tag) != 1)
        throw std::runtime_error("read_pfm: bad header in " + path);
    int channels;
    if (std::strcmp(tag, "PF") == 0) channels = 3;
    else if (std::strcmp(tag, "Pf") == 0) channels = 1;
    else throw std::runtime_error("read_pfm: not a PFM file: " + path);
    int w, h;
    double scale;
    if (std::fscanf(f.get(), "%d %d %lf", &w, &h, &scale) != 3 || w <= 0 || h <= 0)
        throw std::runtime_error("read_pfm: bad dimensions in " + path);
    std::fgetc(f.get());  // single whitespace after the scale
    Image img(w, h, channels);
    for (int y = h - 1; y >= 0; --y) {
        float* row = img.at(0, y);
        if (std::fread(row, sizeof(float), size_t(w) * channels, f.get()) !=
            size_t(w) * channels)
            throw std::runtime_error("read_pfm: short read from " + path);
    }
    if (scale > 0) {
        // Big-endian file; byte-swap.
        for (float& v : img.data) {
            uint32_t u;
            std::memcpy(&u, &v, 4);
            u = __builtin_bswap32(u);
            std::memcpy(&v, &u, 4);
        }
    }
    return img;
}

void write_png(const std::string& path, const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::runtime_error("write_png: image must have 1 or 3 channels");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw std::runtime_error("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("write_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: libpng error writing " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(size_t(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        const float* src = img.at(0, y);
        for (size_t i = 0; i < row.size(); ++i) {
            float v = std::clamp(src[i], 0.f, 1.f);
            row[i] = uint8_t(std::lround(v * 255.f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw std::runtime_error("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw std::runtime_error("read_png: libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: libpng error reading " + path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);

    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int w = int(png_get_image_width(png, info));
    int h = int(png_get_image_height(png, info));
    int channels = int(png_get_channels(png, info));
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: unsupported channel count in " + path);
    }

    Image img(w, h, channels);
    std::vector<uint8_t> row(size_t(w) * channels);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        float* dst = img.at(0, y);
        for (size_t i = 0; i < row.size(); ++i) dst[i] = float(row[i]) / 255.f;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

Image read_image(const std::string& path) {
    auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".pfm") return read_pfm(path);
    if (ext == ".png") return read_png(path);
    throw std::runtime_error("read_image: unsupported extension: " + path);
}

}  // namespace mav
