#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "splatfix/core.hpp"

namespace splatfix {

// Row-major interleaved RGB. Values are nominally in [0, 1]; clamping happens
// at output boundaries (PNG encoding). The same layout carries per-pixel
// color gradients, which may be negative.
class ColorImage {
public:
    ColorImage() = default;
    ColorImage(int width, int height, Rgb fill = {});

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return pixel_count() == 0; }
    bool same_size(const ColorImage& o) const { return width_ == o.width_ && height_ == o.height_; }

    Rgb at(int x, int y) const {
        const std::size_t i = index(x, y);
        return {data_[i], data_[i + 1], data_[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        const std::size_t i = index(x, y);
        data_[i] = c.r;
        data_[i + 1] = c.g;
        data_[i + 2] = c.b;
    }
    double channel(int x, int y, int c) const { return data_[index(x, y) + c]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool operator==(const ColorImage&) const = default;

private:
    std::size_t index(int x, int y) const {
        return 3 * (static_cast<std::size_t>(y) * width_ + static_cast<std::size_t>(x));
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

using ColorGradient = ColorImage;

// Per-pixel gradient weights in [0, 1].
class WeightMap {
public:
    WeightMap() = default;
    WeightMap(int width, int height, double fill = 1.0);

    int width() const { return width_; }
    int height() const { return height_; }
    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    void set(int x, int y, double v) { values_[static_cast<std::size_t>(y) * width_ + x] = v; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    bool operator==(const WeightMap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

// 8-bit quantization used by every image writer: round(255 * clamp(v, 0, 1)).
unsigned char quantize_channel(double v);

// Round-trips an image through 8-bit quantization.
ColorImage quantized(const ColorImage& image);

}  // namespace splatfix
