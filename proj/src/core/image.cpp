#include "splatfix/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splatfix {

ColorImage::ColorImage(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw std::invalid_argument("ColorImage: negative dimensions");
    }
    data_.resize(3 * pixel_count());
    for (std::size_t i = 0; i < pixel_count(); ++i) {
        data_[3 * i] = fill.r;
        data_[3 * i + 1] = fill.g;
        data_[3 * i + 2] = fill.b;
    }
}

WeightMap::WeightMap(int width, int height, double fill)
    : width_(width), height_(height),
      values_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill) {
    if (width < 0 || height < 0) {
        throw std::invalid_argument("WeightMap: negative dimensions");
    }
}

unsigned char quantize_channel(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<unsigned char>(std::lround(255.0 * c));
}

ColorImage quantized(const ColorImage& image) {
    ColorImage out = image;
    for (double& v : out.data()) {
        v = quantize_channel(v) / 255.0;
    }
    return out;
}

}  // namespace splatfix
