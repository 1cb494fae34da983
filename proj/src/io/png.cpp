#include <png.h>

#include <cstring>
#include <vector>

#include "splatfix/error.hpp"
#include "splatfix/io.hpp"

namespace splatfix::io {

ColorImage read_png(const std::filesystem::path& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        throw DataError(path.string() + ": cannot read PNG (" + img.message + ")");
    }
    img.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buf(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = img.message;
        png_image_free(&img);
        throw DataError(path.string() + ": cannot decode PNG (" + msg + ")");
    }
    ColorImage out(static_cast<int>(img.width), static_cast<int>(img.height));
    auto d = out.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        d[i] = buf[i] / 255.0;
    }
    return out;
}

void write_png(const std::filesystem::path& path, const ColorImage& image) {
    if (image.empty()) {
        throw DataError(path.string() + ": cannot write an empty image");
    }
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(image.width());
    img.height = static_cast<png_uint_32>(image.height());
    img.format = PNG_FORMAT_RGB;
    std::vector<unsigned char> buf(image.data().size());
    const auto d = image.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        buf[i] = quantize_channel(d[i]);
    }
    if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
        throw DataError(path.string() + ": cannot write PNG (" + img.message + ")");
    }
}

}  // namespace splatfix::io
