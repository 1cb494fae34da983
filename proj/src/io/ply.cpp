#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

#include "splatfix/error.hpp"
#include "splatfix/io.hpp"

namespace splatfix::io {
namespace {

enum class Scalar { i8, u8, i16, u16, i32, u32, f32, f64 };

struct Property {
    std::string name;
    Scalar type = Scalar::f32;
};

struct Element {
    std::string name;
    std::uint64_t count = 0;
    std::vector<Property> props;
    bool has_list = false;
};

int scalar_size(Scalar s) {
    switch (s) {
        case Scalar::i8:
        case Scalar::u8: return 1;
        case Scalar::i16:
        case Scalar::u16: return 2;
        case Scalar::i32:
        case Scalar::u32:
        case Scalar::f32: return 4;
        case Scalar::f64: return 8;
    }
    return 0;
}

bool parse_scalar(const std::string& name, Scalar& out) {
    static const std::pair<const char*, Scalar> table[] = {
        {"char", Scalar::i8},    {"int8", Scalar::i8},     {"uchar", Scalar::u8},
        {"uint8", Scalar::u8},   {"short", Scalar::i16},   {"int16", Scalar::i16},
        {"ushort", Scalar::u16}, {"uint16", Scalar::u16},  {"int", Scalar::i32},
        {"int32", Scalar::i32},  {"uint", Scalar::u32},    {"uint32", Scalar::u32},
        {"float", Scalar::f32},  {"float32", Scalar::f32}, {"double", Scalar::f64},
        {"float64", Scalar::f64}};
    for (const auto& [n, s] : table) {
        if (name == n) {
            out = s;
            return true;
        }
    }
    return false;
}

double decode(const unsigned char* p, Scalar s) {
    std::uint64_t bits = 0;
    const int n = scalar_size(s);
    for (int i = 0; i < n; ++i) {
        bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    switch (s) {
        case Scalar::i8: return static_cast<std::int8_t>(bits);
        case Scalar::u8: return static_cast<std::uint8_t>(bits);
        case Scalar::i16: return static_cast<std::int16_t>(bits);
        case Scalar::u16: return static_cast<std::uint16_t>(bits);
        case Scalar::i32: return static_cast<std::int32_t>(bits);
        case Scalar::u32: return static_cast<std::uint32_t>(bits);
        case Scalar::f32: return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
        case Scalar::f64: return std::bit_cast<double>(bits);
    }
    return 0.0;
}

std::string trim_cr(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) {
        s.pop_back();
    }
    return s;
}

}  // namespace

pcrender::GuidancePointCloud read_ply(const std::filesystem::path& path) {
    const std::string where = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(where + ": cannot open point cloud");
    }
    std::string line;
    if (!std::getline(in, line) || trim_cr(line) != "ply") {
        throw DataError(where + ": missing 'ply' magic");
    }
    bool binary = false;
    bool have_format = false;
    std::vector<Element> elements;
    for (;;) {
        if (!std::getline(in, line)) {
            throw DataError(where + ": header is not terminated by end_header");
        }
        line = trim_cr(line);
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "end_header") {
            break;
        }
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                throw DataError(where + ": unsupported PLY format '" + fmt + "'");
            }
            have_format = true;
        } else if (word == "element") {
            Element e;
            ls >> e.name >> e.count;
            if (!ls) {
                throw DataError(where + ": malformed element line '" + line + "'");
            }
            elements.push_back(e);
        } else if (word == "property") {
            if (elements.empty()) {
                throw DataError(where + ": property before any element");
            }
            std::string type;
            ls >> type;
            if (type == "list") {
                elements.back().has_list = true;
                continue;
            }
            Property p;
            ls >> p.name;
            if (!parse_scalar(type, p.type)) {
                throw DataError(where + ": unknown property type '" + type + "'");
            }
            elements.back().props.push_back(p);
        }
        // comment, obj_info and unknown keywords are ignored
    }
    if (!have_format) {
        throw DataError(where + ": missing format line");
    }

    const std::vector<unsigned char> body((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    std::size_t offset = 0;
    std::istringstream text(binary ? std::string() : std::string(body.begin(), body.end()));

    pcrender::GuidancePointCloud cloud;
    for (const Element& e : elements) {
        if (e.name != "vertex") {
            if (binary) {
                if (e.has_list) {
                    throw DataError(where + ": list properties before the vertex element are not supported");
                }
                std::size_t stride = 0;
                for (const auto& p : e.props) {
                    stride += scalar_size(p.type);
                }
                offset += stride * e.count;
            } else {
                for (std::uint64_t i = 0; i < e.count; ++i) {
                    std::getline(text, line);
                }
            }
            continue;
        }
        if (e.has_list) {
            throw DataError(where + ": list property on the vertex element");
        }
        int ix[6] = {-1, -1, -1, -1, -1, -1};
        const char* names[6] = {"x", "y", "z", "red", "green", "blue"};
        for (std::size_t k = 0; k < e.props.size(); ++k) {
            for (int n = 0; n < 6; ++n) {
                if (e.props[k].name == names[n]) {
                    ix[n] = static_cast<int>(k);
                }
            }
        }
        for (int n = 0; n < 6; ++n) {
            if (ix[n] < 0) {
                throw DataError(where + ": vertex element has no '" + names[n] + "' property");
            }
        }
        std::size_t stride = 0;
        std::vector<std::size_t> prop_offset;
        for (const auto& p : e.props) {
            prop_offset.push_back(stride);
            stride += scalar_size(p.type);
        }
        std::vector<double> values(e.props.size());
        for (std::uint64_t i = 0; i < e.count; ++i) {
            if (binary) {
                if (offset + stride > body.size()) {
                    throw DataError(where + ": truncated vertex data at vertex " + std::to_string(i));
                }
                for (std::size_t k = 0; k < e.props.size(); ++k) {
                    values[k] = decode(body.data() + offset + prop_offset[k], e.props[k].type);
                }
                offset += stride;
            } else {
                for (std::size_t k = 0; k < e.props.size(); ++k) {
                    if (!(text >> values[k])) {
                        throw DataError(where + ": malformed vertex " + std::to_string(i));
                    }
                }
            }
            pcrender::GuidancePoint pt;
            pt.position = {values[ix[0]], values[ix[1]], values[ix[2]]};
            for (int c = 0; c < 3; ++c) {
                const Property& p = e.props[ix[3 + c]];
                const double raw = values[ix[3 + c]];
                double v = raw;
                if (p.type == Scalar::u8) {
                    v = raw / 255.0;
                } else if (p.type == Scalar::u16) {
                    v = raw / 65535.0;
                }
                if (!(v >= 0.0 && v <= 1.0)) {
                    throw DataError(where + ": vertex " + std::to_string(i) + " color '" +
                                    names[3 + c] + "' outside [0, 1]");
                }
                (c == 0 ? pt.color.r : c == 1 ? pt.color.g : pt.color.b) = v;
            }
            cloud.points.push_back(pt);
        }
        return cloud;
    }
    throw DataError(where + ": no vertex element");
}

void write_ply(const std::filesystem::path& path, const pcrender::GuidancePointCloud& cloud) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << cloud.points.size()
        << "\nproperty float x\nproperty float y\nproperty float z\n"
           "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
    for (const auto& p : cloud.points) {
        for (double v : {p.position.x, p.position.y, p.position.z}) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
            const unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                        static_cast<unsigned char>(bits >> 16),
                                        static_cast<unsigned char>(bits >> 24)};
            out.write(reinterpret_cast<const char*>(b), 4);
        }
        const unsigned char c[3] = {quantize_channel(p.color.r), quantize_channel(p.color.g),
                                    quantize_channel(p.color.b)};
        out.write(reinterpret_cast<const char*>(c), 3);
    }
    if (!out) {
        throw DataError(path.string() + ": cannot write point cloud");
    }
}

}  // namespace splatfix::io
