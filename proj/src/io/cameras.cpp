#include <cmath>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "splatfix/error.hpp"
#include "splatfix/io.hpp"

namespace splatfix::io {
namespace {

using nlohmann::json;

struct FieldReader {
    const std::string& file;
    std::string camera;  // "camera 3 ('id')"
    const json& obj;

    [[noreturn]] void fail(const std::string& field, const std::string& what) const {
        throw DataError(file + ": " + camera + ": field '" + field + "' " + what);
    }
    const json& get(const std::string& field) const {
        const auto it = obj.find(field);
        if (it == obj.end()) {
            fail(field, "is missing");
        }
        return *it;
    }
    double number(const std::string& field) const {
        const json& v = get(field);
        if (!v.is_number()) {
            fail(field, "must be a number");
        }
        return v.get<double>();
    }
    int integer(const std::string& field) const {
        const json& v = get(field);
        if (!v.is_number_integer()) {
            fail(field, "must be an integer");
        }
        return v.get<int>();
    }
    std::string string(const std::string& field) const {
        const json& v = get(field);
        if (!v.is_string()) {
            fail(field, "must be a string");
        }
        return v.get<std::string>();
    }
};

}  // namespace

std::vector<CameraRecord> read_cameras(const std::filesystem::path& path) {
    const std::string file = path.string();
    std::ifstream in(path);
    if (!in) {
        throw DataError(file + ": cannot open camera list");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(file + ": invalid JSON (" + e.what() + ")");
    }
    if (!doc.is_array()) {
        throw DataError(file + ": top level must be a list of cameras");
    }
    std::vector<CameraRecord> out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& c = doc[i];
        if (!c.is_object()) {
            throw DataError(file + ": camera " + std::to_string(i) + " is not an object");
        }
        FieldReader r{file, "camera " + std::to_string(i), c};
        CameraRecord rec;
        rec.view.id = r.string("id");
        r.camera += " ('" + rec.view.id + "')";
        Intrinsics& k = rec.view.intrinsics;
        k.width = r.integer("width");
        k.height = r.integer("height");
        k.fx = r.number("fx");
        k.fy = r.number("fy");
        k.cx = r.number("cx");
        k.cy = r.number("cy");
        Quaternion q{r.number("qw"), r.number("qx"), r.number("qy"), r.number("qz")};
        const double dev = std::abs(q.norm() - 1.0);
        if (dev > 1e-4) {
            r.fail("qw", "quaternion (qw, qx, qy, qz) is not unit (|q| = " + std::to_string(q.norm()) + ")");
        }
        if (dev > 1e-6) {
            std::cerr << "warning: " << file << ": " << r.camera << ": renormalizing quaternion\n";
            q = q.normalized();
        }
        rec.view.pose.rotation = q;
        rec.view.pose.translation = {r.number("tx"), r.number("ty"), r.number("tz")};
        rec.role = r.string("role");
        if (rec.role == "reference") {
            rec.view.role = ViewRole::reference;
        } else if (rec.role == "novel" || rec.role == "test") {
            rec.view.role = ViewRole::novel;
        } else {
            r.fail("role", "must be one of reference, novel, test (got '" + rec.role + "')");
        }
        if (c.contains("image") && !c["image"].is_null()) {
            rec.image = r.string("image");
        }
        if (k.width < 1 || k.height < 1 || !(k.fx > 0.0) || !(k.fy > 0.0)) {
            r.fail("fx", "intrinsics must have fx, fy > 0 and width, height >= 1");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

void write_cameras(const std::filesystem::path& path, const std::vector<CameraRecord>& cameras) {
    json doc = json::array();
    for (const CameraRecord& rec : cameras) {
        const CameraView& v = rec.view;
        json c = {{"id", v.id},
                  {"width", v.intrinsics.width},
                  {"height", v.intrinsics.height},
                  {"fx", v.intrinsics.fx},
                  {"fy", v.intrinsics.fy},
                  {"cx", v.intrinsics.cx},
                  {"cy", v.intrinsics.cy},
                  {"qw", v.pose.rotation.w},
                  {"qx", v.pose.rotation.x},
                  {"qy", v.pose.rotation.y},
                  {"qz", v.pose.rotation.z},
                  {"tx", v.pose.translation.x},
                  {"ty", v.pose.translation.y},
                  {"tz", v.pose.translation.z},
                  {"role", rec.role}};
        if (rec.image) {
            c["image"] = *rec.image;
        }
        doc.push_back(std::move(c));
    }
    std::ofstream out(path, std::ios::trunc);
    out << doc.dump(2) << '\n';
    if (!out) {
        throw DataError(path.string() + ": cannot write camera list");
    }
}

}  // namespace splatfix::io
