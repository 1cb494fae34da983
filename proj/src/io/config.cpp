#include <charconv>
#include <fstream>
#include <sstream>

#include "splatfix/error.hpp"
#include "splatfix/io.hpp"

namespace splatfix::io {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
        return v.substr(1, v.size() - 2);
    }
    return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') {
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') {
                throw DataError(source + ":" + std::to_string(lineno) + ": malformed section header");
            }
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw DataError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (value.empty() || (value.front() != '"' && value.front() != '\'')) {
            const auto hash = value.find('#');
            if (hash != std::string::npos) {
                value = trim(value.substr(0, hash));
            }
        }
        if (key.empty()) {
            throw DataError(source + ":" + std::to_string(lineno) + ": empty key");
        }
        if (!section.empty()) {
            key = section + "." + key;
        }
        cfg.values_[key] = unquote(value);
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(path.string() + ": cannot open config file");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void KeyValueConfig::set_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || trim(assignment.substr(0, eq)).empty()) {
        throw UsageError("override '" + assignment + "' is not of the form key=value");
    }
    values_[trim(assignment.substr(0, eq))] = unquote(trim(assignment.substr(eq + 1)));
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const std::string& v = it->second;
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw DataError(source_ + ": '" + key + "' must be a number (got '" + v + "')");
    }
    return out;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const std::string& v = it->second;
    std::int64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw DataError(source_ + ": '" + key + "' must be an integer (got '" + v + "')");
    }
    return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
        return fallback;
    }
    const std::string& v = it->second;
    if (v == "true" || v == "1") {
        return true;
    }
    if (v == "false" || v == "0") {
        return false;
    }
    throw DataError(source_ + ": '" + key + "' must be true or false (got '" + v + "')");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

void KeyValueConfig::require_known(const std::set<std::string>& known) const {
    std::string unknown;
    for (const auto& [k, v] : values_) {
        if (!known.count(k)) {
            unknown += (unknown.empty() ? "" : ", ") + k;
        }
    }
    if (!unknown.empty()) {
        throw DataError(source_ + ": unknown setting(s): " + unknown);
    }
}

std::string KeyValueConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k + " = " + v + "\n";
    }
    return out;
}

}  // namespace splatfix::io
