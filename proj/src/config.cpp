/*
 * Copyright 2026 The Voxel Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "voxel/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace voxel {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Splits "12 TB/s" style values into the numeric part and a unit suffix.
void split_number_unit(const std::string& text, const std::string& where, double& number,
                       std::string& unit) {
    const std::string t = trim(text);
    std::size_t pos = 0;
    while (pos < t.size() &&
           (std::isdigit(static_cast<unsigned char>(t[pos])) || t[pos] == '.' || t[pos] == '-' ||
            t[pos] == '+' || t[pos] == 'e' || t[pos] == 'E' ||
            ((t[pos] == '-' || t[pos] == '+') && pos > 0 && (t[pos - 1] == 'e' || t[pos - 1] == 'E')))) {
        // 'e' is only part of the number when followed by a digit or sign
        if ((t[pos] == 'e' || t[pos] == 'E') &&
            !(pos + 1 < t.size() && (std::isdigit(static_cast<unsigned char>(t[pos + 1])) ||
                                     t[pos + 1] == '-' || t[pos + 1] == '+'))) {
            break;
        }
        ++pos;
    }
    const std::string num = t.substr(0, pos);
    unit = lower(trim(t.substr(pos)));
    if (num.empty()) throw ConfigError(where + ": expected a number, got '" + text + "'");
    try {
        std::size_t used = 0;
        number = std::stod(num, &used);
        if (used != num.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError(where + ": malformed number '" + num + "'");
    }
}

}  // namespace

ConfigDoc ConfigDoc::parse_text(const std::string& text) {
    ConfigDoc doc;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key: value', got '" +
                              line + "'");
        }
        const std::string key = trim(line.substr(0, colon));
        const std::string value = trim(line.substr(colon + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (value.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty value for key '" + key + "'");
        if (doc.has(key))
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        doc.entries_.emplace_back(key, value);
    }
    return doc;
}

ConfigDoc ConfigDoc::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

std::string ConfigDoc::render() const {
    std::ostringstream out;
    for (const auto& [k, v] : entries_) out << k << ": " << v << "\n";
    return out.str();
}

bool ConfigDoc::has(const std::string& key) const { return find(key) != nullptr; }

const std::string* ConfigDoc::find(const std::string& key) const {
    for (const auto& [k, v] : entries_) {
        if (k == key) return &v;
    }
    return nullptr;
}

void ConfigDoc::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries_) {
        if (k == key) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(key, value);
}

void ConfigDoc::set_from_override(const std::string& kv) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got '" + kv + "'");
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
}

std::uint64_t parse_count(const std::string& text, const std::string& where) {
    double num = 0;
    std::string unit;
    split_number_unit(text, where, num, unit);
    if (!unit.empty()) throw ConfigError(where + ": count must be unitless, got '" + text + "'");
    if (num < 0 || num != std::floor(num))
        throw ConfigError(where + ": expected a nonnegative integer, got '" + text + "'");
    return static_cast<std::uint64_t>(num);
}

double parse_real(const std::string& text, const std::string& where) {
    double num = 0;
    std::string unit;
    split_number_unit(text, where, num, unit);
    if (!unit.empty() && unit != "w/mm2")
        throw ConfigError(where + ": unexpected unit '" + unit + "'");
    return num;
}

Bytes parse_bytes(const std::string& text, const std::string& where) {
    double num = 0;
    std::string unit;
    split_number_unit(text, where, num, unit);
    double scale = 1;
    if (unit.empty() || unit == "b") scale = 1;
    else if (unit == "kb" || unit == "kib") scale = 1024.0;
    else if (unit == "mb" || unit == "mib") scale = 1024.0 * 1024;
    else if (unit == "gb" || unit == "gib") scale = 1024.0 * 1024 * 1024;
    else if (unit == "tb" || unit == "tib") scale = 1024.0 * 1024 * 1024 * 1024;
    else throw ConfigError(where + ": unknown size unit '" + unit + "'");
    const double v = num * scale;
    if (v < 0) throw ConfigError(where + ": negative size");
    return static_cast<Bytes>(std::llround(v));
}

double parse_bytes_per_sec(const std::string& text, const std::string& where) {
    double num = 0;
    std::string unit;
    split_number_unit(text, where, num, unit);
    double scale = 1;
    if (unit.empty() || unit == "b/s") scale = 1;
    else if (unit == "kb/s") scale = 1e3;
    else if (unit == "mb/s") scale = 1e6;
    else if (unit == "gb/s") scale = 1e9;
    else if (unit == "tb/s") scale = 1e12;
    else throw ConfigError(where + ": unknown rate unit '" + unit + "'");
    if (num < 0) throw ConfigError(where + ": negative rate");
    return num * scale;
}

double parse_ghz(const std::string& text, const std::string& where) {
    double num = 0;
    std::string unit;
    split_number_unit(text, where, num, unit);
    if (unit.empty() || unit == "ghz") return num;
    if (unit == "mhz") return num * 1e-3;
    throw ConfigError(where + ": unknown frequency unit '" + unit + "'");
}

bool parse_bool(const std::string& text, const std::string& where) {
    const std::string t = lower(trim(text));
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError(where + ": expected a boolean, got '" + text + "'");
}

std::string format_bytes(Bytes v) {
    static constexpr std::pair<Bytes, const char*> kUnits[] = {
        {Bytes(1) << 40, "TB"}, {Bytes(1) << 30, "GB"}, {Bytes(1) << 20, "MB"}, {Bytes(1) << 10, "KB"}};
    for (const auto& [scale, name] : kUnits) {
        if (v >= scale && v % scale == 0) return std::to_string(v / scale) + " " + name;
    }
    return std::to_string(v) + " B";
}

DType dtype_from_name(const std::string& name) {
    const std::string t = lower(name);
    if (t == "bf16") return DType::BF16;
    if (t == "fp16") return DType::FP16;
    if (t == "fp32") return DType::FP32;
    if (t == "int8") return DType::INT8;
    throw ConfigError("unknown dtype '" + name + "'");
}

}  // namespace voxel
