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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voxel/common.hpp"

namespace voxel {

/// Flat `key: value` text document. One entry per line, `#` starts a comment,
/// blank lines ignored. Duplicate keys are an error; order is preserved so a
/// rendered document diffs cleanly against hand-edited sweep configs.
class ConfigDoc {
public:
    static ConfigDoc parse_text(const std::string& text);
    static ConfigDoc load_file(const std::string& path);

    std::string render() const;

    bool has(const std::string& key) const;
    const std::string* find(const std::string& key) const;
    void set(const std::string& key, const std::string& value);

    /// Applies a `key=value` override string (CLI --set).
    void set_from_override(const std::string& kv);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Typed value parsers. `where` names the key (and line when known) for error
// messages. Storage sizes use binary suffixes (KB = 1024 B); rates use decimal
// suffixes (GB/s = 1e9 B/s), matching the usual datasheet conventions.
std::uint64_t parse_count(const std::string& text, const std::string& where);
double parse_real(const std::string& text, const std::string& where);
Bytes parse_bytes(const std::string& text, const std::string& where);
double parse_bytes_per_sec(const std::string& text, const std::string& where);
double parse_ghz(const std::string& text, const std::string& where);
bool parse_bool(const std::string& text, const std::string& where);

std::string format_bytes(Bytes v);

}  // namespace voxel
