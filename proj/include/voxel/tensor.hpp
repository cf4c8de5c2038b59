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
#include <variant>
#include <vector>

#include "voxel/common.hpp"

namespace voxel {

/// One contiguous byte range of a tensor on one DRAM channel.
struct DramRange {
    ChannelId channel = 0;
    Addr offset = 0;
    Bytes len = 0;

    bool operator==(const DramRange&) const = default;
};

/// A tensor part sharded over DRAM channels. Ranges are sorted by channel and
/// disjoint per channel.
struct DramSpan {
    std::vector<DramRange> ranges;

    Bytes total() const {
        Bytes t = 0;
        for (const auto& r : ranges) t += r.len;
        return t;
    }
    bool operator==(const DramSpan&) const = default;
};

struct CoreSram {
    CoreId core = 0;
    Bytes offset = 0;

    bool operator==(const CoreSram&) const = default;
};

/// Unplaced regions get a span later from a placement policy.
using Location = std::variant<std::monostate, DramSpan, CoreSram>;

struct TensorRegion {
    TensorId id = kNoTensor;
    DType dtype = DType::BF16;
    std::vector<std::uint64_t> shape;
    Location location;
    Bytes size_bytes = 0;
    bool explicit_offset = false;  // SRAM offset given by the caller, not defaulted
    // Views are contiguous byte windows into a DRAM-resident parent; they take
    // the parent's placement and are skipped by placement policies. Writers of
    // overlapping views are ordered by explicit plan dependencies.
    TensorId parent = kNoTensor;
    Bytes parent_offset = 0;

    bool is_view() const { return parent != kNoTensor; }
    bool in_dram() const { return std::holds_alternative<DramSpan>(location); }
    bool in_sram() const { return std::holds_alternative<CoreSram>(location); }
    bool unplaced() const { return std::holds_alternative<std::monostate>(location); }
};

/// The contiguous logical byte window [offset, offset+len) of a span (ranges
/// concatenated in channel order).
DramSpan slice_span(const DramSpan& span, Bytes offset, Bytes len);

}  // namespace voxel
