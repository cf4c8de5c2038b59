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
#include <map>
#include <mutex>
#include <tuple>

#include "voxel/chipspec.hpp"
#include "voxel/common.hpp"
#include "voxel/graph.hpp"

namespace voxel {

struct TileCost {
    Cycles cycles = 0;
    std::uint64_t macs_useful = 0;
    std::uint64_t macs_total = 0;  // including padding to the SA shape
    Bytes sram_bytes_read = 0;
    Bytes sram_bytes_written = 0;

    double spatial_utilization() const {
        return macs_total == 0 ? 1.0
                               : static_cast<double>(macs_useful) / static_cast<double>(macs_total);
    }
    bool operator==(const TileCost&) const = default;
};

/// Output-stationary systolic-array model: the tile is padded to the SA
/// shape, each of ceil(M/s)*ceil(N/s) folds streams K MAC-column steps plus
/// the 2s-2 fill/drain.
TileCost matmul_cost(std::uint64_t m, std::uint64_t k, std::uint64_t n, std::uint32_t sa_width,
                     DType dtype = DType::BF16);

/// Vector unit pass over n elements; fused_input_count tracks how many input
/// streams are read concurrently (SRAM traffic, not extra cycles).
TileCost vector_cost(std::uint64_t elems, std::uint32_t fused_input_count,
                     std::uint32_t vector_lanes, DType dtype = DType::BF16);

/// Softmax decomposes into three vector passes (max, exp-sum, normalize).
TileCost softmax_cost(std::uint64_t rows, std::uint64_t cols, std::uint32_t vector_lanes,
                      DType dtype = DType::BF16);

TileCost reduce_cost(std::uint64_t elems, std::uint32_t vector_lanes, DType dtype = DType::BF16);

/// Memoizing cost evaluator keyed by (op kind, shape, sa_width, lanes).
/// Concurrent readers are safe; insertion is serialized.
class TileCostModel {
public:
    explicit TileCostModel(const ChipSpec& spec)
        : sa_width_(spec.sa_width), lanes_(spec.vector_lanes) {}

    TileCost cost(const OpTile& tile, DType dtype = DType::BF16) const;

    std::uint64_t memo_hits() const { return hits_; }
    std::uint64_t memo_misses() const { return misses_; }

private:
    using Key = std::tuple<OpKind, std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t,
                           std::uint32_t, std::uint64_t, std::uint64_t, DType>;
    std::uint32_t sa_width_;
    std::uint32_t lanes_;
    mutable std::mutex mu_;
    mutable std::map<Key, TileCost> memo_;
    mutable std::uint64_t hits_ = 0;
    mutable std::uint64_t misses_ = 0;
};

}  // namespace voxel
