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

#include "voxel/core_model.hpp"

namespace voxel {

TileCost matmul_cost(std::uint64_t m, std::uint64_t k, std::uint64_t n, std::uint32_t sa_width,
                     DType dtype) {
    TileCost c;
    if (m == 0 || k == 0 || n == 0) return c;
    const std::uint64_t s = sa_width;
    const std::uint64_t folds = ceil_div(m, s) * ceil_div(n, s);
    c.cycles = folds * (k + 2 * s - 2);
    c.macs_total = folds * s * s * k;
    c.macs_useful = m * k * n;
    const Bytes ds = dtype_size(dtype);
    c.sram_bytes_read = (m * k + k * n) * ds;
    c.sram_bytes_written = m * n * ds;
    return c;
}

TileCost vector_cost(std::uint64_t elems, std::uint32_t fused_input_count,
                     std::uint32_t vector_lanes, DType dtype) {
    TileCost c;
    if (elems == 0) return c;
    c.cycles = ceil_div(elems, vector_lanes);
    c.macs_useful = elems;
    c.macs_total = c.cycles * vector_lanes;
    const Bytes ds = dtype_size(dtype);
    c.sram_bytes_read = static_cast<Bytes>(fused_input_count) * elems * ds;
    c.sram_bytes_written = elems * ds;
    return c;
}

TileCost softmax_cost(std::uint64_t rows, std::uint64_t cols, std::uint32_t vector_lanes,
                      DType dtype) {
    // Three passes over the rows*cols block: running max, exp + sum, normalize.
    TileCost c;
    const std::uint64_t elems = rows * cols;
    if (elems == 0) return c;
    c.cycles = 3 * ceil_div(elems, vector_lanes);
    c.macs_useful = 3 * elems;
    c.macs_total = c.cycles * vector_lanes;
    const Bytes ds = dtype_size(dtype);
    c.sram_bytes_read = 3 * elems * ds;
    c.sram_bytes_written = elems * ds;
    return c;
}

TileCost reduce_cost(std::uint64_t elems, std::uint32_t vector_lanes, DType dtype) {
    TileCost c;
    if (elems == 0) return c;
    c.cycles = ceil_div(elems, vector_lanes);
    c.macs_useful = elems;
    c.macs_total = c.cycles * vector_lanes;
    const Bytes ds = dtype_size(dtype);
    c.sram_bytes_read = 2 * elems * ds;
    c.sram_bytes_written = elems * ds;
    return c;
}

TileCost TileCostModel::cost(const OpTile& tile, DType dtype) const {
    const Key key{tile.kind, tile.m,    tile.k,    tile.n, tile.elems,
                  tile.fused_inputs, tile.rows, tile.cols, dtype};
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = memo_.find(key);
        if (it != memo_.end()) {
            ++hits_;
            return it->second;
        }
    }
    TileCost c;
    switch (tile.kind) {
        case OpKind::MatMul: c = matmul_cost(tile.m, tile.k, tile.n, sa_width_, dtype); break;
        case OpKind::Elementwise: c = vector_cost(tile.elems, tile.fused_inputs, lanes_, dtype); break;
        case OpKind::Softmax: c = softmax_cost(tile.rows, tile.cols, lanes_, dtype); break;
        case OpKind::Reduce: c = reduce_cost(tile.elems, lanes_, dtype); break;
    }
    std::lock_guard<std::mutex> lock(mu_);
    ++misses_;
    memo_.emplace(key, c);
    return c;
}

}  // namespace voxel
