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

#include <random>

#include "doctest.h"
#include "voxel/core_model.hpp"

using namespace voxel;

TEST_CASE("32-cube tile on a 32-wide array: one fold, 94 cycles, full utilization") {
    const TileCost c = matmul_cost(32, 32, 32, 32);
    CHECK(c.cycles == 94);  // K + 2s - 2 = 32 + 62
    CHECK(c.spatial_utilization() == doctest::Approx(1.0));
    CHECK(c.macs_useful == 32ull * 32 * 32);
    CHECK(c.macs_total == c.macs_useful);
}

TEST_CASE("16-cube tile on a 32-wide array wastes three quarters of the MACs") {
    const TileCost c = matmul_cost(16, 16, 16, 32);
    CHECK(c.spatial_utilization() == doctest::Approx(0.25));
}

TEST_CASE("doubling the array width divides small-tile utilization by four") {
    const TileCost a = matmul_cost(16, 16, 16, 32);
    const TileCost b = matmul_cost(16, 16, 16, 64);
    CHECK(a.spatial_utilization() / b.spatial_utilization() == doctest::Approx(4.0));
}

TEST_CASE("matmul cost is monotone nondecreasing in each dimension") {
    std::mt19937 rng(3);
    for (int i = 0; i < 200; ++i) {
        const std::uint64_t m = 1 + rng() % 100, k = 1 + rng() % 100, n = 1 + rng() % 100;
        const std::uint32_t s = 1u << (rng() % 7);
        const Cycles base = matmul_cost(m, k, n, s).cycles;
        CHECK(matmul_cost(m + 1 + rng() % 20, k, n, s).cycles >= base);
        CHECK(matmul_cost(m, k + 1 + rng() % 20, n, s).cycles >= base);
        CHECK(matmul_cost(m, k, n + 1 + rng() % 20, s).cycles >= base);
    }
}

TEST_CASE("utilization is exactly 1 iff the array divides both M and N") {
    std::mt19937 rng(5);
    for (int i = 0; i < 200; ++i) {
        const std::uint64_t m = 1 + rng() % 128, k = 1 + rng() % 64, n = 1 + rng() % 128;
        const std::uint32_t s = 1u << (rng() % 6);
        const bool divides = (m % s == 0) && (n % s == 0);
        const bool full = matmul_cost(m, k, n, s).spatial_utilization() == 1.0;
        CHECK(divides == full);
    }
}

TEST_CASE("vector op of exactly one lane-width takes one cycle; empty takes none") {
    CHECK(vector_cost(64, 1, 64).cycles == 1);
    CHECK(vector_cost(0, 1, 64).cycles == 0);
    CHECK(vector_cost(65, 1, 64).cycles == 2);
}

TEST_CASE("softmax is three vector passes") {
    const std::uint64_t rows = 8, cols = 128;
    const TileCost c = softmax_cost(rows, cols, 64);
    CHECK(c.cycles == 3 * ceil_div(rows * cols, 64));
}

TEST_CASE("fused input count scales SRAM traffic, not cycles") {
    const TileCost one = vector_cost(1024, 1, 64);
    const TileCost three = vector_cost(1024, 3, 64);
    CHECK(one.cycles == three.cycles);
    CHECK(three.sram_bytes_read == 3 * one.sram_bytes_read);
}

TEST_CASE("memoized costs are identical for identical keys") {
    const ChipSpec spec = load_spec_text("");
    TileCostModel model(spec);
    OpTile t = OpTile::matmul(100, 200, 300, {0, 1}, 2);
    const TileCost a = model.cost(t);
    const TileCost b = model.cost(t);
    CHECK(a == b);
    CHECK(model.memo_hits() == 1);
    CHECK(model.memo_misses() == 1);
    // Same shapes through a different tile instance still hit.
    OpTile t2 = OpTile::matmul(100, 200, 300, {5, 6}, 7);
    CHECK(model.cost(t2) == a);
    CHECK(model.memo_hits() == 2);
}
