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
#include <string>
#include <vector>

#include "voxel/chipspec.hpp"
#include "voxel/common.hpp"
#include "voxel/tensor.hpp"

namespace voxel {

class ExecutionGraph;

/// Tile-to-core assignment. Tiles beyond num_cores wrap to the next wave;
/// assignments are injective within a wave.
struct CoreMap {
    std::vector<CoreId> core_of_tile;

    CoreId core(std::uint32_t tile) const { return core_of_tile.at(tile); }
    std::uint32_t wave_of(std::uint32_t tile, std::uint32_t num_cores) const {
        return tile / num_cores;
    }
};

/// Tiles that rotate or reduce over one shared tensor, in ring order.
struct SharingRing {
    std::vector<std::uint32_t> tiles;
};

/// Row-major assignment in tile index order.
CoreMap map_sequential(std::uint32_t num_tiles, const DerivedGeometry& geom);

/// Maps each sharing ring onto one grid row in folded order so consecutive
/// ring neighbors (including the wrap step) are at most 2 mesh hops apart;
/// rings longer than a row fold across adjacent rows. Tiles in no ring fill
/// remaining cores sequentially.
CoreMap map_dimension_ordered(std::uint32_t num_tiles, const std::vector<SharingRing>& rings,
                              const DerivedGeometry& geom);

/// Mesh hop distance between the cores of two tiles.
std::uint32_t map_hop_distance(const CoreMap& map, std::uint32_t tile_a, std::uint32_t tile_b,
                               const DerivedGeometry& geom, NocTopology topo);

enum class PlacementPolicy : std::uint8_t { Uniform, Interleaved, SoftwareAware };

PlacementPolicy placement_policy_from_name(const std::string& name);
const char* placement_policy_name(PlacementPolicy p);

struct PlacementPlan {
    // Parallel arrays: spans.at(i) belongs to tensor_ids.at(i).
    std::vector<TensorId> tensor_ids;
    std::vector<DramSpan> spans;
    // Sets of tensors deemed concurrently accessed (software-aware only).
    std::vector<std::vector<TensorId>> concurrency_groups;

    const DramSpan* find(TensorId id) const;
};

/// Splits every unplaced tensor evenly across all channels.
PlacementPlan place_uniform(const std::vector<TensorRegion>& tensors, const ChipSpec& spec);

/// Allocation-order round-robin over channel arcs sized by tensor bytes;
/// consecutively allocated tensors land on disjoint channel sets.
PlacementPlan place_interleaved(const std::vector<TensorRegion>& tensors, const ChipSpec& spec);

/// Builds concurrency groups from the execution graph (all tensors of one
/// operator are concurrent; a producer's output is concurrent with the
/// consumer's inputs), then colors tensors so same-group tensors occupy
/// disjoint channel sets.
PlacementPlan place_software_aware(const std::vector<TensorRegion>& tensors,
                                   const ExecutionGraph& graph, const ChipSpec& spec);

PlacementPlan place(PlacementPolicy policy, const std::vector<TensorRegion>& tensors,
                    const ExecutionGraph& graph, const ChipSpec& spec);

}  // namespace voxel
