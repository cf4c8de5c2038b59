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
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "voxel/chipspec.hpp"
#include "voxel/common.hpp"
#include "voxel/tensor.hpp"

namespace voxel {

enum class OpKind : std::uint8_t { MatMul, Elementwise, Softmax, Reduce };

const char* op_kind_name(OpKind k);

/// A partitioned tile of a tensor operator, as handed over by the planner.
struct OpTile {
    OpKind kind = OpKind::MatMul;
    std::uint64_t m = 0, k = 0, n = 0;      // MatMul
    std::uint64_t elems = 0;                // Elementwise / Reduce element count
    std::uint32_t fused_inputs = 1;         // concurrently-read input streams
    std::uint64_t rows = 0, cols = 0;       // Softmax
    std::vector<TensorId> inputs;
    TensorId output = kNoTensor;

    static OpTile matmul(std::uint64_t m, std::uint64_t k, std::uint64_t n,
                         std::vector<TensorId> inputs, TensorId output);
    static OpTile elementwise(std::uint64_t elems, std::uint32_t fused,
                              std::vector<TensorId> inputs, TensorId output);
    static OpTile softmax(std::uint64_t rows, std::uint64_t cols, std::vector<TensorId> inputs,
                          TensorId output);
    static OpTile reduce(std::uint64_t elems, std::vector<TensorId> inputs, TensorId output);
};

enum class EventKind : std::uint8_t { Compute, MoveData, Sync };

inline constexpr std::uint32_t kNoWave = 0xffffffffu;

struct Event {
    EventId id = kNoEvent;
    EventKind kind = EventKind::Compute;
    // Compute
    OpTile tile;
    CoreId core = 0;
    std::uint32_t wave = kNoWave;  // operator-wave tag for core-group request tracking
    // MoveData (src == kNoTensor means initial placement)
    TensorId src = kNoTensor;
    TensorId dst = kNoTensor;
    std::vector<EventId> deps;
};

enum class CollectiveKind : std::uint8_t { AllReduce, AllGather, Broadcast, ReduceScatter };

const char* collective_kind_name(CollectiveKind k);

class ExecutionGraph {
public:
    std::vector<Event> events;
    std::vector<TensorRegion> tensors;

    const Event& event(EventId id) const { return events.at(id); }
    const TensorRegion& tensor(TensorId id) const { return tensors.at(id); }
    TensorRegion& tensor(TensorId id) { return tensors.at(id); }

    /// Events reading each tensor as a compute input or move source
    /// (computed at finalize; used for residency refcounts).
    const std::vector<std::vector<EventId>>& readers() const { return readers_; }
    /// Last event writing each tensor, or kNoEvent.
    const std::vector<EventId>& writer() const { return writer_; }

    std::string serialize() const;
    static ExecutionGraph deserialize(const std::string& text);

    /// Validates DAG-ness (reporting one offending cycle) and tensor refs,
    /// then freezes reader/writer indices.
    void seal();

private:
    std::vector<std::vector<EventId>> readers_;
    std::vector<EventId> writer_;
};

enum class TileMapPolicy : std::uint8_t { Sequential, DimensionOrdered };

TileMapPolicy tile_map_policy_from_name(const std::string& name);
const char* tile_map_policy_name(TileMapPolicy p);

/// Single-writer builder for execution graphs. Events reference tensors
/// registered through the builder; dependencies on data producers are wired
/// automatically.
class PlanBuilder {
public:
    PlanBuilder(const ChipSpec& spec, TileMapPolicy policy = TileMapPolicy::Sequential);

    /// Registers a tensor part. Pass a location to pin it; default is
    /// unplaced (a placement policy assigns the DRAM span later).
    TensorId add_tensor(DType dtype, std::vector<std::uint64_t> shape, Location loc = {});
    TensorId add_sram_tensor(DType dtype, std::vector<std::uint64_t> shape, CoreId core,
                             std::optional<Bytes> offset = {});
    /// Contiguous byte window into a DRAM-destined tensor; resolves to a
    /// slice of the parent's placed span.
    TensorId add_view(TensorId parent, Bytes byte_offset, std::vector<std::uint64_t> shape,
                      DType dtype);

    const TensorRegion& tensor(TensorId id) const;

    /// Appends a Compute node. With no core given, the active tile-to-core
    /// policy assigns one at finalize() based on input sharing.
    EventId compute(OpTile tile, std::optional<CoreId> core = {},
                    std::span<const EventId> after = {});

    /// Appends a MoveData node; src == nullopt is an initial placement
    /// (zero-cost residency at time 0).
    EventId movedata(std::optional<TensorId> src, TensorId dst,
                     std::span<const EventId> after = {});

    /// Barrier over the given events.
    EventId sync(std::span<const EventId> participants);

    /// Ring-algorithm collective over per-core regions; `cores[i]` owns
    /// `regions[i]` and the vectors are taken in ring order. Events in
    /// `after` act as a barrier before the first ring step.
    std::vector<EventId> collective(CollectiveKind kind, std::span<const TensorId> regions,
                                    std::span<const CoreId> cores,
                                    std::span<const EventId> after = {});

    /// Adds an explicit dependency edge (used by replay/deserialization and
    /// for ordering constraints beyond data deps).
    void add_dep(EventId event, EventId dep);

    /// Tags all Compute events of the current operator wave; see engine
    /// core-group tracking.
    void begin_wave();

    ExecutionGraph finalize();

    std::uint32_t current_wave() const { return wave_; }

private:
    EventId append(Event ev);
    void auto_assign_cores();

    ChipSpec spec_;
    DerivedGeometry geom_;
    TileMapPolicy policy_;
    ExecutionGraph graph_;
    std::vector<EventId> writer_;           // tensor -> last writer
    std::vector<EventId> pending_auto_;     // computes awaiting core assignment
    std::uint32_t wave_ = 0;
    bool finalized_ = false;
};

/// Folded ring order of `n` positions (0,2,4,...,5,3,1) so that consecutive
/// ring neighbors sit at most two positions apart, including the wrap step.
std::vector<std::uint32_t> folded_ring_order(std::uint32_t n);

}  // namespace voxel
