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
#include "voxel/graph.hpp"
#include "voxel/workloads.hpp"

namespace voxel {

enum class Paradigm : std::uint8_t { Spmd, Dataflow, ComputeShift };

Paradigm paradigm_from_name(const std::string& name);
const char* paradigm_name(Paradigm p);

struct PlanOptions {
    Paradigm paradigm = Paradigm::ComputeShift;
    TileMapPolicy tile_map = TileMapPolicy::DimensionOrdered;
    std::uint32_t microbatches = 4;     // dataflow
    std::uint32_t dataflow_stages = 4;  // operator pipeline depth
    std::uint64_t seed = 0;             // reserved for randomized tie-breaks
};

struct BuiltPlan {
    ExecutionGraph graph;
    std::vector<std::string> warnings;
    std::uint64_t compute_events = 0;
    std::uint64_t move_events = 0;
    std::uint64_t allreduce_ops = 0;   // reduction collectives emitted
    Bytes weight_bytes_read = 0;       // persistent bytes streamed, one fetch per (core, slice)
};

/// Partitions every operator across all cores along weight dimensions;
/// K-splits produce partial results combined by ring AllReduce behind a
/// barrier (compute and reduction do not overlap).
BuiltPlan plan_spmd(const std::vector<OperatorDesc>& ops, const ChipSpec& spec,
                    const PlanOptions& opts);

/// Pipelines consecutive operator groups on disjoint core subsets with
/// microbatched streaming; the next stage's weights prefetch during the
/// current stage's compute.
BuiltPlan plan_dataflow(const std::vector<OperatorDesc>& ops, const ChipSpec& spec,
                        const PlanOptions& opts);

/// Circular dataflow: weight shards rotate around row rings between compute
/// steps; shared tensors are never duplicated and no reduction barriers are
/// emitted for MatMul K dims.
BuiltPlan plan_compute_shift(const std::vector<OperatorDesc>& ops, const ChipSpec& spec,
                             const PlanOptions& opts);

BuiltPlan build_plan(const std::vector<OperatorDesc>& ops, const ChipSpec& spec,
                     const PlanOptions& opts);

}  // namespace voxel
