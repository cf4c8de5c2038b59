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
#include "voxel/mapping.hpp"
#include "voxel/power_thermal.hpp"

namespace voxel {

struct SimOptions {
    EnergyConstants energy;
    bool refresh = true;
    bool tracker = true;            // core-group request tracker (group size > 1)
    bool record_timeline = false;   // keep per-event timings in the report
};

struct CategoryCycles {
    Cycles compute = 0;
    Cycles noc = 0;
    Cycles dram_access = 0;
    Cycles row_conflict_stall = 0;  // portion of dram_access lost to conflicts
    Cycles sync_wait = 0;

    Cycles sum() const { return compute + noc + dram_access + sync_wait; }
};

struct TimelineEntry {
    EventId event = kNoEvent;
    std::uint8_t kind = 0;  // EventKind
    CoreId core = 0;
    Cycles start = 0;
    Cycles finish = 0;
};

struct SimReport {
    Cycles total_cycles = 0;
    CategoryCycles critical_path;   // sums to total_cycles

    // Aggregate activity counters.
    Cycles compute_busy = 0;
    Cycles noc_busy = 0;
    Cycles dram_busy = 0;
    Cycles row_conflict_stall = 0;  // summed over every request
    Cycles sync_wait = 0;

    std::uint64_t dram_requests = 0;
    std::uint64_t dram_row_hits = 0;
    std::uint64_t dram_row_conflicts = 0;
    std::uint64_t events_processed = 0;
    std::uint64_t fetch_flows = 0;
    std::uint64_t tracker_max_spread = 0;
    std::uint64_t tracker_disabled_cohorts = 0;

    double avg_core_utilization = 0;
    double avg_channel_utilization = 0;
    double spatial_utilization = 0;  // MAC-weighted over matmul tiles

    EnergyReport energy;
    std::vector<std::string> warnings;
    std::vector<TimelineEntry> timeline;  // when record_timeline

    std::string to_text() const;
    /// Fixed-format digest used by determinism checks.
    std::string digest() const;
};

/// Event-driven simulation of a sealed graph under the given placement.
/// Deterministic: identical inputs produce identical reports.
SimReport simulate(const ExecutionGraph& graph, const PlacementPlan& placement,
                   const ChipSpec& spec, const SimOptions& opts = {});

}  // namespace voxel
