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

#include "voxel/common.hpp"
#include "voxel/config.hpp"

namespace voxel {

enum class NocTopology : std::uint8_t { Mesh2D, Torus2D, AllToAll };

const char* noc_topology_name(NocTopology t);
NocTopology noc_topology_from_name(const std::string& name);

struct DramTiming {
    Cycles tCL = 14;
    Cycles tRCD = 14;
    Cycles tRP = 14;
    Cycles tRAS = 34;

    bool operator==(const DramTiming&) const = default;
};

/// Full hardware parameterization of one simulated chip. Immutable after
/// construction; share freely across simulation workers.
struct ChipSpec {
    std::uint32_t num_cores = 256;
    std::uint32_t sa_width = 32;           // systolic array is sa_width x sa_width MACs
    std::uint32_t vector_lanes = 64;
    Bytes sram_per_core = 2048ull * 1024;  // 2048 KB
    double core_freq_ghz = 1.6;
    NocTopology noc_topology = NocTopology::Mesh2D;
    std::uint32_t noc_link_bw = 32;        // bytes/cycle per link
    double dram_total_bw = 12e12;          // bytes/sec aggregate
    Bytes dram_capacity = 192ull << 30;    // 192 GB
    std::uint32_t dram_layers = 8;
    std::uint32_t banks_per_layer = 16;
    DramTiming dram_timing;
    Bytes dram_interface = 128;            // bytes per burst request
    std::uint32_t dram_queue_depth = 32;   // N, divergence window for coalescing
    std::uint32_t core_group_size = 8;
    double power_density_limit = 0.7;      // W/mm^2
    double dram_freq_ghz = 1.6;

    // Modeling knobs with datasheet-flavored defaults.
    Bytes dram_row_bytes = 1024;           // row-buffer bytes per bank
    std::uint32_t sram_read_bw = 64;       // bytes/cycle per core
    std::uint32_t sram_write_bw = 32;      // bytes/cycle per core
    Cycles noc_hop_latency = 1;            // cycles per hop
    double refresh_interval_us = 3.9;      // tREFI
    double refresh_duration_ns = 350.0;    // tRFC per bank group

    // Area calibration anchors: component totals for the 256-core / 32-wide /
    // 2048 KB reference configuration; area_of scales them linearly.
    double area_anchor_sa_mm2 = 260.0;
    double area_anchor_sram_mm2 = 433.0;
    double area_anchor_tsv_mm2 = 18.4;
    double area_anchor_other_mm2 = 91.2;

    bool operator==(const ChipSpec&) const = default;
};

/// Grid and channel quantities derived from a validated spec. One dedicated
/// TSV channel sits above each core; banks are distributed round-robin.
struct DerivedGeometry {
    std::uint32_t grid_rows = 0;
    std::uint32_t grid_cols = 0;
    std::uint32_t channel_count = 0;
    std::uint32_t banks_per_channel = 0;
    bool bank_split_warning = false;       // fewer physical banks than channels
    double per_channel_bytes_per_sec = 0;
    double per_channel_bytes_per_cycle = 0;
    Cycles burst_beats = 0;                // service cycles for one dram_interface request
    Bytes channel_capacity = 0;
    std::uint64_t rows_per_bank = 0;

    std::uint32_t core_row(CoreId c) const { return c / grid_cols; }
    std::uint32_t core_col(CoreId c) const { return c % grid_cols; }
    CoreId core_at(std::uint32_t row, std::uint32_t col) const { return row * grid_cols + col; }
};

struct RegionArea {
    double sa = 0;
    double sram = 0;
    double tsv = 0;
    double other = 0;
    double total() const { return sa + sram + tsv + other; }
};

/// Bottom-die area bookkeeping. Totals scale linearly with the counted units;
/// the per-region map assigns each grid coordinate its share.
struct AreaModel {
    double sa_area_total = 0;
    double sram_area_total = 0;
    double tsv_area_total = 0;
    double other_area = 0;
    std::vector<RegionArea> per_region;    // indexed by core id

    double total() const { return sa_area_total + sram_area_total + tsv_area_total + other_area; }
};

/// Parses and validates a chip config document; absent keys take defaults,
/// unknown keys are rejected. Throws ConfigError / ValidationError naming the
/// offending key or invariant.
ChipSpec load_spec(const ConfigDoc& doc);
ChipSpec load_spec_text(const std::string& text);
ChipSpec load_spec_file(const std::string& path, const std::vector<std::string>& overrides = {});

/// Renders a spec as a config document; load_spec(render(spec)) == spec.
std::string render_spec(const ChipSpec& spec);

/// Validates every spec invariant; throws ValidationError naming the failure.
void validate_spec(const ChipSpec& spec);

DerivedGeometry derive_geometry(const ChipSpec& spec);

AreaModel area_of(const ChipSpec& spec);

/// Stable content hash of the rendered spec (used for DSE caching and CSV).
std::uint64_t spec_hash(const ChipSpec& spec);

}  // namespace voxel
