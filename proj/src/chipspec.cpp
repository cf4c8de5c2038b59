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

#include "voxel/chipspec.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

namespace voxel {

const char* noc_topology_name(NocTopology t) {
    switch (t) {
        case NocTopology::Mesh2D: return "mesh";
        case NocTopology::Torus2D: return "torus";
        case NocTopology::AllToAll: return "all2all";
    }
    return "mesh";
}

NocTopology noc_topology_from_name(const std::string& name) {
    if (name == "mesh" || name == "mesh2d") return NocTopology::Mesh2D;
    if (name == "torus" || name == "torus2d") return NocTopology::Torus2D;
    if (name == "all2all" || name == "alltoall" || name == "all-to-all") return NocTopology::AllToAll;
    throw ConfigError("unknown NoC topology '" + name + "' (mesh|torus|all2all)");
}

namespace {

std::string fmt_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

DramTiming parse_timing(const std::string& text, const std::string& where) {
    DramTiming t;
    Cycles vals[4];
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
        std::size_t dash = text.find('-', pos);
        const std::string part =
            (i == 3) ? text.substr(pos)
                     : (dash == std::string::npos ? std::string() : text.substr(pos, dash - pos));
        if (part.empty()) throw ConfigError(where + ": expected tCL-tRCD-tRP-tRAS, got '" + text + "'");
        vals[i] = parse_count(part, where);
        pos = (dash == std::string::npos) ? text.size() : dash + 1;
    }
    t.tCL = vals[0];
    t.tRCD = vals[1];
    t.tRP = vals[2];
    t.tRAS = vals[3];
    return t;
}

std::string render_timing(const DramTiming& t) {
    std::ostringstream out;
    out << t.tCL << "-" << t.tRCD << "-" << t.tRP << "-" << t.tRAS;
    return out.str();
}

// Factor pair (r, c) with r*c == n, r <= c, minimizing c - r.
std::pair<std::uint32_t, std::uint32_t> nearest_factorization(std::uint32_t n) {
    std::uint32_t r = static_cast<std::uint32_t>(std::sqrt(static_cast<double>(n)));
    while (r >= 1 && n % r != 0) --r;
    return {r, n / r};
}

using Setter = std::function<void(ChipSpec&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const ChipSpec&)>;

struct KeyInfo {
    Setter set;
    Getter get;
};

const std::map<std::string, KeyInfo>& key_table() {
    static const std::map<std::string, KeyInfo> table = {
        {"num_cores",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.num_cores = static_cast<std::uint32_t>(parse_count(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.num_cores); }}},
        {"sa_width",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.sa_width = static_cast<std::uint32_t>(parse_count(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.sa_width); }}},
        {"vector_lanes",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.vector_lanes = static_cast<std::uint32_t>(parse_count(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.vector_lanes); }}},
        {"sram_per_core",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.sram_per_core = parse_bytes(v, w);
          },
          [](const ChipSpec& s) { return format_bytes(s.sram_per_core); }}},
        {"core_freq_ghz",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.core_freq_ghz = parse_ghz(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.core_freq_ghz); }}},
        {"noc_topology",
         {[](ChipSpec& s, const std::string& v, const std::string&) {
              s.noc_topology = noc_topology_from_name(v);
          },
          [](const ChipSpec& s) { return std::string(noc_topology_name(s.noc_topology)); }}},
        {"noc_link_bw",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.noc_link_bw = static_cast<std::uint32_t>(parse_bytes(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.noc_link_bw); }}},
        {"dram_total_bw",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.dram_total_bw = parse_bytes_per_sec(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.dram_total_bw); }}},
        {"dram_capacity",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.dram_capacity = parse_bytes(v, w);
          },
          [](const ChipSpec& s) { return format_bytes(s.dram_capacity); }}},
        {"dram_layers",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.dram_layers = static_cast<std::uint32_t>(parse_count(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.dram_layers); }}},
        {"banks_per_layer",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.banks_per_layer = static_cast<std::uint32_t>(parse_count(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.banks_per_layer); }}},
        {"dram_timing",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.dram_timing = parse_timing(v, w);
          },
          [](const ChipSpec& s) { return render_timing(s.dram_timing); }}},
        {"dram_interface",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.dram_interface = parse_bytes(v, w);
          },
          [](const ChipSpec& s) { return format_bytes(s.dram_interface); }}},
        {"dram_queue_depth",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.dram_queue_depth = static_cast<std::uint32_t>(parse_count(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.dram_queue_depth); }}},
        {"core_group_size",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.core_group_size = static_cast<std::uint32_t>(parse_count(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.core_group_size); }}},
        {"power_density_limit",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.power_density_limit = parse_real(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.power_density_limit); }}},
        {"dram_freq_ghz",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.dram_freq_ghz = parse_ghz(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.dram_freq_ghz); }}},
        {"dram_row_bytes",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.dram_row_bytes = parse_bytes(v, w);
          },
          [](const ChipSpec& s) { return format_bytes(s.dram_row_bytes); }}},
        {"sram_read_bw",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.sram_read_bw = static_cast<std::uint32_t>(parse_bytes(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.sram_read_bw); }}},
        {"sram_write_bw",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.sram_write_bw = static_cast<std::uint32_t>(parse_bytes(v, w));
          },
          [](const ChipSpec& s) { return std::to_string(s.sram_write_bw); }}},
        {"noc_hop_latency",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.noc_hop_latency = parse_count(v, w);
          },
          [](const ChipSpec& s) { return std::to_string(s.noc_hop_latency); }}},
        {"refresh_interval_us",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.refresh_interval_us = parse_real(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.refresh_interval_us); }}},
        {"refresh_duration_ns",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.refresh_duration_ns = parse_real(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.refresh_duration_ns); }}},
        {"area_anchor_sa_mm2",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.area_anchor_sa_mm2 = parse_real(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.area_anchor_sa_mm2); }}},
        {"area_anchor_sram_mm2",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.area_anchor_sram_mm2 = parse_real(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.area_anchor_sram_mm2); }}},
        {"area_anchor_tsv_mm2",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.area_anchor_tsv_mm2 = parse_real(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.area_anchor_tsv_mm2); }}},
        {"area_anchor_other_mm2",
         {[](ChipSpec& s, const std::string& v, const std::string& w) {
              s.area_anchor_other_mm2 = parse_real(v, w);
          },
          [](const ChipSpec& s) { return fmt_real(s.area_anchor_other_mm2); }}},
    };
    return table;
}

}  // namespace

ChipSpec load_spec(const ConfigDoc& doc) {
    ChipSpec spec;
    const auto& table = key_table();
    for (const auto& [key, value] : doc.entries()) {
        auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        it->second.set(spec, value, key);
    }
    validate_spec(spec);
    return spec;
}

ChipSpec load_spec_text(const std::string& text) { return load_spec(ConfigDoc::parse_text(text)); }

ChipSpec load_spec_file(const std::string& path, const std::vector<std::string>& overrides) {
    ConfigDoc doc = path.empty() ? ConfigDoc() : ConfigDoc::load_file(path);
    for (const auto& kv : overrides) doc.set_from_override(kv);
    return load_spec(doc);
}

std::string render_spec(const ChipSpec& spec) {
    std::ostringstream out;
    for (const auto& [key, info] : key_table()) out << key << ": " << info.get(spec) << "\n";
    return out.str();
}

void validate_spec(const ChipSpec& spec) {
    auto require = [](bool cond, const std::string& what) {
        if (!cond) throw ValidationError("spec invariant violated: " + what);
    };
    require(spec.num_cores >= 1, "num_cores >= 1");
    require(spec.sa_width >= 1 && is_pow2(spec.sa_width), "sa_width must be a power of two");
    require(spec.vector_lanes >= 1, "vector_lanes >= 1");
    require(spec.sram_per_core > 0, "sram_per_core > 0");
    require(spec.core_freq_ghz > 0, "core_freq_ghz > 0");
    require(spec.dram_freq_ghz > 0, "dram_freq_ghz > 0");
    require(spec.noc_link_bw >= 1, "noc_link_bw >= 1");
    require(spec.dram_total_bw > 0, "dram_total_bw > 0");
    require(spec.dram_capacity > 0, "dram_capacity > 0");
    require(spec.dram_layers >= 1, "dram_layers >= 1");
    require(spec.banks_per_layer >= 1, "banks_per_layer >= 1");
    require(spec.dram_interface >= 1, "dram_interface >= 1");
    require(spec.dram_queue_depth >= 1, "dram_queue_depth >= 1");
    require(spec.core_group_size >= 1, "core_group_size >= 1");
    require(spec.power_density_limit > 0, "power_density_limit > 0");
    require(spec.dram_timing.tCL >= 1 && spec.dram_timing.tRCD >= 1 && spec.dram_timing.tRP >= 1 &&
                spec.dram_timing.tRAS >= 1,
            "dram timing values >= 1");
    require(is_pow2(spec.dram_row_bytes), "dram_row_bytes must be a power of two");
    require(spec.dram_interface <= spec.dram_row_bytes, "dram_interface <= dram_row_bytes");
    require(spec.num_cores % spec.core_group_size == 0,
            "core_group_size must divide num_cores (" + std::to_string(spec.core_group_size) +
                " does not divide " + std::to_string(spec.num_cores) + ")");
    require(spec.noc_link_bw < spec.sram_read_bw,
            "noc_link_bw must be strictly lower than sram_read_bw");

    // Derived-quantity checks.
    const double per_channel = spec.dram_total_bw / spec.num_cores;
    require(per_channel > 0, "per-channel bandwidth > 0");
    const std::uint64_t banks_total =
        static_cast<std::uint64_t>(spec.dram_layers) * spec.banks_per_layer;
    std::uint64_t bpc = banks_total / spec.num_cores;
    if (bpc == 0) bpc = 1;
    require(is_pow2(bpc), "banks per channel must come out a power of two, got " +
                              std::to_string(bpc));
    require(spec.dram_capacity / spec.num_cores >= spec.dram_row_bytes * bpc,
            "channel capacity must hold at least one row per bank");

    // Grouped cores must tile the grid as contiguous rectangles.
    const auto [rows, cols] = nearest_factorization(spec.num_cores);
    bool group_fits = false;
    for (std::uint32_t gr = 1; gr <= spec.core_group_size; ++gr) {
        if (spec.core_group_size % gr != 0) continue;
        const std::uint32_t gc = spec.core_group_size / gr;
        if (gr <= rows && gc <= cols && rows % gr == 0 && cols % gc == 0) {
            group_fits = true;
            break;
        }
    }
    require(group_fits, "core_group_size " + std::to_string(spec.core_group_size) +
                            " cannot tile the " + std::to_string(rows) + "x" + std::to_string(cols) +
                            " core grid with adjacent rectangles");
}

DerivedGeometry derive_geometry(const ChipSpec& spec) {
    DerivedGeometry g;
    const auto [rows, cols] = nearest_factorization(spec.num_cores);
    g.grid_rows = rows;
    g.grid_cols = cols;
    g.channel_count = spec.num_cores;
    const std::uint64_t banks_total =
        static_cast<std::uint64_t>(spec.dram_layers) * spec.banks_per_layer;
    if (banks_total < g.channel_count) {
        g.banks_per_channel = 1;
        g.bank_split_warning = true;
    } else {
        g.banks_per_channel = static_cast<std::uint32_t>(banks_total / g.channel_count);
        g.bank_split_warning = (banks_total % g.channel_count) != 0;
    }
    g.per_channel_bytes_per_sec = spec.dram_total_bw / g.channel_count;
    g.per_channel_bytes_per_cycle = g.per_channel_bytes_per_sec / (spec.dram_freq_ghz * 1e9);
    g.burst_beats = static_cast<Cycles>(
        std::ceil(static_cast<double>(spec.dram_interface) / g.per_channel_bytes_per_cycle));
    if (g.burst_beats == 0) g.burst_beats = 1;
    g.channel_capacity = spec.dram_capacity / g.channel_count;
    g.rows_per_bank = g.channel_capacity / (static_cast<Bytes>(g.banks_per_channel) * spec.dram_row_bytes);
    return g;
}

AreaModel area_of(const ChipSpec& spec) {
    // Reference configuration behind the anchors: 256 cores, 32-wide SA,
    // 2048 KB SRAM per core, 256 channels.
    constexpr double kRefMacs = 256.0 * 32 * 32;
    constexpr double kRefSramBytes = 256.0 * 2048 * 1024;
    constexpr double kRefChannels = 256.0;
    constexpr double kRefCores = 256.0;

    const DerivedGeometry geom = derive_geometry(spec);
    AreaModel m;
    const double macs = static_cast<double>(spec.num_cores) * spec.sa_width * spec.sa_width;
    const double sram_bytes = static_cast<double>(spec.num_cores) * spec.sram_per_core;
    m.sa_area_total = spec.area_anchor_sa_mm2 * macs / kRefMacs;
    m.sram_area_total = spec.area_anchor_sram_mm2 * sram_bytes / kRefSramBytes;
    m.tsv_area_total = spec.area_anchor_tsv_mm2 * geom.channel_count / kRefChannels;
    m.other_area = spec.area_anchor_other_mm2 * spec.num_cores / kRefCores;

    m.per_region.resize(spec.num_cores);
    const double n = spec.num_cores;
    for (std::uint32_t c = 0; c < spec.num_cores; ++c) {
        m.per_region[c] = RegionArea{m.sa_area_total / n, m.sram_area_total / n,
                                     m.tsv_area_total / n, m.other_area / n};
    }
    return m;
}

std::uint64_t spec_hash(const ChipSpec& spec) {
    const std::string text = render_spec(spec);
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace voxel
