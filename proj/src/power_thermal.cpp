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

#include "voxel/power_thermal.hpp"

#include <sstream>

namespace voxel {

EnergyConstants EnergyConstants::from_doc(const ConfigDoc& doc) {
    EnergyConstants k;
    for (const auto& [key, value] : doc.entries()) {
        if (key == "mac_pj") k.mac_pj = parse_real(value, key);
        else if (key == "sram_pj_per_byte") k.sram_pj_per_byte = parse_real(value, key);
        else if (key == "noc_pj_per_byte_hop") k.noc_pj_per_byte_hop = parse_real(value, key);
        else if (key == "dram_pj_per_byte") k.dram_pj_per_byte = parse_real(value, key);
        else if (key == "tsv_pj_per_byte") k.tsv_pj_per_byte = parse_real(value, key);
        else if (key == "static_w_per_mm2_sa") k.static_w_per_mm2_sa = parse_real(value, key);
        else if (key == "static_w_per_mm2_sram") k.static_w_per_mm2_sram = parse_real(value, key);
        else if (key == "static_w_per_mm2_tsv") k.static_w_per_mm2_tsv = parse_real(value, key);
        else if (key == "static_w_per_mm2_other") k.static_w_per_mm2_other = parse_real(value, key);
        else if (key == "dram_static_w_per_gb") k.dram_static_w_per_gb = parse_real(value, key);
        else throw ConfigError("unknown energy constant '" + key + "'");
    }
    return k;
}

EnergyConstants EnergyConstants::load_file(const std::string& path) {
    return from_doc(ConfigDoc::load_file(path));
}

std::string EnergyConstants::render() const {
    std::ostringstream out;
    out << "mac_pj: " << mac_pj << "\n";
    out << "sram_pj_per_byte: " << sram_pj_per_byte << "\n";
    out << "noc_pj_per_byte_hop: " << noc_pj_per_byte_hop << "\n";
    out << "dram_pj_per_byte: " << dram_pj_per_byte << "\n";
    out << "tsv_pj_per_byte: " << tsv_pj_per_byte << "\n";
    out << "static_w_per_mm2_sa: " << static_w_per_mm2_sa << "\n";
    out << "static_w_per_mm2_sram: " << static_w_per_mm2_sram << "\n";
    out << "static_w_per_mm2_tsv: " << static_w_per_mm2_tsv << "\n";
    out << "static_w_per_mm2_other: " << static_w_per_mm2_other << "\n";
    out << "dram_static_w_per_gb: " << dram_static_w_per_gb << "\n";
    return out.str();
}

double compute_dynamic_energy(OpKind kind, const TileCost& cost, const EnergyConstants& k) {
    (void)kind;
    const double mac_j = static_cast<double>(cost.macs_total) * k.mac_pj * 1e-12;
    const double sram_j = static_cast<double>(cost.sram_bytes_read + cost.sram_bytes_written) *
                          k.sram_pj_per_byte * 1e-12;
    return mac_j + sram_j;
}

EnergyAccounting::EnergyAccounting(const ChipSpec& spec, const EnergyConstants& k)
    : k_(k), spec_(spec) {
    const AreaModel area = area_of(spec);
    static_w_sa_ = area.sa_area_total * k.static_w_per_mm2_sa;
    static_w_sram_ = area.sram_area_total * k.static_w_per_mm2_sram;
    static_w_tsv_ = area.tsv_area_total * k.static_w_per_mm2_tsv;
    static_w_other_ = area.other_area * k.static_w_per_mm2_other;
    static_w_dram_ =
        static_cast<double>(spec.dram_capacity) / (1024.0 * 1024 * 1024) * k.dram_static_w_per_gb;
    static_w_total_ =
        static_w_sa_ + static_w_sram_ + static_w_tsv_ + static_w_other_ + static_w_dram_;
}

void EnergyAccounting::add_compute(OpKind kind, const TileCost& cost) {
    const double mac_j = static_cast<double>(cost.macs_total) * k_.mac_pj * 1e-12;
    const double sram_j = static_cast<double>(cost.sram_bytes_read + cost.sram_bytes_written) *
                          k_.sram_pj_per_byte * 1e-12;
    if (kind == OpKind::MatMul) {
        dyn_.sa.dynamic_j += mac_j;
    } else {
        dyn_.vu.dynamic_j += mac_j;
    }
    dyn_.sram.dynamic_j += sram_j;
}

void EnergyAccounting::add_noc(Bytes bytes, std::uint32_t hops) {
    dyn_.noc.dynamic_j += noc_dynamic_energy(bytes, hops, k_);
}

void EnergyAccounting::add_dram(Bytes bytes) {
    dyn_.dram.dynamic_j += static_cast<double>(bytes) * k_.dram_pj_per_byte * 1e-12;
    dyn_.tsv.dynamic_j += static_cast<double>(bytes) * k_.tsv_pj_per_byte * 1e-12;
}

void EnergyAccounting::add_sram(Bytes bytes) {
    dyn_.sram.dynamic_j += static_cast<double>(bytes) * k_.sram_pj_per_byte * 1e-12;
}

EnergyReport EnergyAccounting::finalize(Cycles total_cycles) const {
    EnergyReport r = dyn_;
    const double seconds = static_cast<double>(total_cycles) / (spec_.core_freq_ghz * 1e9);
    r.sa.static_j = static_w_sa_ * seconds;
    r.sram.static_j = static_w_sram_ * seconds;
    r.tsv.static_j = static_w_tsv_ * seconds;
    // VU and NoC static power folded into the "other" die area.
    r.vu.static_j = static_w_other_ * seconds * 0.5;
    r.noc.static_j = static_w_other_ * seconds * 0.5;
    r.dram.static_j = static_w_dram_ * seconds;
    return r;
}

PowerDensityModel::PowerDensityModel(const ChipSpec& spec, const EnergyConstants& k)
    : limit_(spec.power_density_limit) {
    EnergyAccounting acc(spec, k);
    const AreaModel area = area_of(spec);
    region_area_ = area.total() / spec.num_cores;
    region_static_w_ = acc.static_watts() / spec.num_cores;
    if (std::isfinite(limit_) && region_static_w_ / region_area_ > limit_) {
        throw ValidationError("unthrottleable configuration: static power density " +
                              std::to_string(region_static_w_ / region_area_) +
                              " W/mm2 exceeds the limit " + std::to_string(limit_));
    }
}

double PowerDensityModel::compute_scale(double compute_w, double other_w) const {
    if (!std::isfinite(limit_) || compute_w <= 0) return 1.0;
    const double density = (region_static_w_ + other_w + compute_w) / region_area_;
    if (density <= limit_) return 1.0;
    const double headroom = limit_ * region_area_ - region_static_w_ - other_w;
    if (headroom <= 0) {
        throw ValidationError(
            "unthrottleable configuration: static plus non-compute power already exceeds the "
            "density limit in a region");
    }
    return headroom / compute_w;
}

}  // namespace voxel
