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

#include <cmath>
#include <string>

#include "voxel/chipspec.hpp"
#include "voxel/common.hpp"
#include "voxel/config.hpp"
#include "voxel/core_model.hpp"

namespace voxel {

/// Per-unit energy constants. Editable as a flat config file; defaults are
/// order-of-magnitude values and every acceptance check on energy is
/// directional or identity-based, never absolute joules.
struct EnergyConstants {
    double mac_pj = 0.5;              // per MAC (SA and VU alike)
    double sram_pj_per_byte = 1.0;
    double noc_pj_per_byte_hop = 0.8;
    double dram_pj_per_byte = 4.0;
    double tsv_pj_per_byte = 0.4;
    // Static power per bottom-die mm^2 per component class, calibrated so the
    // reference chip idles near 15% of a 500 W envelope.
    double static_w_per_mm2_sa = 0.0815;
    double static_w_per_mm2_sram = 0.0815;
    double static_w_per_mm2_tsv = 0.0815;
    double static_w_per_mm2_other = 0.0815;
    double dram_static_w_per_gb = 0.05;

    static EnergyConstants from_doc(const ConfigDoc& doc);
    static EnergyConstants load_file(const std::string& path);
    std::string render() const;
};

struct ComponentEnergy {
    double static_j = 0;
    double dynamic_j = 0;
    double total() const { return static_j + dynamic_j; }
};

struct EnergyReport {
    ComponentEnergy sa, vu, sram, noc, dram, tsv;

    double total_static() const {
        return sa.static_j + vu.static_j + sram.static_j + noc.static_j + dram.static_j +
               tsv.static_j;
    }
    double total_dynamic() const {
        return sa.dynamic_j + vu.dynamic_j + sram.dynamic_j + noc.dynamic_j + dram.dynamic_j +
               tsv.dynamic_j;
    }
    double total() const { return total_static() + total_dynamic(); }
};

/// Dynamic energy of one compute tile (SA or VU MACs plus SRAM traffic), in
/// joules.
double compute_dynamic_energy(OpKind kind, const TileCost& cost, const EnergyConstants& k);

/// Dynamic energy of moving `bytes` over `hops` NoC links.
inline double noc_dynamic_energy(Bytes bytes, std::uint32_t hops, const EnergyConstants& k) {
    return static_cast<double>(bytes) * hops * k.noc_pj_per_byte_hop * 1e-12;
}

/// Dynamic energy of one DRAM access of `bytes` (cell access plus TSV hop).
inline double dram_dynamic_energy(Bytes bytes, const EnergyConstants& k) {
    return static_cast<double>(bytes) * (k.dram_pj_per_byte + k.tsv_pj_per_byte) * 1e-12;
}

/// Energy accumulator owned by the engine loop.
class EnergyAccounting {
public:
    EnergyAccounting(const ChipSpec& spec, const EnergyConstants& k);

    void add_compute(OpKind kind, const TileCost& cost);
    void add_noc(Bytes bytes, std::uint32_t hops);
    void add_dram(Bytes bytes);
    void add_sram(Bytes bytes);

    /// Fills static energy from the elapsed virtual time and returns the
    /// report; total == static + dynamic holds exactly by construction.
    EnergyReport finalize(Cycles total_cycles) const;

    /// Total static power of the chip in watts.
    double static_watts() const { return static_w_total_; }

private:
    EnergyConstants k_;
    ChipSpec spec_;
    double static_w_sa_ = 0, static_w_sram_ = 0, static_w_tsv_ = 0, static_w_other_ = 0,
           static_w_dram_ = 0, static_w_total_ = 0;
    EnergyReport dyn_;
};

/// Power-density throttling for one core-plus-stacked-DRAM region.
/// Frequency scale for a compute event whose unthrottled dynamic power would
/// be `compute_w` while `other_w` of non-compute power is concurrently
/// dissipated in the region. Returns 1 when within the limit.
class PowerDensityModel {
public:
    PowerDensityModel(const ChipSpec& spec, const EnergyConstants& k);

    double region_area_mm2() const { return region_area_; }
    double region_static_w() const { return region_static_w_; }
    bool unlimited() const { return !std::isfinite(limit_); }

    double compute_scale(double compute_w, double other_w) const;
    /// Density of the region under the given extra power (for reporting).
    double density(double extra_w) const { return (region_static_w_ + extra_w) / region_area_; }

private:
    double limit_;
    double region_area_;
    double region_static_w_;
};

}  // namespace voxel
