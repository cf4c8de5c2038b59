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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "voxel/engine.hpp"
#include "voxel/power_thermal.hpp"

using namespace voxel;

namespace {

ChipSpec spec16(double limit = 0.7) {
    ChipSpec s = load_spec_text("num_cores: 16\ncore_group_size: 4\n");
    s.power_density_limit = limit;
    return s;
}

}  // namespace

TEST_CASE("energy conservation identity holds exactly") {
    const ChipSpec spec = spec16();
    EnergyAccounting acc(spec, EnergyConstants{});
    acc.add_compute(OpKind::MatMul, matmul_cost(64, 64, 64, 32));
    acc.add_noc(4096, 3);
    acc.add_dram(8192);
    acc.add_sram(1024);
    const EnergyReport r = acc.finalize(100000);
    // Exact by construction: the total is defined as static plus dynamic.
    CHECK(r.total() == r.total_static() + r.total_dynamic());
    const double parts = r.sa.total() + r.vu.total() + r.sram.total() + r.noc.total() +
                         r.dram.total() + r.tsv.total();
    CHECK(r.total() == doctest::Approx(parts).epsilon(1e-12));
    CHECK(r.total_static() > 0);
    CHECK(r.total_dynamic() > 0);
}

TEST_CASE("a zero-activity interval has zero dynamic but positive static energy") {
    const ChipSpec spec = spec16();
    EnergyAccounting acc(spec, EnergyConstants{});
    const EnergyReport r = acc.finalize(12345);
    CHECK(r.total_dynamic() == 0.0);
    CHECK(r.total_static() > 0.0);
}

TEST_CASE("static energy is proportional to elapsed cycles") {
    const ChipSpec spec = spec16();
    EnergyAccounting acc(spec, EnergyConstants{});
    const double e1 = acc.finalize(1000).total_static();
    const double e3 = acc.finalize(3000).total_static();
    CHECK(e3 == doctest::Approx(3.0 * e1));
}

TEST_CASE("doubling transfer bytes doubles NoC dynamic energy") {
    const EnergyConstants k;
    CHECK(noc_dynamic_energy(2048, 5, k) == doctest::Approx(2.0 * noc_dynamic_energy(1024, 5, k)));
}

TEST_CASE("density at exactly the limit is not throttled") {
    const ChipSpec spec = spec16(0.7);
    PowerDensityModel m(spec, EnergyConstants{});
    const double headroom = 0.7 * m.region_area_mm2() - m.region_static_w();
    CHECK(m.compute_scale(headroom, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("density at twice the limit halves the frequency") {
    ChipSpec spec = spec16(0.7);
    EnergyConstants k;
    k.static_w_per_mm2_sa = k.static_w_per_mm2_sram = k.static_w_per_mm2_tsv =
        k.static_w_per_mm2_other = 0;
    k.dram_static_w_per_gb = 0;
    PowerDensityModel m(spec, k);
    const double limit_w = 0.7 * m.region_area_mm2();
    CHECK(m.compute_scale(2.0 * limit_w, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("non-compute power below the limit triggers no throttling") {
    ChipSpec spec = spec16(0.7);
    EnergyConstants k;
    k.static_w_per_mm2_sa = k.static_w_per_mm2_sram = k.static_w_per_mm2_tsv =
        k.static_w_per_mm2_other = 0;
    k.dram_static_w_per_gb = 0;
    PowerDensityModel m(spec, k);
    const double limit_w = 0.7 * m.region_area_mm2();
    CHECK(m.compute_scale(0.0, 0.5 * limit_w) == doctest::Approx(1.0));
}

TEST_CASE("static power alone above the limit is an unthrottleable configuration") {
    ChipSpec spec = spec16(1e-6);
    CHECK_THROWS_AS(PowerDensityModel(spec, EnergyConstants{}), ValidationError);
}

TEST_CASE("infinite limit leaves the simulation bit-identical to a permissive one") {
    ChipSpec spec = spec16(0.7);
    auto run_with = [&](double limit) {
        ChipSpec s = spec;
        s.power_density_limit = limit;
        PlanBuilder b(s);
        for (int i = 0; i < 4; ++i) {
            const TensorId in = b.add_sram_tensor(DType::BF16, {128, 128}, i);
            const TensorId out = b.add_sram_tensor(DType::BF16, {128, 128}, i);
            b.compute(OpTile::matmul(128, 128, 128, {in}, out), static_cast<CoreId>(i));
        }
        const ExecutionGraph g = b.finalize();
        SimOptions opts;
        opts.refresh = false;
        return simulate(g, PlacementPlan{}, s, opts).digest();
    };
    const std::string inf = run_with(std::numeric_limits<double>::infinity());
    const std::string high = run_with(1e9);
    CHECK(inf == high);
}

TEST_CASE("forcing density to twice the limit exactly doubles compute durations") {
    // Constants chosen so one compute's dynamic power is exactly twice the
    // regional cap while static power is zero.
    ChipSpec spec = spec16();
    EnergyConstants k;
    k.static_w_per_mm2_sa = k.static_w_per_mm2_sram = k.static_w_per_mm2_tsv =
        k.static_w_per_mm2_other = 0;
    k.dram_static_w_per_gb = 0;
    k.sram_pj_per_byte = 0;  // isolate the MAC term

    const TileCost cost = matmul_cost(128, 128, 128, spec.sa_width);
    const double seconds = static_cast<double>(cost.cycles) / (spec.core_freq_ghz * 1e9);
    const double area = area_of(spec).total() / spec.num_cores;
    const double target_w = 2.0 * 0.7 * area;
    k.mac_pj = target_w * seconds / (static_cast<double>(cost.macs_total) * 1e-12);

    auto run = [&](double limit) {
        ChipSpec s = spec;
        s.power_density_limit = limit;
        PlanBuilder b(s);
        const TensorId in = b.add_sram_tensor(DType::BF16, {128, 128}, 0);
        const TensorId out = b.add_sram_tensor(DType::BF16, {128, 128}, 0);
        b.compute(OpTile::matmul(128, 128, 128, {in}, out), CoreId{0});
        const ExecutionGraph g = b.finalize();
        SimOptions opts;
        opts.refresh = false;
        opts.energy = k;
        return simulate(g, PlacementPlan{}, s, opts).total_cycles;
    };
    const Cycles unthrottled = run(std::numeric_limits<double>::infinity());
    const Cycles throttled = run(0.7);
    CHECK(unthrottled == cost.cycles);
    CHECK(throttled == 2 * cost.cycles);
}

TEST_CASE("energy constants round-trip through the config document") {
    EnergyConstants k;
    k.mac_pj = 0.75;
    k.dram_pj_per_byte = 3.5;
    const EnergyConstants back = EnergyConstants::from_doc(ConfigDoc::parse_text(k.render()));
    CHECK(back.mac_pj == doctest::Approx(0.75));
    CHECK(back.dram_pj_per_byte == doctest::Approx(3.5));
}
