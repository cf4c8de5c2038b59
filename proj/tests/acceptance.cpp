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

// Acceptance suite: one test case per criterion, each ending with a PASS/FAIL
// line. Workload sizes are desk scale; every tolerance is pinned in code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "voxel/dram_model.hpp"
#include "voxel/dse.hpp"
#include "voxel/engine.hpp"
#include "voxel/paradigms.hpp"
#include "voxel/workloads.hpp"

using namespace voxel;

namespace {

struct Verdict {
    int criterion;
    bool pass;
    std::string detail;
    ~Verdict() {
        std::printf("[ACCEPT %2d] %s: %s\n", criterion, pass ? "PASS" : "FAIL", detail.c_str());
        std::fflush(stdout);
    }
};

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

ChannelParams accept_params() {
    ChannelParams p;
    p.timing = DramTiming{14, 14, 14, 34};  // Table defaults
    p.burst_beats = 1;
    p.num_banks = 1;
    p.row_bytes = 1024;
    p.interface = 128;
    return p;
}

MemoryRequest rq(Addr a, Cycles t, MemOp op = MemOp::Read, EventId e = 0) {
    return MemoryRequest{a, op, t, e};
}

// Layered trace: `layers` repetitions of one block pattern, optional rare
// divergence.
std::vector<MemoryRequest> layered_trace(std::mt19937& rng, std::size_t block,
                                         std::size_t layers, const ChannelParams& p,
                                         double divergence_rate) {
    std::vector<std::pair<Addr, MemOp>> pattern;
    std::vector<Cycles> gaps;
    Addr a = 0;
    for (std::size_t i = 0; i < block; ++i) {
        a += (rng() % 8 == 0) ? p.row_bytes * (1 + rng() % 3) : p.interface;
        pattern.emplace_back(a, rng() % 4 == 0 ? MemOp::Write : MemOp::Read);
        gaps.push_back(2 + rng() % 4);
    }
    std::vector<MemoryRequest> trace;
    Cycles t = 0;
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t i = 0; i < block; ++i) {
            Addr addr = pattern[i].first;
            if (u(rng) < divergence_rate) addr += p.row_bytes * (1 + rng() % 3);
            t += gaps[i];
            trace.push_back(rq(addr, t, pattern[i].second,
                               static_cast<EventId>(trace.size())));
        }
    }
    return trace;
}

ModelSpec midi_model() {
    ModelSpec m;
    m.name = "midi";
    m.num_layers = 2;
    m.hidden_dim = 2048;
    m.num_heads = 16;
    m.kv_heads = 16;
    m.ffn_dim = 8192;
    m.vocab_size = 32000;
    m.gated_ffn = true;
    return m;
}

struct RunOut {
    SimReport report;
    BuiltPlan plan;
};

RunOut run_model(const ChipSpec& spec, const ModelSpec& model, const PhaseSpec& phase,
                 Paradigm paradigm, PlacementPolicy placement,
                 TileMapPolicy tile_map = TileMapPolicy::DimensionOrdered, bool tracker = true,
                 bool refresh = false) {
    const auto ops = expand(model, phase);
    PlanOptions popts;
    popts.paradigm = paradigm;
    popts.tile_map = tile_map;
    popts.dataflow_stages = std::min<std::uint32_t>(4, static_cast<std::uint32_t>(ops.size()));
    RunOut out;
    out.plan = build_plan(ops, spec, popts);
    const PlacementPlan pl = place(placement, out.plan.graph.tensors, out.plan.graph, spec);
    SimOptions sopts;
    sopts.refresh = refresh;
    sopts.tracker = tracker;
    out.report = simulate(out.plan.graph, pl, spec, sopts);
    // Criterion 9's identity must hold in every run.
    REQUIRE(out.report.energy.total() ==
            out.report.energy.total_static() + out.report.energy.total_dynamic());
    return out;
}

// Two-tensor streaming microbenchmark: every core streams chunk reads of A
// while writing its results into B, so input prefetch and output write-back
// target DRAM concurrently (the classic row-conflict pattern).
struct StreamOut {
    SimReport report;
};

StreamOut streaming_microbench(const ChipSpec& spec, PlacementPolicy policy,
                               std::uint32_t chunks_per_core = 24,
                               Bytes chunk_bytes = 64 * 1024) {
    PlanBuilder b(spec);
    // Half the cores stream so that a two-way channel split can still give
    // every active stream a bank of its own.
    const std::uint32_t C = spec.num_cores / 2;
    const TensorId ta = b.add_tensor(DType::BF16, {Bytes(C) * chunks_per_core * chunk_bytes / 2});
    const TensorId tb = b.add_tensor(DType::BF16, {Bytes(C) * chunks_per_core * chunk_bytes / 2});
    b.movedata(std::nullopt, ta);
    b.begin_wave();
    for (std::uint32_t c = 0; c < C; ++c) {
        for (std::uint32_t i = 0; i < chunks_per_core; ++i) {
            const Bytes off = (Bytes(c) * chunks_per_core + i) * chunk_bytes;
            const TensorId va = b.add_view(ta, off, {chunk_bytes / 2}, DType::BF16);
            const TensorId vout = b.add_view(tb, off, {chunk_bytes / 2}, DType::BF16);
            b.compute(OpTile::elementwise(chunk_bytes / 2, 1, {va}, vout), c);
        }
    }
    const ExecutionGraph g = b.finalize();
    const PlacementPlan pl = place(policy, g.tensors, g, spec);
    SimOptions sopts;
    sopts.refresh = false;
    StreamOut out;
    out.report = simulate(g, pl, spec, sopts);
    return out;
}

}  // namespace

TEST_CASE("criterion 1: coalescing-cache exactness, speedup, and hit rate") {
    const auto t0 = std::chrono::steady_clock::now();
    const ChannelParams p = accept_params();
    std::mt19937 rng(2026);
    bool exact = true;
    std::size_t traces_checked = 0;

    // 1000 randomized traces, >= 1e4 requests each, mixed repetitive and
    // divergent; exact equality request-for-request.
    for (int i = 0; i < 1000 && exact; ++i) {
        CoalescingCache cache;
        const bool repetitive = i % 2 == 0;
        const double divergence = repetitive ? 0.002 : 0.2;
        const std::size_t block = repetitive ? 200 : 50;
        const auto trace = layered_trace(rng, block, 10000 / block + 1, p, divergence);
        REQUIRE(trace.size() >= 10000);
        // Two passes per cache class: a reference build plus a mutation.
        auto variant = trace;
        variant[trace.size() / 2].addr += p.row_bytes;
        for (const auto& tr : {trace, variant}) {
            CoalesceStats stats;
            const ChannelResult fast = coalesced_simulate(tr, p, cache, 1, 32, &stats);
            const ChannelResult oracle = simulate_channel(tr, p);
            if (fast.departures != oracle.departures ||
                fast.row_conflict_stall != oracle.row_conflict_stall) {
                exact = false;
                break;
            }
            ++traces_checked;
        }
    }
    CHECK(exact);

    // 40 identical layer blocks across 64 channels sharing one cache class:
    // runtime of the coalesced path and its hit rate. Traces carry their
    // match-key digest from construction (the engine computes it while
    // decomposing movedata into requests), and arrival gaps keep the channel
    // drainable (a saturated queue has no steady state to replay).
    std::vector<HashedTrace> channels(64);
    {
        std::vector<std::tuple<Addr, Cycles, MemOp>> pattern;
        Addr a = 0;
        for (std::size_t i = 0; i < 2000; ++i) {
            a += (rng() % 8 == 0) ? p.row_bytes * (1 + rng() % 3) : p.interface;
            pattern.emplace_back(a, 14 + rng() % 6, rng() % 4 == 0 ? MemOp::Write : MemOp::Read);
        }
        for (auto& ht : channels) {
            Cycles t = 0;
            EventId e = 0;
            for (std::size_t l = 0; l < 40; ++l) {
                for (auto& [addr, gap, op] : pattern) {
                    t += gap;
                    ht.push(addr, op, t, e++);
                }
            }
        }
    }

    const auto d0 = std::chrono::steady_clock::now();
    Cycles direct_sum = 0;
    for (const auto& ht : channels)
        direct_sum += simulate_channel_timing(ht.requests(), p).last_departure;
    const double direct_ms = ms_since(d0);

    CoalescingCache cache;
    CoalesceStats stats;
    const auto c0 = std::chrono::steady_clock::now();
    Cycles fast_sum = 0;
    for (const auto& ht : channels)
        fast_sum += coalesced_timing(ht, p, cache, 7, 32, &stats).last_departure;
    const double fast_ms = ms_since(c0);

    CHECK(fast_sum == direct_sum);
    const double speedup = direct_ms / std::max(fast_ms, 0.001);
    CHECK(speedup >= 5.0);
    CHECK(stats.hit_rate() >= 0.99);

    Verdict v{1, exact && fast_sum == direct_sum && speedup >= 5.0 && stats.hit_rate() >= 0.99,
              "exact on " + std::to_string(traces_checked) + " traces, speedup " +
                  std::to_string(speedup) + "x, hit rate " + std::to_string(stats.hit_rate()) +
                  " (" + std::to_string(ms_since(t0) / 1000) + " s)"};
}

TEST_CASE("criterion 2: hand-computed DRAM timing oracle") {
    const ChannelParams p = accept_params();
    bool ok = true;

    // Row hits pipeline behind the data bus: latencies 15 and 15.
    {
        ChannelSim sim(p);
        sim.serve(rq(0, 0));  // open row 0; drains by cycle 29
        const auto a = sim.serve(rq(128, 100));
        const auto b = sim.serve(rq(256, 101));
        ok = ok && a.departure == 115 && b.departure == 116;
    }
    // Row miss with tRAS satisfied: tRP + tRCD + tCL + 1 beat = 43.
    {
        ChannelSim sim(p);
        sim.serve(rq(0, 0));
        const auto out = sim.serve(rq(1024, 40));
        ok = ok && out.row_conflict && out.departure - 40 == 43;
    }
    // tRAS-limited precharge: conflict at t=30 waits until act(0)+34.
    {
        ChannelSim sim(p);
        ok = ok && sim.serve(rq(0, 0)).departure == 29;
        ok = ok && sim.serve(rq(1024, 30)).departure == 77;
    }
    // Write-to-read turnaround: read CAS waits for write data to drain.
    {
        ChannelSim wr(p);
        ok = ok && wr.serve(rq(0, 0, MemOp::Write)).departure == 29;
        ok = ok && wr.serve(rq(128, 1, MemOp::Read)).departure == 44;
        ChannelSim rr(p);
        ok = ok && rr.serve(rq(0, 0, MemOp::Read)).departure == 29;
        ok = ok && rr.serve(rq(128, 1, MemOp::Read)).departure == 30;
    }
    CHECK(ok);
    Verdict v{2, ok, "row hit / miss / tRAS / turnaround automton traces exact at 14-14-14-34"};
}

TEST_CASE("criterion 3: placement trend on the two-tensor streaming microbenchmark") {
    const auto t0 = std::chrono::steady_clock::now();
    // 16 TB/s at 256 cores; an 8 KB row keeps intrinsic stream row-crossings
    // from drowning the cross-stream conflicts the policies differ on.
    const ChipSpec spec = load_spec_text("dram_total_bw: 16 TB/s\ndram_row_bytes: 8 KB\n");

    const Cycles uni = streaming_microbench(spec, PlacementPolicy::Uniform).report
                           .row_conflict_stall;
    const Cycles inter = streaming_microbench(spec, PlacementPolicy::Interleaved).report
                             .row_conflict_stall;
    const Cycles sw = streaming_microbench(spec, PlacementPolicy::SoftwareAware).report
                          .row_conflict_stall;

    const bool reduction = sw * 2 <= uni;  // >= 50 percent lower
    const bool ordering = uni >= inter && inter >= sw;
    CHECK(reduction);
    CHECK(ordering);
    Verdict v{3, reduction && ordering,
              "row_conflict_stall uniform=" + std::to_string(uni) + " interleaved=" +
                  std::to_string(inter) + " software-aware=" + std::to_string(sw) + " (" +
                  std::to_string(ms_since(t0) / 1000) + " s)"};
}

TEST_CASE("criterion 4: DRAM bandwidth scaling and the uniform plateau") {
    const auto t0 = std::chrono::steady_clock::now();
    ModelSpec model = load_model_file(std::string(VOXEL_DATA_DIR) + "/models/llama2-13b.model");
    model.num_layers = 1;
    PhaseSpec phase;
    phase.phase = Phase::Decode;
    phase.batch = 8;
    phase.kv_len = 512;

    auto latency = [&](const char* bw, PlacementPolicy pol) {
        const ChipSpec spec = load_spec_text(std::string("dram_total_bw: ") + bw + "\n");
        return run_model(spec, model, phase, Paradigm::ComputeShift, pol).report.total_cycles;
    };

    const Cycles sw4 = latency("4 TB/s", PlacementPolicy::SoftwareAware);
    const Cycles sw8 = latency("8 TB/s", PlacementPolicy::SoftwareAware);
    const Cycles sw12 = latency("12 TB/s", PlacementPolicy::SoftwareAware);
    const bool monotone = sw4 >= sw8 && sw8 >= sw12;

    const Cycles u4 = latency("4 TB/s", PlacementPolicy::Uniform);
    const Cycles u8 = latency("8 TB/s", PlacementPolicy::Uniform);
    const Cycles u12 = latency("12 TB/s", PlacementPolicy::Uniform);
    const Cycles u16 = latency("16 TB/s", PlacementPolicy::Uniform);
    const auto gain_lo = static_cast<std::int64_t>(u4) - static_cast<std::int64_t>(u8);
    const auto gain_hi = static_cast<std::int64_t>(u12) - static_cast<std::int64_t>(u16);
    const bool plateau = gain_hi < gain_lo;

    CHECK(monotone);
    CHECK(plateau);
    Verdict v{4, monotone && plateau,
              "sw-aware {4,8,12}TB/s = {" + std::to_string(sw4) + "," + std::to_string(sw8) + "," +
                  std::to_string(sw12) + "}; uniform gains 4->8 " + std::to_string(gain_lo) +
                  " vs 12->16 " + std::to_string(gain_hi) + " (" +
                  std::to_string(ms_since(t0) / 1000) + " s)"};
}

TEST_CASE("criterion 5: paradigm ordering on a 2-layer prefill workload") {
    const auto t0 = std::chrono::steady_clock::now();
    const ChipSpec spec = load_spec_text("");
    const ModelSpec model = midi_model();
    PhaseSpec phase;
    phase.phase = Phase::Prefill;
    phase.batch = 2;
    phase.seq_len = 128;

    auto one = [&](Paradigm p) {
        return run_model(spec, model, phase, p, PlacementPolicy::SoftwareAware);
    };
    const RunOut cs = one(Paradigm::ComputeShift);
    const RunOut df = one(Paradigm::Dataflow);
    const RunOut sp = one(Paradigm::Spmd);

    const bool order = cs.report.total_cycles <= df.report.total_cycles &&
                       df.report.total_cycles <= sp.report.total_cycles;
    auto noc_fraction = [](const SimReport& r) {
        return r.total_cycles == 0 ? 0.0
                                   : static_cast<double>(r.critical_path.noc) /
                                         static_cast<double>(r.total_cycles);
    };
    const bool noc = noc_fraction(sp.report) > noc_fraction(cs.report);
    CHECK(order);
    CHECK(noc);
    Verdict v{5, order && noc,
              "latency cs=" + std::to_string(cs.report.total_cycles) + " df=" +
                  std::to_string(df.report.total_cycles) + " spmd=" +
                  std::to_string(sp.report.total_cycles) + "; NoC fraction spmd=" +
                  std::to_string(noc_fraction(sp.report)) + " cs=" +
                  std::to_string(noc_fraction(cs.report)) + " (" +
                  std::to_string(ms_since(t0) / 1000) + " s)"};
}

TEST_CASE("criterion 6: mapping and topology") {
    const auto t0 = std::chrono::steady_clock::now();

    // Exact assertion: dimension-ordered rings keep every step within 2 hops.
    const DerivedGeometry geom = derive_geometry(load_spec_text(""));
    bool hops_ok = true;
    for (std::uint32_t len = 2; len <= geom.grid_cols; ++len) {
        SharingRing ring;
        for (std::uint32_t i = 0; i < len; ++i) ring.tiles.push_back(i);
        const CoreMap map = map_dimension_ordered(len, {ring}, geom);
        for (std::size_t i = 0; i < len; ++i) {
            const std::uint32_t hop = map_hop_distance(map, static_cast<std::uint32_t>(i),
                                                       static_cast<std::uint32_t>((i + 1) % len),
                                                       geom, NocTopology::Mesh2D);
            hops_ok = hops_ok && hop <= 2;
        }
    }
    CHECK(hops_ok);

    const ModelSpec model = midi_model();
    PhaseSpec phase;
    phase.phase = Phase::Prefill;
    phase.batch = 2;
    phase.seq_len = 128;

    auto with = [&](const char* topo, TileMapPolicy map) {
        const ChipSpec spec = load_spec_text(std::string("noc_topology: ") + topo + "\n");
        return run_model(spec, model, phase, Paradigm::ComputeShift, PlacementPolicy::SoftwareAware,
                         map)
            .report.total_cycles;
    };
    const Cycles mesh_dim = with("mesh", TileMapPolicy::DimensionOrdered);
    const Cycles mesh_seq = with("mesh", TileMapPolicy::Sequential);
    const Cycles a2a_dim = with("all2all", TileMapPolicy::DimensionOrdered);
    const Cycles a2a_seq = with("all2all", TileMapPolicy::Sequential);

    const bool dim_wins = mesh_dim < mesh_seq;
    const bool a2a_invariant = a2a_dim == a2a_seq;
    const bool near_optimal =
        static_cast<double>(mesh_dim) <= 1.05 * static_cast<double>(a2a_dim);
    CHECK(dim_wins);
    CHECK(a2a_invariant);
    CHECK(near_optimal);
    Verdict v{6, hops_ok && dim_wins && a2a_invariant && near_optimal,
              "mesh dim=" + std::to_string(mesh_dim) + " seq=" + std::to_string(mesh_seq) +
                  "; all2all dim=" + std::to_string(a2a_dim) + " seq=" + std::to_string(a2a_seq) +
                  " (" + std::to_string(ms_since(t0) / 1000) + " s)"};
}

namespace {

// Decode-flavored core-group microbenchmark: every core in a group streams
// the same shared weight tensor after a desynchronizing warmup.
SimReport group_microbench(std::uint32_t group_size, bool tracker) {
    ChipSpec spec = load_spec_text("num_cores: 1024\ncore_group_size: " +
                                   std::to_string(group_size) + "\n");
    PlanBuilder b(spec);
    const DerivedGeometry geom = derive_geometry(spec);
    (void)geom;
    const std::uint32_t C = spec.num_cores;
    const std::uint32_t chunk_elems = 16 * 1024;  // 32 KB chunks
    const std::uint32_t chunks = 12;
    const TensorId w = b.add_tensor(DType::BF16, {Bytes(C) * chunks * chunk_elems});
    b.movedata(std::nullopt, w);

    // Desync warmup: per-core vector op of varying length.
    std::vector<EventId> warm(C);
    for (std::uint32_t c = 0; c < C; ++c) {
        const TensorId in = b.add_sram_tensor(DType::BF16, {1024}, c);
        const TensorId out = b.add_sram_tensor(DType::BF16, {1024}, c);
        warm[c] = b.compute(OpTile::elementwise(64 * (1 + c % 8), 1, {in, in}, out), c);
    }
    b.begin_wave();
    for (std::uint32_t c = 0; c < C; ++c) {
        EventId prev = warm[c];
        for (std::uint32_t i = 0; i < chunks; ++i) {
            const Bytes off = (Bytes(c) * chunks + i) * chunk_elems * 2;
            const TensorId view = b.add_view(w, off, {chunk_elems}, DType::BF16);
            const TensorId out = b.add_sram_tensor(DType::BF16, {chunk_elems}, c);
            prev = b.compute(OpTile::elementwise(chunk_elems, 1, {view}, out), c,
                             std::vector<EventId>{prev});
        }
    }
    const ExecutionGraph g = b.finalize();
    const PlacementPlan pl = place(PlacementPolicy::SoftwareAware, g.tensors, g, spec);
    SimOptions sopts;
    sopts.refresh = false;
    sopts.tracker = tracker;
    return simulate(g, pl, spec, sopts);
}

}  // namespace

TEST_CASE("criterion 7: core groups reduce row conflicts with diminishing returns") {
    const auto t0 = std::chrono::steady_clock::now();
    const SimReport g1 = group_microbench(8, /*tracker=*/false);  // behaves as group size 1
    const SimReport g8 = group_microbench(8, true);
    const SimReport g16 = group_microbench(16, true);
    const SimReport g32 = group_microbench(32, true);

    const bool reduces = g8.row_conflict_stall < g1.row_conflict_stall;
    auto improve = [&](const SimReport& r) {
        return (static_cast<double>(g8.total_cycles) - static_cast<double>(r.total_cycles)) /
               static_cast<double>(g8.total_cycles);
    };
    const bool diminishing = improve(g16) < 0.05 && improve(g32) < 0.05;
    const bool spread_ok = g8.tracker_max_spread <= 1 && g16.tracker_max_spread <= 1 &&
                           g32.tracker_max_spread <= 1;
    CHECK(reduces);
    CHECK(diminishing);
    CHECK(spread_ok);
    Verdict v{7, reduces && diminishing && spread_ok,
              "row_conflict_stall off=" + std::to_string(g1.row_conflict_stall) + " g8=" +
                  std::to_string(g8.row_conflict_stall) + "; g16/g32 improvement " +
                  std::to_string(improve(g16)) + "/" + std::to_string(improve(g32)) +
                  ", spread<=1 (" + std::to_string(ms_since(t0) / 1000) + " s)"};
}

TEST_CASE("criterion 8: SRAM scaling saturates for decode, barely moves prefill") {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec model = midi_model();

    auto with_sram = [&](const char* sram, Phase ph) {
        const ChipSpec spec = load_spec_text(std::string("sram_per_core: ") + sram + "\n");
        PhaseSpec phase;
        phase.phase = ph;
        phase.batch = ph == Phase::Decode ? 16 : 2;
        phase.kv_len = 1024;
        phase.seq_len = 128;
        return run_model(spec, model, phase, Paradigm::ComputeShift,
                         PlacementPolicy::SoftwareAware)
            .report.total_cycles;
    };

    const Cycles d05 = with_sram("512 KB", Phase::Decode);
    const Cycles d2 = with_sram("2048 KB", Phase::Decode);
    const Cycles d8 = with_sram("8192 KB", Phase::Decode);
    const Cycles d16 = with_sram("16384 KB", Phase::Decode);
    const bool nonincreasing = d05 >= d2 && d2 >= d8;
    const bool saturated =
        std::abs(static_cast<double>(d8) - static_cast<double>(d16)) <=
        0.02 * static_cast<double>(d16);

    const Cycles p05 = with_sram("512 KB", Phase::Prefill);
    const Cycles p8 = with_sram("8192 KB", Phase::Prefill);
    const double prefill_change =
        std::abs(static_cast<double>(p05) - static_cast<double>(p8)) /
        static_cast<double>(p05);
    const bool prefill_flat = prefill_change < 0.15;

    CHECK(nonincreasing);
    CHECK(saturated);
    CHECK(prefill_flat);
    Verdict v{8, nonincreasing && saturated && prefill_flat,
              "decode {0.5,2,8,16}MB = {" + std::to_string(d05) + "," + std::to_string(d2) + "," +
                  std::to_string(d8) + "," + std::to_string(d16) + "}; prefill change " +
                  std::to_string(prefill_change) + " (" + std::to_string(ms_since(t0) / 1000) +
                  " s)"};
}

TEST_CASE("criterion 9: energy identities and trends") {
    const auto t0 = std::chrono::steady_clock::now();
    const ModelSpec model = midi_model();

    auto energy = [&](const char* bw, Phase ph) {
        const ChipSpec spec = load_spec_text(std::string("dram_total_bw: ") + bw + "\n");
        PhaseSpec phase;
        phase.phase = ph;
        phase.batch = ph == Phase::Decode ? 16 : 2;
        phase.kv_len = 1024;
        phase.seq_len = 128;
        const RunOut r = run_model(spec, model, phase, Paradigm::ComputeShift,
                                   PlacementPolicy::SoftwareAware);
        return r.report.energy.total();
    };

    const double d4 = energy("4 TB/s", Phase::Decode);
    const double d8 = energy("8 TB/s", Phase::Decode);
    const double d12 = energy("12 TB/s", Phase::Decode);
    const bool decode_down = d4 > d8 && d8 > d12;

    const double p4 = energy("4 TB/s", Phase::Prefill);
    const double p12 = energy("12 TB/s", Phase::Prefill);
    const double prefill_change = std::abs(p4 - p12) / p4;
    const bool prefill_flat = prefill_change < 0.10;

    // limit = infinity bit-identical to a permissive finite limit.
    auto digest_with_limit = [&](double limit) {
        ChipSpec spec = load_spec_text("");
        spec.power_density_limit = limit;
        PhaseSpec phase;
        phase.phase = Phase::Decode;
        phase.batch = 4;
        phase.kv_len = 128;
        ModelSpec m = midi_model();
        m.num_layers = 1;
        return run_model(spec, m, phase, Paradigm::ComputeShift, PlacementPolicy::SoftwareAware)
            .report.digest();
    };
    const bool unlimited_identical =
        digest_with_limit(std::numeric_limits<double>::infinity()) == digest_with_limit(1e12);

    // Density forced to exactly twice the limit: compute durations double.
    bool doubled;
    {
        ChipSpec spec = load_spec_text("num_cores: 16\ncore_group_size: 4\n");
        EnergyConstants k;
        k.static_w_per_mm2_sa = k.static_w_per_mm2_sram = k.static_w_per_mm2_tsv =
            k.static_w_per_mm2_other = 0;
        k.dram_static_w_per_gb = 0;
        k.sram_pj_per_byte = 0;
        const TileCost cost = matmul_cost(128, 128, 128, spec.sa_width);
        const double seconds = static_cast<double>(cost.cycles) / (spec.core_freq_ghz * 1e9);
        const double area = area_of(spec).total() / spec.num_cores;
        k.mac_pj = 2.0 * 0.7 * area * seconds / (static_cast<double>(cost.macs_total) * 1e-12);
        auto run = [&](double limit) {
            ChipSpec s = spec;
            s.power_density_limit = limit;
            PlanBuilder b(s);
            const TensorId in = b.add_sram_tensor(DType::BF16, {128, 128}, 0);
            const TensorId out = b.add_sram_tensor(DType::BF16, {128, 128}, 0);
            b.compute(OpTile::matmul(128, 128, 128, {in}, out), CoreId{0});
            const ExecutionGraph g = b.finalize();
            SimOptions so;
            so.refresh = false;
            so.energy = k;
            return simulate(g, PlacementPlan{}, s, so).total_cycles;
        };
        doubled = run(std::numeric_limits<double>::infinity()) == cost.cycles &&
                  run(0.7) == 2 * cost.cycles;
    }

    CHECK(decode_down);
    CHECK(prefill_flat);
    CHECK(unlimited_identical);
    CHECK(doubled);
    Verdict v{9, decode_down && prefill_flat && unlimited_identical && doubled,
              "decode energy {4,8,12}TB/s = {" + std::to_string(d4) + "," + std::to_string(d8) +
                  "," + std::to_string(d12) + "} J; prefill change " +
                  std::to_string(prefill_change) + "; throttle identities exact (" +
                  std::to_string(ms_since(t0) / 1000) + " s)"};
}

TEST_CASE("criterion 10: DSE matches exhaustive search; frontier has no dominated point") {
    const auto t0 = std::chrono::steady_clock::now();
    const ChipSpec initial = load_spec_text("");

    std::vector<DseParameter> domains{
        {"num_cores", {"16", "64", "256", "1024"}},
        {"sa_width", {"8", "16", "32", "64"}},
        {"sram_per_core", {"512 KB", "2048 KB", "8192 KB"}},
    };
    auto objective = [](const ChipSpec& s) {
        const double a = std::log2(static_cast<double>(s.num_cores)) - 6;   // optimum 64
        const double b = std::log2(static_cast<double>(s.sa_width)) - 5;    // optimum 32
        const double c = std::log2(static_cast<double>(s.sram_per_core)) - 21;  // optimum 2 MB
        return a * a + b * b + c * c + 1.0;
    };
    const DseTrace trace = coordinate_descent(initial, 1e9, domains, objective);

    double grid_best = 1e300;
    for (const auto& nc : domains[0].values)
        for (const auto& sa : domains[1].values)
            for (const auto& sr : domains[2].values) {
                ConfigDoc doc = ConfigDoc::parse_text(render_spec(initial));
                doc.set("num_cores", nc);
                doc.set("sa_width", sa);
                doc.set("sram_per_core", sr);
                grid_best = std::min(grid_best, objective(load_spec(doc)));
            }
    const bool optimum = trace.best.objective == grid_best;

    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> dist(0, 1);
    std::vector<ParetoPoint> pts;
    for (int i = 0; i < 10000; ++i)
        pts.push_back(ParetoPoint{dist(rng), dist(rng), static_cast<std::uint64_t>(i)});
    const auto frontier = pareto_frontier(pts);
    bool no_dominated = true;
    for (std::size_t i = 0; i < frontier.size() && no_dominated; ++i) {
        for (std::size_t j = 0; j < frontier.size(); ++j) {
            if (i == j) continue;
            if (frontier[j].area <= frontier[i].area && frontier[j].latency <= frontier[i].latency &&
                (frontier[j].area < frontier[i].area || frontier[j].latency < frontier[i].latency)) {
                no_dominated = false;
                break;
            }
        }
    }
    CHECK(optimum);
    CHECK(no_dominated);
    Verdict v{10, optimum && no_dominated,
              "descent objective " + std::to_string(trace.best.objective) + " == grid " +
                  std::to_string(grid_best) + "; frontier of 10^4 points clean (" +
                  std::to_string(ms_since(t0) / 1000) + " s)"};
}

TEST_CASE("criterion 11: sweep CSV is byte-identical across --jobs 1 and --jobs 8") {
    const auto t0 = std::chrono::steady_clock::now();
#ifndef VOXEL_CLI_PATH
    FAIL("CLI path not configured");
#else
    auto run_jobs = [&](int jobs, const std::string& out) {
        const std::string cmd =
            std::string(VOXEL_CLI_PATH) +
            " sweep --param dram_total_bw --values '4 TB/s,8 TB/s,12 TB/s'"
            " --model " + VOXEL_DATA_DIR + "/models/llama2-13b.model" +
            " --phase decode --layers 1 --batch 4 --kv-len 128"
            " --set num_cores=64 --set core_group_size=8"
            " --jobs " + std::to_string(jobs) + " --csv " + out + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    const std::string f1 = std::string(VOXEL_DATA_DIR) + "/../build/accept_jobs1.csv";
    const std::string f8 = std::string(VOXEL_DATA_DIR) + "/../build/accept_jobs8.csv";
    const int rc1 = run_jobs(1, f1);
    const int rc8 = run_jobs(8, f8);
    auto slurp = [](const std::string& path) {
        std::ifstream in(path);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string a = slurp(f1);
    const std::string b = slurp(f8);
    const bool ok = rc1 == 0 && rc8 == 0 && !a.empty() && a == b;
    CHECK(rc1 == 0);
    CHECK(rc8 == 0);
    CHECK_FALSE(a.empty());
    CHECK(a == b);
    Verdict v{11, ok,
              std::string("3-point sweep byte-identical across jobs (") +
                  std::to_string(ms_since(t0) / 1000) + " s)"};
#endif
}
