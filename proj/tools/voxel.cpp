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

#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "voxel/dram_model.hpp"
#include "voxel/dse.hpp"
#include "voxel/engine.hpp"
#include "voxel/paradigms.hpp"
#include "voxel/workloads.hpp"

namespace voxel {
namespace {

#ifndef VOXEL_DATA_DIR
#define VOXEL_DATA_DIR "data"
#endif

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct RunFlags {
    std::string spec_path;
    std::vector<std::string> sets;
    std::string model = "llama2-13b";
    std::string phase = "decode";
    std::uint32_t batch = 32;
    std::uint64_t seq = 2048;
    std::uint64_t kv_len = 2048;
    std::uint32_t layers = 0;  // 0: model default
    std::string paradigm = "compute-shift";
    std::string tile_map = "dim-ordered";
    std::string placement = "software-aware";
    std::string noc;
    std::uint32_t noc_bw = 0;
    std::string dram_bw;
    std::string dram_timing;
    double power_limit = 0;
    std::uint32_t microbatches = 4;
    std::uint32_t stages = 4;
    std::string energy_file;
    std::string data_dir = VOXEL_DATA_DIR;
    bool no_refresh = false;
    bool no_tracker = false;
    std::uint64_t seed = 0;
    std::string out_path;
    std::string csv_path;
    std::string timeline_path;
    std::string dump_graph;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    const auto once = CLI::MultiOptionPolicy::Throw;  // repeated flags conflict
    cmd->add_option("--spec", f.spec_path, "chip config file")->multi_option_policy(once);
    cmd->add_option("--set", f.sets, "config override key=value (repeatable)");
    cmd->add_option("--model", f.model, "model name or file")->multi_option_policy(once);
    cmd->add_option("--phase", f.phase, "prefill|decode")->multi_option_policy(once);
    cmd->add_option("--batch", f.batch, "batch size")->multi_option_policy(once);
    cmd->add_option("--seq", f.seq, "prompt length (prefill)")->multi_option_policy(once);
    cmd->add_option("--kv-len", f.kv_len, "cache length (decode)")->multi_option_policy(once);
    cmd->add_option("--layers", f.layers, "override model layer count")->multi_option_policy(once);
    cmd->add_option("--paradigm", f.paradigm, "spmd|dataflow|compute-shift")
        ->multi_option_policy(once);
    cmd->add_option("--tile-map", f.tile_map, "sequential|dim-ordered")->multi_option_policy(once);
    cmd->add_option("--placement", f.placement, "uniform|interleaved|software-aware")
        ->multi_option_policy(once);
    cmd->add_option("--noc", f.noc, "mesh|torus|all2all")->multi_option_policy(once);
    cmd->add_option("--noc-bw", f.noc_bw, "NoC link bytes/cycle")->multi_option_policy(once);
    cmd->add_option("--dram-bw", f.dram_bw, "total DRAM bandwidth, e.g. 12 TB/s")
        ->multi_option_policy(once);
    cmd->add_option("--dram-timing", f.dram_timing, "tCL-tRCD-tRP-tRAS")->multi_option_policy(once);
    cmd->add_option("--power-limit", f.power_limit, "W/mm2 (0 keeps the spec value)")
        ->multi_option_policy(once);
    cmd->add_option("--microbatches", f.microbatches, "dataflow microbatches")
        ->multi_option_policy(once);
    cmd->add_option("--stages", f.stages, "dataflow pipeline stages")->multi_option_policy(once);
    cmd->add_option("--energy", f.energy_file, "energy constants file")->multi_option_policy(once);
    cmd->add_option("--data-dir", f.data_dir, "model/data directory")->multi_option_policy(once);
    cmd->add_flag("--no-refresh", f.no_refresh, "disable DRAM refresh modeling");
    cmd->add_flag("--no-tracker", f.no_tracker, "disable the core-group request tracker");
    cmd->add_option("--seed", f.seed, "seed for randomized tie-breaks")->multi_option_policy(once);
    cmd->add_option("--out", f.out_path, "write the text report here")->multi_option_policy(once);
    cmd->add_option("--csv", f.csv_path, "write a CSV row per run")->multi_option_policy(once);
    cmd->add_option("--timeline", f.timeline_path, "dump per-event timings as CSV")
        ->multi_option_policy(once);
    cmd->add_option("--dump-graph", f.dump_graph, "write the execution plan text")
        ->multi_option_policy(once);
}

ChipSpec resolve_spec(const RunFlags& f) {
    ConfigDoc doc = f.spec_path.empty() ? ConfigDoc() : ConfigDoc::load_file(f.spec_path);
    for (const auto& kv : f.sets) doc.set_from_override(kv);
    if (!f.noc.empty()) doc.set("noc_topology", f.noc);
    if (f.noc_bw) doc.set("noc_link_bw", std::to_string(f.noc_bw));
    if (!f.dram_bw.empty()) doc.set("dram_total_bw", f.dram_bw);
    if (!f.dram_timing.empty()) doc.set("dram_timing", f.dram_timing);
    if (f.power_limit > 0) doc.set("power_density_limit", fmt(f.power_limit));
    return load_spec(doc);
}

struct RunResult {
    ChipSpec spec;
    SimReport report;
    BuiltPlan plan;
    ModelSpec model;
    PhaseSpec phase;
    double seconds = 0;
};

RunResult run_one(const RunFlags& f, const ChipSpec& spec) {
    ModelSpec model = resolve_model(f.model, f.data_dir);
    if (f.layers) model.num_layers = f.layers;
    PhaseSpec phase;
    phase.phase = phase_from_name(f.phase);
    phase.batch = f.batch;
    phase.seq_len = f.seq;
    phase.kv_len = f.kv_len;

    const auto ops = expand(model, phase);
    PlanOptions popts;
    popts.paradigm = paradigm_from_name(f.paradigm);
    popts.tile_map = tile_map_policy_from_name(f.tile_map);
    popts.microbatches = f.microbatches;
    popts.dataflow_stages =
        std::min<std::uint32_t>(f.stages, static_cast<std::uint32_t>(ops.size()));
    popts.seed = f.seed;
    BuiltPlan plan = build_plan(ops, spec, popts);

    const PlacementPlan placement =
        place(placement_policy_from_name(f.placement), plan.graph.tensors, plan.graph, spec);

    SimOptions sopts;
    sopts.refresh = !f.no_refresh;
    sopts.tracker = !f.no_tracker;
    sopts.record_timeline = !f.timeline_path.empty();
    if (!f.energy_file.empty()) sopts.energy = EnergyConstants::load_file(f.energy_file);

    RunResult r;
    r.spec = spec;
    r.model = model;
    r.phase = phase;
    r.report = simulate(plan.graph, placement, spec, sopts);
    r.seconds = static_cast<double>(r.report.total_cycles) / (spec.core_freq_ghz * 1e9);
    if (!f.dump_graph.empty()) {
        std::ofstream out(f.dump_graph);
        out << plan.graph.serialize();
    }
    r.plan = std::move(plan);
    return r;
}

const char* kCsvHeader =
    "# voxel csv v1\n"
    "spec_hash,model,phase,paradigm,tile_map,placement,noc,param,value,total_cycles,latency_us,"
    "cp_compute,cp_noc,cp_dram,cp_row_conflict,cp_sync,row_conflict_stall,dram_requests,"
    "row_hits,row_conflicts,core_util,chan_util,spatial_util,energy_total_j,energy_static_j,"
    "energy_dynamic_j,energy_sa_j,energy_vu_j,energy_sram_j,energy_noc_j,energy_dram_j,"
    "energy_tsv_j,tracker_max_spread\n";

std::string csv_row(const RunFlags& f, const RunResult& r, const std::string& param,
                    const std::string& value) {
    const SimReport& rep = r.report;
    std::ostringstream o;
    o << std::hex << spec_hash(r.spec) << std::dec << "," << r.model.name << "," << f.phase << ","
      << f.paradigm << "," << f.tile_map << "," << f.placement << ","
      << noc_topology_name(r.spec.noc_topology) << "," << param << "," << value << ","
      << rep.total_cycles << "," << fmt(r.seconds * 1e6) << "," << rep.critical_path.compute << ","
      << rep.critical_path.noc << "," << rep.critical_path.dram_access << ","
      << rep.critical_path.row_conflict_stall << "," << rep.critical_path.sync_wait << ","
      << rep.row_conflict_stall << "," << rep.dram_requests << "," << rep.dram_row_hits << ","
      << rep.dram_row_conflicts << "," << fmt(rep.avg_core_utilization) << ","
      << fmt(rep.avg_channel_utilization) << "," << fmt(rep.spatial_utilization) << ","
      << fmt(rep.energy.total()) << "," << fmt(rep.energy.total_static()) << ","
      << fmt(rep.energy.total_dynamic()) << "," << fmt(rep.energy.sa.total()) << ","
      << fmt(rep.energy.vu.total()) << "," << fmt(rep.energy.sram.total()) << ","
      << fmt(rep.energy.noc.total()) << "," << fmt(rep.energy.dram.total()) << ","
      << fmt(rep.energy.tsv.total()) << "," << rep.tracker_max_spread << "\n";
    return o.str();
}

void write_text_report(std::ostream& out, const RunFlags& f, const RunResult& r) {
    out << "== voxel simulation report ==\n";
    out << "model: " << r.model.name << "  phase: " << f.phase
        << " (decode latencies are single-iteration)\n";
    out << "paradigm: " << f.paradigm << "  tile-map: " << f.tile_map
        << "  placement: " << f.placement << "\n";
    out << "batch: " << r.phase.batch << "  seq: " << r.phase.seq_len
        << "  kv_len: " << r.phase.kv_len << "  layers: " << r.model.num_layers << "\n\n";
    out << "-- latency --\n" << r.report.to_text() << "\n";
    out << "latency_us: " << fmt(r.seconds * 1e6) << "\n";
    if (!r.report.warnings.empty()) {
        out << "\n-- warnings --\n";
        for (const auto& w : r.report.warnings) out << w << "\n";
    }
    for (const auto& w : r.plan.warnings) out << "plan: " << w << "\n";
    out << "\n-- resolved chip spec --\n" << render_spec(r.spec);
}

void write_timeline(const std::string& path, const SimReport& rep) {
    std::ofstream out(path);
    out << "# voxel timeline v1\nevent,kind,core,start,finish\n";
    for (const TimelineEntry& t : rep.timeline) {
        out << t.event << "," << static_cast<int>(t.kind) << "," << t.core << "," << t.start << ","
            << t.finish << "\n";
    }
}

int cmd_run(const RunFlags& f) {
    const ChipSpec spec = resolve_spec(f);
    const RunResult r = run_one(f, spec);
    if (!f.out_path.empty()) {
        std::ofstream out(f.out_path);
        write_text_report(out, f, r);
    }
    write_text_report(std::cout, f, r);
    if (!f.csv_path.empty()) {
        std::ofstream out(f.csv_path);
        out << kCsvHeader << csv_row(f, r, "", "");
    }
    if (!f.timeline_path.empty()) write_timeline(f.timeline_path, r.report);
    return 0;
}

int cmd_sweep(const RunFlags& f, const std::string& param, const std::string& values_csv,
              std::uint32_t jobs) {
    std::vector<std::string> values;
    std::istringstream in(values_csv);
    std::string piece;
    while (std::getline(in, piece, ',')) values.push_back(piece);
    if (values.empty()) throw ConfigError("--values must list at least one setting");

    std::vector<std::string> rows(values.size());
    auto eval = [&](std::size_t i) {
        RunFlags fi = f;
        fi.timeline_path.clear();
        fi.dump_graph.clear();
        ConfigDoc doc = fi.spec_path.empty() ? ConfigDoc() : ConfigDoc::load_file(fi.spec_path);
        for (const auto& kv : fi.sets) doc.set_from_override(kv);
        doc.set(param, values[i]);
        RunFlags fx = fi;
        fx.spec_path.clear();
        fx.sets.clear();
        ChipSpec spec = load_spec(doc);
        if (!fi.noc.empty() || fi.noc_bw || !fi.dram_bw.empty() || !fi.dram_timing.empty() ||
            fi.power_limit > 0) {
            ConfigDoc d2 = ConfigDoc::parse_text(render_spec(spec));
            if (!fi.noc.empty()) d2.set("noc_topology", fi.noc);
            if (fi.noc_bw) d2.set("noc_link_bw", std::to_string(fi.noc_bw));
            if (!fi.dram_bw.empty()) d2.set("dram_total_bw", fi.dram_bw);
            if (!fi.dram_timing.empty()) d2.set("dram_timing", fi.dram_timing);
            if (fi.power_limit > 0) d2.set("power_density_limit", fmt(fi.power_limit));
            spec = load_spec(d2);
        }
        const RunResult r = run_one(fi, spec);
        rows[i] = csv_row(fi, r, param, values[i]);
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < values.size(); ++i) eval(i);
    } else {
        std::vector<std::future<void>> futures;
        for (std::size_t i = 0; i < values.size(); ++i)
            futures.push_back(std::async(std::launch::async, eval, i));
        for (auto& fu : futures) fu.get();
    }

    std::ostringstream out;
    out << kCsvHeader;
    for (const auto& row : rows) out << row;
    if (!f.csv_path.empty()) {
        std::ofstream file(f.csv_path);
        file << out.str();
    }
    std::cout << out.str();
    return 0;
}

int cmd_dse(const RunFlags& f, double area_limit, const std::string& out_csv,
            std::uint32_t thresholds) {
    const ChipSpec initial = resolve_spec(f);
    const auto domains = default_dse_domains();

    Objective objective = [&](const ChipSpec& spec) {
        // Geomean latency over {prefill, decode} of the selected model.
        double log_sum = 0;
        int n = 0;
        for (const char* phase : {"prefill", "decode"}) {
            RunFlags fi = f;
            fi.phase = phase;
            fi.timeline_path.clear();
            fi.dump_graph.clear();
            const RunResult r = run_one(fi, spec);
            log_sum += std::log(static_cast<double>(std::max<Cycles>(r.report.total_cycles, 1)));
            ++n;
        }
        return std::exp(log_sum / n);
    };

    const FrontierResult result =
        explore_frontier(initial, area_limit, domains, objective, thresholds);

    std::ostringstream out;
    out << "# voxel dse csv v1\n";
    out << "spec_hash,num_cores,sa_width,sram_per_core,noc_link_bw,dram_total_bw,core_group_size,"
           "area_mm2,geomean_latency_cycles,feasible,on_frontier\n";
    for (const DsePoint& p : result.evaluated) {
        const std::uint64_t h = spec_hash(p.spec);
        bool on_frontier = false;
        for (const ParetoPoint& fp : result.frontier) {
            if (fp.tag == h && fp.area == p.area && fp.latency == p.objective) on_frontier = true;
        }
        out << std::hex << h << std::dec << "," << p.spec.num_cores << "," << p.spec.sa_width << ","
            << p.spec.sram_per_core << "," << p.spec.noc_link_bw << "," << fmt(p.spec.dram_total_bw)
            << "," << p.spec.core_group_size << "," << fmt(p.area) << "," << fmt(p.objective) << ","
            << (p.feasible ? 1 : 0) << "," << (on_frontier ? 1 : 0) << "\n";
    }
    if (!out_csv.empty()) {
        std::ofstream file(out_csv);
        file << out.str();
    }
    std::cout << out.str();
    std::cout << "# frontier points: " << result.frontier.size() << "\n";
    return 0;
}

int cmd_trace_replay(const std::string& trace_path, const std::string& mode,
                     const std::string& timing, std::uint32_t queue_depth, Bytes row_bytes,
                     std::uint32_t banks, Cycles beats, const std::string& out_csv) {
    std::ifstream in(trace_path);
    if (!in) throw ConfigError("cannot open trace file '" + trace_path + "'");
    std::map<ChannelId, std::vector<MemoryRequest>> traces;
    std::string line;
    int lineno = 0;
    EventId next_event = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string ch, addr, op, arrival;
        if (!std::getline(ls, ch, ',') || !std::getline(ls, addr, ',') ||
            !std::getline(ls, op, ',') || !std::getline(ls, arrival, ',')) {
            throw ConfigError("trace line " + std::to_string(lineno) +
                              ": expected channel,addr,op,arrival");
        }
        MemoryRequest r;
        r.addr = std::stoull(addr);
        r.op = (op == "W" || op == "w" || op == "write") ? MemOp::Write : MemOp::Read;
        r.arrival = std::stoull(arrival);
        r.event = next_event++;
        traces[static_cast<ChannelId>(std::stoul(ch))].push_back(r);
    }

    ChannelParams params;
    if (!timing.empty()) {
        ConfigDoc doc;
        doc.set("dram_timing", timing);
        const ChipSpec s = load_spec(doc);
        params.timing = s.dram_timing;
    }
    params.burst_beats = beats;
    params.num_banks = banks;
    params.row_bytes = row_bytes;
    params.interface = 128;

    CoalescingCache cache;
    CoalesceStats stats;
    std::ostringstream out;
    out << "# voxel trace csv v1\nchannel,index,arrival,departure,latency,row_hit,row_conflict\n";
    for (auto& [ch, trace] : traces) {
        ChannelResult res;
        if (mode == "coalesced") {
            res = coalesced_simulate(trace, params, cache, /*class=*/0, queue_depth, &stats);
        } else if (mode == "verify") {
            res = coalesced_simulate(trace, params, cache, 0, queue_depth, &stats);
            const ChannelResult oracle = simulate_channel(trace, params);
            if (res.departures != oracle.departures)
                throw SimError("coalesced and direct timings diverge on channel " +
                               std::to_string(ch));
        } else {
            res = simulate_channel(trace, params);
        }
        for (std::size_t i = 0; i < trace.size(); ++i) {
            out << ch << "," << i << "," << trace[i].arrival << "," << res.departures[i] << ","
                << res.departures[i] - trace[i].arrival << ","
                << ((res.flags[i] & ChannelResult::kHit) ? 1 : 0) << ","
                << ((res.flags[i] & ChannelResult::kConflict) ? 1 : 0) << "\n";
        }
    }
    if (mode != "direct") {
        out << "# hit_rate: " << fmt(stats.hit_rate()) << " replayed=" << stats.replayed_requests
            << " simulated=" << stats.simulated_requests << "\n";
    }
    if (!out_csv.empty()) {
        std::ofstream file(out_csv);
        file << out.str();
    }
    std::cout << out.str();
    return 0;
}

int main_impl(int argc, char** argv) {
    CLI::App app{"event-driven simulator for 3D-stacked AI chips"};
    app.require_subcommand(1);

    RunFlags flags;

    auto* run = app.add_subcommand("run", "simulate one configuration");
    add_run_flags(run, flags);

    auto* sweep = app.add_subcommand("sweep", "simulate across one parameter's values");
    std::string sweep_param, sweep_values;
    std::uint32_t jobs = 1;
    add_run_flags(sweep, flags);
    sweep->add_option("--param", sweep_param, "config key to vary")->required();
    sweep->add_option("--values", sweep_values, "comma-separated settings")->required();
    sweep->add_option("--jobs", jobs, "parallel sweep points");

    auto* dse = app.add_subcommand("dse", "area-constrained coordinate-descent search");
    double area_limit = 850.0;
    std::string dse_out;
    std::uint32_t thresholds = 4;
    add_run_flags(dse, flags);
    dse->add_option("--area-limit", area_limit, "per-die area limit in mm2");
    dse->add_option("--out-csv", dse_out, "frontier CSV path");
    dse->add_option("--thresholds", thresholds, "geometric area thresholds");

    auto* replay = app.add_subcommand("trace-replay", "run a DRAM request trace file");
    std::string trace_path, replay_mode = "verify", replay_timing = "14-14-14-34", replay_csv;
    std::uint32_t replay_depth = 32, replay_banks = 1;
    Cycles replay_beats = 1;
    Bytes replay_row = 1024;
    replay->add_option("--trace", trace_path, "trace file: channel,addr,op,arrival")->required();
    replay->add_option("--mode", replay_mode, "direct|coalesced|verify");
    replay->add_option("--dram-timing", replay_timing, "tCL-tRCD-tRP-tRAS");
    replay->add_option("--queue-depth", replay_depth, "divergence window N");
    replay->add_option("--banks", replay_banks, "banks per channel");
    replay->add_option("--beats", replay_beats, "burst beats per request");
    replay->add_option("--row-bytes", replay_row, "row buffer bytes");
    replay->add_option("--csv", replay_csv, "output CSV path");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(flags);
    if (sweep->parsed()) return cmd_sweep(flags, sweep_param, sweep_values, jobs);
    if (dse->parsed()) return cmd_dse(flags, area_limit, dse_out, thresholds);
    if (replay->parsed())
        return cmd_trace_replay(trace_path, replay_mode, replay_timing, replay_depth, replay_row,
                                replay_banks, replay_beats, replay_csv);
    return 1;
}

}  // namespace
}  // namespace voxel

int main(int argc, char** argv) {
    try {
        return voxel::main_impl(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
