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

#include "voxel/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <queue>
#include <sstream>

#include "voxel/core_model.hpp"
#include "voxel/dram_model.hpp"
#include "voxel/noc_model.hpp"

namespace voxel {

namespace {

constexpr std::uint32_t kNone = 0xffffffffu;

// Burst count covering [offset, offset+len) at interface granularity; reads
// snap down to the containing burst.
std::uint64_t bursts_in(const DramRange& r, Bytes interface) {
    const Addr start = r.offset / interface * interface;
    return ceil_div(r.offset + r.len - start, interface);
}

struct GateRef {
    enum Kind : std::uint8_t { Origin, Event, Flow } kind = Origin;
    std::uint32_t id = 0;
};

enum class FlowKind : std::uint8_t { Fetch, Writeback, Copy };

// One engine-level data movement: a DRAM fetch into SRAM, a write-back, or a
// core-to-core copy. Fetches are shared by every reader of the tensor on the
// same core.
struct Flow {
    std::uint32_t id = 0;
    FlowKind kind = FlowKind::Fetch;
    EventId owner = kNoEvent;
    CoreId core = 0;   // SRAM endpoint
    CoreId peer = 0;   // copy source core
    TensorId tensor = kNoTensor;
    std::uint32_t wave = kNoWave;
    Bytes bytes = 0;

    DramSpan span;
    std::uint64_t requests_total = 0;
    std::uint64_t requests_done = 0;
    Cycles dram_done = 0;
    Cycles conflict_cycles = 0;
    Cycles dram_busy = 0;

    bool noc_needed = false;
    Bytes noc_bytes = 0;
    Route noc_route;
    bool noc_complete = false;
    Cycles noc_start = 0;
    Cycles noc_done = 0;

    Bytes reserve = 0;
    bool admitted = false;
    bool in_admission = false;
    bool dram_complete_flag = false;

    std::uint32_t gates_left = 0;  // producer write-back gates
    bool kicked = false;           // some waiter became ready
    Cycles ready = 0;
    bool issued = false;
    bool done = false;
    Cycles issue_time = 0;
    Cycles done_time = 0;
    GateRef issue_gate;
    std::uint32_t refcount = 0;
    std::vector<EventId> waiters;
};

struct EvState {
    std::uint32_t deps_left = 0;
    Cycles ready = 0;
    bool ready_known = false;
    std::uint32_t flows_left = 0;
    Bytes reserve = 0;
    bool needs_admission = false;
    bool admitted = false;
    bool in_admission = false;
    bool issued = false;
    bool finished = false;
    Cycles start = 0;
    Cycles finish = 0;
    GateRef gate;
    Cycles last_gate_time = 0;
    TileCost cost;
    double throttle_scale = 1.0;
};

struct AdmissionEntry {
    Bytes bytes = 0;
    bool is_flow = false;
    std::uint32_t id = 0;
};

struct CoreState {
    Cycles compute_free = 0;
    EventId compute_last = kNoEvent;
    // Per-core DMA: one read flow and one write flow dispatch at a time;
    // reads and writes overlap (prefetch during write-back).
    Cycles dram_read_cursor = 0;
    Cycles dram_write_cursor = 0;
    Bytes sram_free = 0;
    std::deque<AdmissionEntry> admission;
    std::deque<std::uint32_t> in_queue, out_queue;
    bool in_busy = false, out_busy = false;
    Cycles busy_cycles = 0;
};

// Lazily walked per-channel request stream of one flow.
struct ChanPart {
    std::uint32_t flow = kNone;
    DramRange range;
    Addr next_addr = 0;
    Bytes range_left = 0;
    Cycles next_arrival = 0;  // refresh-shifted
    Cycles next_nominal = 0;
    Cycles pace = 1;
    bool write = false;
    EventId order_event = 0;
    std::uint64_t seq = 0;
    std::uint64_t tracker_key = 0;
    bool tracked = false;
    bool preadmitted = false;  // tracker already counted the next request
};

struct PartOrder {
    Cycles arrival;
    EventId event;
    std::uint64_t seq;
    std::uint32_t part;
    bool operator>(const PartOrder& o) const {
        return std::tie(arrival, event, seq) > std::tie(o.arrival, o.event, o.seq);
    }
};

struct ChanState {
    std::unique_ptr<ChannelSim> sim;
    std::priority_queue<PartOrder, std::vector<PartOrder>, std::greater<>> pending;
    Cycles next_poll = ~0ull;
    std::uint64_t requests = 0;
    std::uint64_t hits = 0;
    std::uint64_t conflicts = 0;
};

struct SramRegionState {
    Bytes bytes = 0;
    CoreId core = 0;
    EventId reserver = kNoEvent;
    std::uint32_t users_left = 0;
    bool counted = false;
};

struct TrackerState {
    std::unique_ptr<GroupTracker> tracker;
    std::map<CoreId, std::uint64_t> next_index;
    // Per-core FIFO of parts waiting on the tracker; only the head has a
    // stall registered with it.
    std::map<CoreId, std::deque<std::uint32_t>> waiting;
    bool disabled = false;
};

enum class OccKind : std::uint8_t {
    EventReady = 0,
    TryIssue = 1,
    EventFinish = 2,
    FlowDramDone = 3,
    FlowNocDone = 4,
    ChannelPoll = 5,
    NocCheck = 6,
};

struct Occurrence {
    Cycles time;
    OccKind kind;
    std::uint64_t a;
    std::uint64_t seq;
    bool operator>(const Occurrence& o) const {
        return std::tie(time, kind, a, seq) > std::tie(o.time, o.kind, o.a, o.seq);
    }
};

class Engine {
public:
    Engine(const ExecutionGraph& graph, const PlacementPlan& placement, const ChipSpec& spec,
           const SimOptions& opts)
        : graph_(graph),
          spec_(spec),
          opts_(opts),
          geom_(derive_geometry(spec)),
          chan_params_(channel_params_from(spec, geom_)),
          cost_model_(spec),
          energy_(spec, opts.energy),
          power_(spec, opts.energy),
          noc_(spec.noc_link_bw, spec.noc_hop_latency) {
        if (opts_.refresh) refresh_ = RefreshSchedule::from_spec(spec);
        resolve_spans(placement);
        channels_.resize(geom_.channel_count);
        for (auto& ch : channels_) ch.sim = std::make_unique<ChannelSim>(chan_params_);
        cores_.resize(spec_.num_cores);
        for (auto& c : cores_) c.sram_free = spec_.sram_per_core;
        ev_.resize(graph_.events.size());
        successors_.resize(graph_.events.size());
        event_flows_.resize(graph_.events.size());
        plan();
    }

    SimReport run();

private:
    void resolve_spans(const PlacementPlan& placement);
    const DramSpan* span_of(TensorId t) const {
        return spans_[t].has_value() ? &*spans_[t] : nullptr;
    }
    CoreId sram_core(TensorId t) const;
    void plan();
    void plan_compute(const Event& e);
    void plan_movedata(const Event& e);
    std::uint32_t make_flow(Flow f);
    std::uint32_t fetch_flow_for(TensorId tensor, CoreId core, const Event& reader,
                                 bool shared = true);
    Route gather_route(const DramSpan& span, CoreId core) const;
    std::uint32_t group_of_core(CoreId c) const;

    void schedule(Cycles t, OccKind k, std::uint64_t a) {
        heap_.push(Occurrence{t, k, a, occ_seq_++});
    }
    void on_event_ready(EventId e, Cycles now);
    void on_try_issue(EventId e, Cycles now);
    void on_event_finish(EventId e, Cycles now);
    void kick_flow(std::uint32_t f, Cycles now, GateRef gate);
    void try_issue_flow(std::uint32_t f, Cycles now);
    void admit_from_queue(CoreId core, Cycles now, GateRef releaser);
    void issue_flow(std::uint32_t f, Cycles now);
    void flow_noc_complete(std::uint32_t f, Cycles now);
    void maybe_finish_flow(std::uint32_t f, Cycles now);
    void pump_port(CoreId core, bool outbound, Cycles now);
    void poll_channel(ChannelId ch, Cycles now);
    void schedule_poll(ChannelId ch, Cycles t);
    void reschedule_noc_check();
    void release_sram(CoreId core, Bytes bytes, Cycles now, GateRef releaser);
    void notify_successors(EventId e, Cycles now);
    void region_user_finished(TensorId t, Cycles now);
    void fetch_reader_finished(std::uint32_t flow, Cycles now);
    double concurrent_dram_watts(CoreId core) const;
    void insert_part(std::uint32_t part_idx);
    void serve_part(std::uint32_t part_idx, Cycles now);

    SimReport assemble(Cycles total);

    const ExecutionGraph& graph_;
    ChipSpec spec_;
    SimOptions opts_;
    DerivedGeometry geom_;
    ChannelParams chan_params_;
    TileCostModel cost_model_;
    EnergyAccounting energy_;
    PowerDensityModel power_;
    FluidNoc noc_;
    RefreshSchedule refresh_{};

    std::vector<std::optional<DramSpan>> spans_;
    std::vector<EvState> ev_;
    std::vector<std::vector<EventId>> successors_;
    std::vector<std::vector<std::uint32_t>> event_flows_;  // kicked at event-ready
    std::vector<Flow> flows_;
    std::vector<ChanPart> parts_;
    std::vector<CoreState> cores_;
    std::vector<ChanState> channels_;
    std::map<std::pair<CoreId, TensorId>, std::uint32_t> residency_;
    std::map<std::pair<EventId, TensorId>, std::uint32_t> copy_flows_;
    std::map<TensorId, std::vector<std::uint32_t>> gated_fetches_;
    std::map<TensorId, SramRegionState> regions_;
    std::map<std::uint64_t, TrackerState> trackers_;
    std::map<std::uint64_t, std::uint64_t> noc_transfer_to_flow_;

    std::priority_queue<Occurrence, std::vector<Occurrence>, std::greater<>> heap_;
    std::uint64_t occ_seq_ = 0;
    std::uint64_t part_seq_ = 0;

    Cycles noc_busy_ = 0;
    Cycles sync_wait_ = 0;
    std::uint64_t fetch_flows_ = 0;
    std::uint64_t tracker_max_spread_ = 0;
    std::uint64_t tracker_disabled_ = 0;
    std::uint64_t macs_useful_ = 0, macs_total_ = 0;
    std::vector<std::string> warnings_;
};

void Engine::resolve_spans(const PlacementPlan& placement) {
    spans_.resize(graph_.tensors.size());
    for (const TensorRegion& t : graph_.tensors) {
        if (t.is_view()) continue;
        if (const auto* direct = std::get_if<DramSpan>(&t.location)) {
            spans_[t.id] = *direct;
        } else if (t.unplaced()) {
            const DramSpan* placed = placement.find(t.id);
            if (!placed)
                throw ValidationError("tensor " + std::to_string(t.id) + " has no placement entry");
            spans_[t.id] = *placed;
        }
    }
    for (const TensorRegion& t : graph_.tensors) {
        if (!t.is_view()) continue;
        const auto& parent = spans_[t.parent];
        if (!parent.has_value())
            throw ValidationError("view tensor " + std::to_string(t.id) + " has an unplaced parent");
        spans_[t.id] = slice_span(*parent, t.parent_offset, t.size_bytes);
    }
}

CoreId Engine::sram_core(TensorId t) const {
    const auto* s = std::get_if<CoreSram>(&graph_.tensor(t).location);
    return s ? s->core : kNone;
}

std::uint32_t Engine::group_of_core(CoreId c) const {
    const std::uint32_t g = spec_.core_group_size;
    std::uint32_t gr = 1, gc = g;
    std::uint32_t best_diff = ~0u;
    for (std::uint32_t r = 1; r <= g; ++r) {
        if (g % r != 0) continue;
        const std::uint32_t cc = g / r;
        if (r <= geom_.grid_rows && cc <= geom_.grid_cols && geom_.grid_rows % r == 0 &&
            geom_.grid_cols % cc == 0) {
            const std::uint32_t diff = r > cc ? r - cc : cc - r;
            if (diff < best_diff) {
                best_diff = diff;
                gr = r;
                gc = cc;
            }
        }
    }
    const std::uint32_t row = geom_.core_row(c) / gr;
    const std::uint32_t col = geom_.core_col(c) / gc;
    return row * (geom_.grid_cols / gc) + col;
}

Route Engine::gather_route(const DramSpan& span, CoreId core) const {
    Route best;
    std::uint32_t best_hops = 0;
    for (const DramRange& r : span.ranges) {
        if (r.channel == core) continue;
        Route rt = route(static_cast<CoreId>(r.channel), core, spec_.noc_topology, geom_);
        if (rt.hop_count() > best_hops || best.links.empty()) {
            best_hops = rt.hop_count();
            best = std::move(rt);
        }
    }
    return best;
}

std::uint32_t Engine::make_flow(Flow f) {
    f.id = static_cast<std::uint32_t>(flows_.size());
    flows_.push_back(std::move(f));
    return flows_.back().id;
}

std::uint32_t Engine::fetch_flow_for(TensorId tensor, CoreId core, const Event& reader,
                                     bool shared) {
    const auto key = std::make_pair(core, tensor);
    auto it = shared ? residency_.find(key) : residency_.end();
    if (it != residency_.end()) {
        Flow& f = flows_[it->second];
        f.refcount += 1;
        f.waiters.push_back(reader.id);
        event_flows_[reader.id].push_back(it->second);
        return it->second;
    }
    const DramSpan* span = span_of(tensor);
    if (!span)
        throw ValidationError("tensor " + std::to_string(tensor) + " is not DRAM-resident");
    Flow f;
    f.kind = FlowKind::Fetch;
    f.owner = reader.id;
    f.core = core;
    f.tensor = tensor;
    f.wave = reader.wave;
    f.bytes = graph_.tensor(tensor).size_bytes;
    f.span = *span;
    f.reserve = f.bytes;
    f.refcount = 1;
    f.waiters.push_back(reader.id);
    for (const DramRange& r : f.span.ranges) {
        f.requests_total += bursts_in(r, chan_params_.interface);
        if (r.channel != core) f.noc_bytes += r.len;
    }
    if (f.noc_bytes > 0) {
        f.noc_needed = true;
        f.noc_route = gather_route(f.span, core);
    }
    const EventId writer = graph_.writer()[tensor];
    if (writer != kNoEvent && graph_.event(writer).kind == EventKind::Compute) {
        f.gates_left = 1;
        gated_fetches_[tensor].push_back(static_cast<std::uint32_t>(flows_.size()));
    }
    const std::uint32_t id = make_flow(std::move(f));
    if (shared) residency_.emplace(key, id);
    event_flows_[reader.id].push_back(id);
    ++fetch_flows_;
    return id;
}

void Engine::plan_compute(const Event& e) {
    EvState& st = ev_[e.id];
    st.cost = cost_model_.cost(e.tile, graph_.tensor(e.tile.output).dtype);
    for (TensorId in : e.tile.inputs) {
        const TensorRegion& t = graph_.tensor(in);
        if (t.in_sram()) {
            const CoreId where = sram_core(in);
            if (where == e.core) continue;
            Flow f;
            f.kind = FlowKind::Copy;
            f.owner = e.id;
            f.core = e.core;
            f.peer = where;
            f.tensor = in;
            f.wave = e.wave;
            f.bytes = t.size_bytes;
            f.reserve = t.size_bytes;
            f.refcount = 1;
            f.noc_needed = true;
            f.noc_bytes = t.size_bytes;
            f.noc_route = route(where, e.core, spec_.noc_topology, geom_);
            f.waiters.push_back(e.id);
            const auto fid = make_flow(std::move(f));
            copy_flows_[{e.id, in}] = fid;
            event_flows_[e.id].push_back(fid);
            st.flows_left += 1;
        } else {
            fetch_flow_for(in, e.core, e);
            st.flows_left += 1;
        }
    }
    const TensorRegion& out = graph_.tensor(e.tile.output);
    if (out.in_sram()) {
        auto& region = regions_[out.id];
        if (!region.counted) {
            region.counted = true;
            region.bytes = out.size_bytes;
            region.core = sram_core(out.id);
            region.reserver = e.id;
        }
        if (region.reserver == e.id) {
            st.reserve += out.size_bytes;
            st.needs_admission = true;
        }
    } else {
        st.reserve += out.size_bytes;  // staging until the write-back drains
        st.needs_admission = true;
    }
}

void Engine::plan_movedata(const Event& e) {
    EvState& st = ev_[e.id];
    if (e.src == kNoTensor) return;
    const TensorRegion& src = graph_.tensor(e.src);
    const TensorRegion& dst = graph_.tensor(e.dst);
    if (src.in_sram() && dst.in_sram()) {
        Flow f;
        f.kind = FlowKind::Copy;
        f.owner = e.id;
        f.core = sram_core(e.dst);
        f.peer = sram_core(e.src);
        f.tensor = e.dst;
        f.wave = e.wave;
        f.bytes = dst.size_bytes;
        f.refcount = 1;
        f.noc_needed = f.peer != f.core;
        f.noc_bytes = dst.size_bytes;
        if (f.noc_needed) f.noc_route = route(f.peer, f.core, spec_.noc_topology, geom_);
        f.waiters.push_back(e.id);
        const auto fid = make_flow(std::move(f));
        event_flows_[e.id].push_back(fid);
        st.flows_left = 1;
    } else if (dst.in_sram()) {
        // Explicit prefetch into an SRAM region: not shared through the
        // residency map (the region itself holds the data afterwards).
        fetch_flow_for(e.src, sram_core(e.dst), e, /*shared=*/false);
        st.flows_left = 1;
    } else if (src.in_sram()) {
        const DramSpan* span = span_of(e.dst);
        if (!span) throw ValidationError("movedata destination has no span");
        Flow f;
        f.kind = FlowKind::Writeback;
        f.owner = e.id;
        f.core = sram_core(e.src);
        f.tensor = e.dst;
        f.wave = e.wave;
        f.bytes = dst.size_bytes;
        f.span = *span;
        f.refcount = 1;
        f.waiters.push_back(e.id);
        for (const DramRange& r : f.span.ranges) {
            f.requests_total += bursts_in(r, chan_params_.interface);
            if (r.channel != f.core) f.noc_bytes += r.len;
        }
        if (f.noc_bytes > 0) {
            f.noc_needed = true;
            f.noc_route = gather_route(f.span, f.core);
        }
        const auto fid = make_flow(std::move(f));
        event_flows_[e.id].push_back(fid);
        st.flows_left = 1;
    } else {
        throw PlanError("movedata between two DRAM spans is not supported");
    }

    if (dst.in_sram()) {
        auto& region = regions_[e.dst];
        if (!region.counted) {
            region.counted = true;
            region.bytes = dst.size_bytes;
            region.core = sram_core(e.dst);
            region.reserver = e.id;
        }
    }
}

void Engine::plan() {
    for (const Event& e : graph_.events) {
        ev_[e.id].deps_left = static_cast<std::uint32_t>(e.deps.size());
        for (EventId d : e.deps) successors_[d].push_back(e.id);
    }
    for (const Event& e : graph_.events) {
        if (e.kind == EventKind::Compute) plan_compute(e);
        else if (e.kind == EventKind::MoveData) plan_movedata(e);
    }

    for (auto& [tid, region] : regions_) {
        std::uint32_t users = 0;
        for (const Event& e : graph_.events) {
            if (e.kind == EventKind::Compute && e.tile.output == tid) ++users;
            if (e.kind == EventKind::MoveData && e.dst == tid) ++users;
        }
        users += static_cast<std::uint32_t>(graph_.readers()[tid].size());
        region.users_left = users;
    }

    // SRAM reservations for movedata destinations ride on the flow: the
    // region's bytes when this movedata is the region reserver, nothing when
    // the region was reserved earlier.
    for (Flow& f : flows_) {
        const Event& owner = graph_.event(f.owner);
        if (owner.kind != EventKind::MoveData) continue;
        if (f.kind == FlowKind::Writeback) {
            f.reserve = 0;  // source region already resident
            continue;
        }
        auto it = regions_.find(owner.dst);
        f.reserve = (it != regions_.end() && it->second.reserver == f.owner) ? it->second.bytes
                                                                             : Bytes{0};
    }

    if (opts_.tracker && spec_.core_group_size > 1) {
        std::map<std::uint64_t, std::map<CoreId, std::uint64_t>> totals;
        for (const Flow& f : flows_) {
            if (f.kind != FlowKind::Fetch || f.wave == kNoWave) continue;
            const std::uint64_t key =
                (static_cast<std::uint64_t>(group_of_core(f.core)) << 32) | f.wave;
            totals[key][f.core] += f.requests_total;
        }
        for (const auto& [key, per_core] : totals) {
            if (per_core.size() < 2) continue;
            bool equal = true;
            const std::uint64_t first = per_core.begin()->second;
            for (const auto& [c, n] : per_core) equal = equal && n == first;
            TrackerState ts;
            if (!equal) {
                ts.disabled = true;
                ++tracker_disabled_;
                warnings_.push_back("tracker disabled for group " + std::to_string(key >> 32) +
                                    " wave " + std::to_string(key & 0xffffffffu) +
                                    ": heterogeneous per-core request counts");
            } else {
                std::vector<CoreId> members;
                for (const auto& [c, n] : per_core) members.push_back(c);
                ts.tracker = std::make_unique<GroupTracker>(members);
                for (CoreId c : members) ts.next_index[c] = 0;
            }
            trackers_.emplace(key, std::move(ts));
        }
    }
}

void Engine::on_event_ready(EventId eid, Cycles now) {
    const Event& e = graph_.event(eid);
    EvState& st = ev_[eid];
    st.ready = now;
    st.ready_known = true;
    if (st.last_gate_time < now) st.last_gate_time = now;

    if (e.kind == EventKind::Sync || (e.kind == EventKind::MoveData && e.src == kNoTensor)) {
        st.start = now;
        st.finish = now;
        schedule(now, OccKind::EventFinish, eid);
        return;
    }

    // The kick gate is whatever made this event ready, not the event itself
    // (the event's completion may in turn wait for the flow).
    for (std::uint32_t fid : event_flows_[eid]) {
        kick_flow(fid, now, st.gate);
    }
    if (st.needs_admission && !st.in_admission && !st.admitted) {
        st.in_admission = true;
        cores_[e.core].admission.push_back(AdmissionEntry{st.reserve, false, eid});
        admit_from_queue(e.core, now, st.gate);
    } else if (!st.needs_admission) {
        st.admitted = true;
    }
    if (st.flows_left == 0 && st.admitted) schedule(now, OccKind::TryIssue, eid);
}

void Engine::kick_flow(std::uint32_t fid, Cycles now, GateRef gate) {
    Flow& f = flows_[fid];
    if (f.issued || f.done) return;
    f.kicked = true;
    if (f.ready < now) {
        f.ready = now;
        f.issue_gate = gate;
    }
    if (f.gates_left > 0) return;
    try_issue_flow(fid, now);
}

void Engine::try_issue_flow(std::uint32_t fid, Cycles now) {
    Flow& f = flows_[fid];
    if (f.issued || !f.kicked || f.gates_left > 0) return;
    if (f.reserve > 0 && !f.admitted) {
        if (!f.in_admission) {
            f.in_admission = true;
            cores_[f.core].admission.push_back(AdmissionEntry{f.reserve, true, fid});
            admit_from_queue(f.core, now, f.issue_gate);
        }
        return;
    }
    issue_flow(fid, now);
}

void Engine::admit_from_queue(CoreId core_id, Cycles now, GateRef releaser) {
    CoreState& core = cores_[core_id];
    while (!core.admission.empty()) {
        AdmissionEntry& head = core.admission.front();
        if (head.bytes > core.sram_free) break;
        core.sram_free -= head.bytes;
        const AdmissionEntry entry = head;
        core.admission.pop_front();
        if (entry.is_flow) {
            Flow& f = flows_[entry.id];
            f.admitted = true;
            if (f.ready < now) {
                f.ready = now;
                f.issue_gate = releaser;
            }
            if (f.kicked && f.gates_left == 0) issue_flow(entry.id, std::max(f.ready, now));
        } else {
            EvState& st = ev_[entry.id];
            st.admitted = true;
            if (st.last_gate_time < now) {
                st.last_gate_time = now;
                st.gate = releaser;
            }
            if (st.ready_known && st.flows_left == 0) schedule(now, OccKind::TryIssue, entry.id);
        }
    }
}

void Engine::issue_flow(std::uint32_t fid, Cycles now) {
    Flow& f = flows_[fid];
    if (f.issued) return;
    f.issued = true;
    f.issue_time = std::max(now, f.ready);

    if (!f.span.ranges.empty()) {
        const bool tracked_wave =
            f.kind == FlowKind::Fetch && f.wave != kNoWave && spec_.core_group_size > 1;
        std::uint64_t tracker_key = 0;
        bool tracked = false;
        if (tracked_wave) {
            tracker_key = (static_cast<std::uint64_t>(group_of_core(f.core)) << 32) | f.wave;
            auto it = trackers_.find(tracker_key);
            tracked = it != trackers_.end() && !it->second.disabled && it->second.tracker;
        }
        // Requests dispatch in consumption order at the SRAM port rate; the
        // per-core DMA engine issues one flow at a time.
        const bool write = f.kind == FlowKind::Writeback;
        const std::uint32_t port_bw = write ? spec_.sram_read_bw : spec_.sram_write_bw;
        const Cycles gap = std::max<Cycles>(1, chan_params_.interface / std::max(port_bw, 1u));
        CoreState& core = cores_[f.core];
        Cycles& cursor = write ? core.dram_write_cursor : core.dram_read_cursor;
        const Cycles dispatch_start = std::max(f.issue_time, cursor);
        cursor = dispatch_start + f.requests_total * gap;
        const std::uint64_t nparts = f.span.ranges.size();
        std::uint64_t j = 0;
        for (const DramRange& r : f.span.ranges) {
            ChanPart p;
            p.flow = fid;
            p.range = r;
            p.next_addr = r.offset / chan_params_.interface * chan_params_.interface;
            p.range_left = bursts_in(r, chan_params_.interface) * chan_params_.interface;
            p.next_nominal = dispatch_start + j * gap;
            p.pace = gap * nparts;  // round-robin across the flow's channels
            p.write = write;
            p.order_event = f.owner;
            p.seq = part_seq_++;
            p.tracked = tracked;
            p.tracker_key = tracker_key;
            p.next_arrival = opts_.refresh && refresh_.interval
                                 ? apply_refresh(MemoryRequest{p.next_addr,
                                                               p.write ? MemOp::Write : MemOp::Read,
                                                               p.next_nominal, p.order_event},
                                                 refresh_, chan_params_)
                                 : p.next_nominal;
            parts_.push_back(p);
            insert_part(static_cast<std::uint32_t>(parts_.size() - 1));
            ++j;
        }
        f.dram_complete_flag = f.requests_total == 0;
    } else {
        f.dram_complete_flag = true;
        f.dram_done = f.issue_time;
    }

    if (f.noc_needed && f.noc_bytes > 0) {
        const bool outbound = f.kind == FlowKind::Writeback;
        CoreState& core = cores_[f.core];
        (outbound ? core.out_queue : core.in_queue).push_back(fid);
        pump_port(f.core, outbound, f.issue_time);
    } else {
        f.noc_complete = true;
        f.noc_done = f.issue_time;
    }
    maybe_finish_flow(fid, f.issue_time);
}

void Engine::insert_part(std::uint32_t part_idx) {
    const ChanPart& p = parts_[part_idx];
    const ChannelId ch = p.range.channel;
    channels_[ch].pending.push(PartOrder{p.next_arrival, p.order_event, p.seq, part_idx});
    schedule_poll(ch, p.next_arrival);
}

void Engine::schedule_poll(ChannelId ch, Cycles t) {
    ChanState& c = channels_[ch];
    if (t < c.next_poll) {
        c.next_poll = t;
        schedule(t, OccKind::ChannelPoll, ch);
    }
}

void Engine::serve_part(std::uint32_t part_idx, Cycles now) {
    ChanPart& p = parts_[part_idx];
    ChanState& c = channels_[p.range.channel];
    Flow& f = flows_[p.flow];

    const Bytes req_bytes = std::min<Bytes>(chan_params_.interface, p.range_left);
    MemoryRequest r;
    r.addr = p.next_addr;
    r.op = p.write ? MemOp::Write : MemOp::Read;
    r.arrival = p.next_arrival;
    r.event = p.order_event;
    const ServeOutcome out = c.sim->serve(r);
    c.requests += 1;
    c.hits += out.row_hit ? 1 : 0;
    c.conflicts += out.row_conflict ? 1 : 0;
    f.conflict_cycles += out.conflict_stall;
    f.dram_busy += chan_params_.burst_beats;
    f.requests_done += 1;
    f.dram_done = std::max(f.dram_done, out.departure);
    energy_.add_dram(req_bytes);
    energy_.add_sram(req_bytes);

    if (p.range_left > req_bytes) {
        p.range_left -= req_bytes;
        p.next_addr += req_bytes;
        p.next_nominal = std::max(p.next_nominal + p.pace, now);
        p.next_arrival =
            opts_.refresh && refresh_.interval
                ? apply_refresh(MemoryRequest{p.next_addr, r.op, p.next_nominal, p.order_event},
                                refresh_, chan_params_)
                : p.next_nominal;
        insert_part(part_idx);
    }

    if (f.requests_done == f.requests_total) {
        f.dram_complete_flag = true;
        schedule(f.dram_done, OccKind::FlowDramDone, p.flow);
    }
}

void Engine::poll_channel(ChannelId ch, Cycles now) {
    ChanState& c = channels_[ch];
    if (now != c.next_poll) return;  // superseded by an earlier or later poll
    c.next_poll = ~0ull;
    while (!c.pending.empty() && c.pending.top().arrival <= now) {
        const PartOrder top = c.pending.top();
        c.pending.pop();
        ChanPart& p = parts_[top.part];
        if (p.next_arrival != top.arrival) continue;  // stale queue entry
        if (p.tracked && !p.preadmitted) {
            TrackerState& ts = trackers_.at(p.tracker_key);
            const CoreId core = flows_[p.flow].core;
            auto& waiting = ts.waiting[core];
            if (!waiting.empty()) {  // in line behind an already-stalled request
                waiting.push_back(top.part);
                continue;
            }
            const std::uint64_t idx = ts.next_index[core];
            const auto admit = ts.tracker->admit(core, idx);
            tracker_max_spread_ = std::max(tracker_max_spread_, ts.tracker->spread());
            if (!admit.dispatched) {
                waiting.push_back(top.part);
                continue;
            }
            ts.next_index[core] = idx + 1;
            serve_part(top.part, now);
            // Dispatching may release stalled peers; their requests re-enter
            // their channel queues at this instant, order preserved. Each
            // released core then dispatches or re-registers its next waiter.
            auto requeue = [&](std::uint32_t part_idx) {
                ChanPart& rp = parts_[part_idx];
                if (rp.next_arrival < now) rp.next_arrival = now;
                if (rp.next_nominal < now) rp.next_nominal = now;
                rp.preadmitted = true;
                insert_part(part_idx);
            };
            for (;;) {
                const auto released = ts.tracker->take_released();
                if (released.empty()) break;
                for (const auto& [ridx, rcore] : released) {
                    auto& rq = ts.waiting[rcore];
                    if (rq.empty()) continue;
                    const std::uint32_t head = rq.front();
                    rq.pop_front();
                    ts.next_index[rcore] = ridx + 1;
                    requeue(head);
                    while (!rq.empty()) {
                        const std::uint64_t nidx = ts.next_index[rcore];
                        const auto nadmit = ts.tracker->admit(rcore, nidx);
                        tracker_max_spread_ =
                            std::max(tracker_max_spread_, ts.tracker->spread());
                        if (!nadmit.dispatched) break;
                        ts.next_index[rcore] = nidx + 1;
                        const std::uint32_t next_part = rq.front();
                        rq.pop_front();
                        requeue(next_part);
                    }
                }
            }
            continue;
        }
        if (p.preadmitted) p.preadmitted = false;
        serve_part(top.part, now);
    }
    if (!c.pending.empty()) schedule_poll(ch, c.pending.top().arrival);
}

void Engine::pump_port(CoreId core_id, bool outbound, Cycles now) {
    CoreState& core = cores_[core_id];
    bool& busy = outbound ? core.out_busy : core.in_busy;
    auto& q = outbound ? core.out_queue : core.in_queue;
    if (busy || q.empty()) return;
    const std::uint32_t fid = q.front();
    q.pop_front();
    busy = true;
    Flow& f = flows_[fid];
    f.noc_start = now;
    noc_.advance(now);
    const auto tid = noc_.start(f.noc_bytes, f.noc_route, now);
    noc_transfer_to_flow_[tid] = fid;
    reschedule_noc_check();
}

void Engine::reschedule_noc_check() {
    const auto nc = noc_.next_completion();
    if (nc) schedule(nc->first, OccKind::NocCheck, noc_.generation());
}

void Engine::flow_noc_complete(std::uint32_t fid, Cycles now) {
    Flow& f = flows_[fid];
    f.noc_complete = true;
    f.noc_done = now;
    maybe_finish_flow(fid, now);
}

void Engine::maybe_finish_flow(std::uint32_t fid, Cycles now) {
    Flow& f = flows_[fid];
    if (f.done || !f.issued) return;
    const bool dram_ok = f.dram_complete_flag && f.requests_done == f.requests_total;
    if (!dram_ok || !f.noc_complete) return;
    if (std::max(f.dram_done, f.noc_done) > now) return;  // completion occurrence pending
    f.done = true;
    f.done_time = std::max({now, f.dram_done, f.noc_done});

    // A finished write-back releases the fetches gated on this tensor.
    if (f.kind == FlowKind::Writeback) {
        auto git = gated_fetches_.find(f.tensor);
        if (git != gated_fetches_.end()) {
            for (std::uint32_t gf : git->second) {
                Flow& g = flows_[gf];
                if (g.gates_left > 0) {
                    g.gates_left -= 1;
                    if (g.ready < f.done_time) {
                        g.ready = f.done_time;
                        g.issue_gate = GateRef{GateRef::Flow, fid};
                    }
                    if (g.gates_left == 0 && g.kicked) try_issue_flow(gf, f.done_time);
                }
            }
        }
        // Write-back staging bytes release with the flow.
        if (f.owner != kNoEvent && graph_.event(f.owner).kind == EventKind::Compute) {
            release_sram(f.core, ev_[f.owner].reserve, f.done_time, GateRef{GateRef::Flow, fid});
        }
    }

    for (EventId w : f.waiters) {
        EvState& st = ev_[w];
        if (st.flows_left == 0) continue;
        st.flows_left -= 1;
        if (st.last_gate_time < f.done_time) {
            st.last_gate_time = f.done_time;
            st.gate = GateRef{GateRef::Flow, fid};
        }
        if (st.flows_left == 0 && st.ready_known && (st.admitted || !st.needs_admission)) {
            st.admitted = true;
            schedule(f.done_time, OccKind::TryIssue, w);
        }
    }
}

void Engine::on_try_issue(EventId eid, Cycles now) {
    const Event& e = graph_.event(eid);
    EvState& st = ev_[eid];
    if (st.issued || st.finished || !st.ready_known) return;
    if (st.flows_left > 0 || (st.needs_admission && !st.admitted)) return;

    if (e.kind == EventKind::MoveData) {
        st.issued = true;
        st.start = st.ready;
        st.finish = std::max(st.last_gate_time, now);
        schedule(st.finish, OccKind::EventFinish, eid);
        return;
    }

    CoreState& core = cores_[e.core];
    const Cycles start = std::max(now, core.compute_free);
    GateRef gate = st.gate;
    if (start > st.last_gate_time && core.compute_last != kNoEvent) {
        gate = GateRef{GateRef::Event, core.compute_last};
    }

    double scale = 1.0;
    if (!power_.unlimited() && st.cost.cycles > 0) {
        const double seconds = static_cast<double>(st.cost.cycles) / (spec_.core_freq_ghz * 1e9);
        const double compute_w =
            compute_dynamic_energy(e.tile.kind, st.cost, opts_.energy) / seconds;
        scale = power_.compute_scale(compute_w, concurrent_dram_watts(e.core));
    }
    st.throttle_scale = scale;
    const Cycles duration =
        scale >= 1.0 ? st.cost.cycles
                     : static_cast<Cycles>(
                           std::ceil(static_cast<double>(st.cost.cycles) / scale - 1e-9));
    st.issued = true;
    st.start = start;
    st.finish = start + duration;
    st.gate = gate;
    core.compute_free = st.finish;
    core.compute_last = eid;
    core.busy_cycles += duration;
    schedule(st.finish, OccKind::EventFinish, eid);
}

double Engine::concurrent_dram_watts(CoreId core_id) const {
    const ChanState& c = channels_[core_id];
    if (c.pending.empty()) return 0.0;
    const double bytes_per_cycle = static_cast<double>(chan_params_.interface) /
                                   static_cast<double>(chan_params_.burst_beats);
    return bytes_per_cycle * (opts_.energy.dram_pj_per_byte + opts_.energy.tsv_pj_per_byte) *
           1e-12 * spec_.dram_freq_ghz * 1e9;
}

void Engine::on_event_finish(EventId eid, Cycles now) {
    const Event& e = graph_.event(eid);
    EvState& st = ev_[eid];
    if (st.finished) return;
    if (e.kind == EventKind::MoveData && e.src != kNoTensor) {
        // Completion time is carried by the flow; st.finish was set at issue.
        if (st.finish > now) return;
    }
    st.finished = true;

    if (e.kind == EventKind::Sync) {
        Cycles earliest = st.finish;
        for (EventId d : e.deps) earliest = std::min(earliest, ev_[d].finish);
        sync_wait_ += st.finish - earliest;
        for (EventId d : e.deps) {
            if (ev_[d].finish == st.finish) {
                st.gate = GateRef{GateRef::Event, d};
                break;
            }
        }
    }

    if (e.kind == EventKind::Compute) {
        energy_.add_compute(e.tile.kind, st.cost);
        if (e.tile.kind == OpKind::MatMul) {
            macs_useful_ += st.cost.macs_useful;
            macs_total_ += st.cost.macs_total;
        }
        const TensorRegion& out = graph_.tensor(e.tile.output);
        if (!out.in_sram()) {
            const DramSpan* span = span_of(e.tile.output);
            if (!span) throw ValidationError("compute output has no span");
            Flow f;
            f.kind = FlowKind::Writeback;
            f.owner = eid;
            f.core = e.core;
            f.tensor = e.tile.output;
            f.wave = e.wave;
            f.bytes = out.size_bytes;
            f.span = *span;
            for (const DramRange& r : f.span.ranges) {
                f.requests_total += bursts_in(r, chan_params_.interface);
                if (r.channel != f.core) f.noc_bytes += r.len;
            }
            if (f.noc_bytes > 0) {
                f.noc_needed = true;
                f.noc_route = gather_route(f.span, f.core);
            }
            const std::uint32_t fid = make_flow(std::move(f));
            flows_[fid].kicked = true;
            flows_[fid].ready = now;
            flows_[fid].issue_gate = GateRef{GateRef::Event, eid};
            issue_flow(fid, now);
        } else {
            region_user_finished(e.tile.output, now);
        }
        for (TensorId in : e.tile.inputs) {
            const TensorRegion& t = graph_.tensor(in);
            if (t.in_sram()) {
                if (sram_core(in) == e.core) {
                    region_user_finished(in, now);
                } else {
                    auto cit = copy_flows_.find({eid, in});
                    if (cit != copy_flows_.end()) {
                        Flow& f = flows_[cit->second];
                        if (f.reserve > 0) {
                            release_sram(f.core, f.reserve, now, GateRef{GateRef::Event, eid});
                            f.reserve = 0;
                        }
                    }
                    region_user_finished(in, now);
                }
            } else {
                auto it = residency_.find(std::make_pair(e.core, in));
                if (it != residency_.end()) fetch_reader_finished(it->second, now);
            }
        }
    }

    if (e.kind == EventKind::MoveData && e.src != kNoTensor) {
        const TensorRegion& src = graph_.tensor(e.src);
        if (src.in_sram()) {
            region_user_finished(e.src, now);
        } else {
            const TensorRegion& dst = graph_.tensor(e.dst);
            if (dst.in_sram()) {
                auto it = residency_.find(std::make_pair(sram_core(e.dst), e.src));
                if (it != residency_.end()) fetch_reader_finished(it->second, now);
            }
        }
        const TensorRegion& dst = graph_.tensor(e.dst);
        if (dst.in_sram()) region_user_finished(e.dst, now);
    }

    notify_successors(eid, now);
}

void Engine::notify_successors(EventId eid, Cycles now) {
    EvState& st = ev_[eid];
    for (EventId s : successors_[eid]) {
        EvState& succ = ev_[s];
        if (succ.deps_left == 0) continue;
        succ.deps_left -= 1;
        if (succ.last_gate_time < st.finish) {
            succ.last_gate_time = st.finish;
            succ.gate = GateRef{GateRef::Event, eid};
        }
        if (succ.deps_left == 0) schedule(std::max(now, st.finish), OccKind::EventReady, s);
    }
}

void Engine::region_user_finished(TensorId t, Cycles now) {
    auto it = regions_.find(t);
    if (it == regions_.end()) return;
    SramRegionState& r = it->second;
    if (r.users_left == 0) return;
    r.users_left -= 1;
    if (r.users_left == 0 && r.reserver != kNoEvent) {
        release_sram(r.core, r.bytes, now, GateRef{GateRef::Origin, 0});
    }
}

void Engine::fetch_reader_finished(std::uint32_t fid, Cycles now) {
    Flow& f = flows_[fid];
    if (f.refcount == 0) return;
    f.refcount -= 1;
    if (f.refcount == 0 && f.reserve > 0) {
        release_sram(f.core, f.reserve, now, GateRef{GateRef::Flow, fid});
        f.reserve = 0;
        residency_.erase(std::make_pair(f.core, f.tensor));
    }
}

void Engine::release_sram(CoreId core_id, Bytes bytes, Cycles now, GateRef releaser) {
    if (bytes == 0) return;
    CoreState& core = cores_[core_id];
    core.sram_free = std::min<Bytes>(core.sram_free + bytes, spec_.sram_per_core);
    admit_from_queue(core_id, now, releaser);
}

SimReport Engine::run() {
    for (const Event& e : graph_.events) {
        if (ev_[e.id].deps_left == 0) schedule(0, OccKind::EventReady, e.id);
    }

    std::uint64_t processed = 0;
    while (!heap_.empty()) {
        const Occurrence occ = heap_.top();
        heap_.pop();
        switch (occ.kind) {
            case OccKind::EventReady:
                on_event_ready(static_cast<EventId>(occ.a), occ.time);
                break;
            case OccKind::TryIssue:
                on_try_issue(static_cast<EventId>(occ.a), occ.time);
                break;
            case OccKind::EventFinish:
                on_event_finish(static_cast<EventId>(occ.a), occ.time);
                ++processed;
                break;
            case OccKind::FlowDramDone:
                maybe_finish_flow(static_cast<std::uint32_t>(occ.a), occ.time);
                break;
            case OccKind::FlowNocDone:
                flow_noc_complete(static_cast<std::uint32_t>(occ.a), occ.time);
                break;
            case OccKind::ChannelPoll:
                poll_channel(static_cast<ChannelId>(occ.a), occ.time);
                break;
            case OccKind::NocCheck: {
                if (occ.a != noc_.generation()) break;
                noc_.advance(occ.time);
                while (true) {
                    const auto nc = noc_.next_completion();
                    if (!nc || nc->first > occ.time) break;
                    const std::uint64_t tid = nc->second;
                    const auto fit = noc_transfer_to_flow_.find(tid);
                    noc_.complete(tid);
                    if (fit != noc_transfer_to_flow_.end()) {
                        const auto fid = static_cast<std::uint32_t>(fit->second);
                        noc_transfer_to_flow_.erase(fit);
                        Flow& f = flows_[fid];
                        noc_busy_ += occ.time - f.noc_start;
                        energy_.add_noc(f.noc_bytes, f.noc_route.hop_count());
                        const bool outbound = f.kind == FlowKind::Writeback;
                        CoreState& core = cores_[f.core];
                        (outbound ? core.out_busy : core.in_busy) = false;
                        pump_port(f.core, outbound, occ.time);
                        schedule(occ.time + f.noc_route.hop_count() * spec_.noc_hop_latency,
                                 OccKind::FlowNocDone, fid);
                    }
                }
                reschedule_noc_check();
                break;
            }
        }
    }

    std::vector<EventId> blocked;
    for (const Event& e : graph_.events) {
        if (!ev_[e.id].finished) blocked.push_back(e.id);
    }
    if (!blocked.empty()) {
        std::ostringstream msg;
        msg << "simulation deadlock: " << blocked.size() << " events blocked (first:";
        for (std::size_t i = 0; i < std::min<std::size_t>(blocked.size(), 8); ++i) {
            const EvState& st = ev_[blocked[i]];
            msg << " e" << blocked[i] << "[deps=" << st.deps_left << ",flows=" << st.flows_left
                << ",adm=" << st.admitted << "]";
        }
        msg << ")";
        throw SimError(msg.str());
    }

    Cycles total = 0;
    for (const EvState& st : ev_) total = std::max(total, st.finish);
    for (const Flow& f : flows_) total = std::max(total, f.done_time);

    SimReport rep = assemble(total);
    rep.events_processed = processed;
    return rep;
}

SimReport Engine::assemble(Cycles total) {
    SimReport r;
    r.total_cycles = total;
    r.fetch_flows = fetch_flows_;
    r.noc_busy = noc_busy_;
    r.sync_wait = sync_wait_;
    r.tracker_max_spread = tracker_max_spread_;
    r.tracker_disabled_cohorts = tracker_disabled_;
    r.warnings = warnings_;

    for (const CoreState& c : cores_) r.compute_busy += c.busy_cycles;
    double core_util = 0;
    for (const CoreState& c : cores_)
        core_util += total ? static_cast<double>(c.busy_cycles) / static_cast<double>(total) : 0.0;
    r.avg_core_utilization = core_util / static_cast<double>(cores_.size());

    double chan_util = 0;
    for (const ChanState& c : channels_) {
        r.dram_requests += c.requests;
        r.dram_row_hits += c.hits;
        r.dram_row_conflicts += c.conflicts;
        r.dram_busy += c.sim->busy_cycles();
        chan_util += total ? static_cast<double>(c.sim->busy_cycles()) / static_cast<double>(total)
                           : 0.0;
    }
    r.avg_channel_utilization = chan_util / static_cast<double>(channels_.size());
    for (const Flow& f : flows_) r.row_conflict_stall += f.conflict_cycles;

    r.spatial_utilization = macs_total_ == 0 ? 1.0
                                             : static_cast<double>(macs_useful_) /
                                                   static_cast<double>(macs_total_);
    r.energy = energy_.finalize(total);

    if (opts_.record_timeline) {
        for (const Event& e : graph_.events) {
            const EvState& st = ev_[e.id];
            r.timeline.push_back(TimelineEntry{e.id, static_cast<std::uint8_t>(e.kind), e.core,
                                               st.start, st.finish});
        }
    }

    // Critical-path walk from the latest finisher back through gates.
    GateRef cur{GateRef::Origin, 0};
    Cycles cur_finish = 0;
    for (const Event& e : graph_.events) {
        if (ev_[e.id].finish >= cur_finish) {
            cur_finish = ev_[e.id].finish;
            cur = GateRef{GateRef::Event, e.id};
        }
    }
    std::uint64_t guard = 0;
    const std::uint64_t guard_max = 4 * (graph_.events.size() + flows_.size()) + 16;
    std::vector<std::uint8_t> seen_event(graph_.events.size(), 0);
    std::vector<std::uint8_t> seen_flow(flows_.size(), 0);
    while (cur.kind != GateRef::Origin && guard++ < guard_max) {
        auto& seen = cur.kind == GateRef::Event ? seen_event[cur.id] : seen_flow[cur.id];
        if (seen) break;
        seen = 1;
        if (cur.kind == GateRef::Event) {
            const EvState& st = ev_[cur.id];
            const Event& e = graph_.event(cur.id);
            const Cycles seg = st.finish - st.start;
            if (e.kind == EventKind::Compute) r.critical_path.compute += seg;
            else if (e.kind == EventKind::Sync) r.critical_path.sync_wait += seg;
            cur = st.gate;
        } else {
            const Flow& f = flows_[cur.id];
            const Cycles seg = f.done_time - f.issue_time;
            const bool noc_bound = f.noc_needed && f.noc_done >= f.dram_done;
            if (f.requests_total == 0 || noc_bound) {
                r.critical_path.noc += seg;
            } else {
                r.critical_path.dram_access += seg;
                if (f.dram_busy + f.conflict_cycles > 0 && seg > 0) {
                    const double frac =
                        static_cast<double>(f.conflict_cycles) /
                        static_cast<double>(f.dram_busy + f.conflict_cycles);
                    r.critical_path.row_conflict_stall +=
                        static_cast<Cycles>(frac * static_cast<double>(seg));
                }
            }
            cur = f.issue_gate;
        }
    }
    const Cycles attributed = r.critical_path.sum();
    if (attributed < total) r.critical_path.sync_wait += total - attributed;

    return r;
}

}  // namespace

SimReport simulate(const ExecutionGraph& graph, const PlacementPlan& placement,
                   const ChipSpec& spec, const SimOptions& opts) {
    Engine engine(graph, placement, spec, opts);
    return engine.run();
}

std::string SimReport::to_text() const {
    std::ostringstream o;
    o << "total_cycles: " << total_cycles << "\n";
    o << "critical_path: compute=" << critical_path.compute << " noc=" << critical_path.noc
      << " dram=" << critical_path.dram_access
      << " row_conflict=" << critical_path.row_conflict_stall
      << " sync=" << critical_path.sync_wait << "\n";
    o << "compute_busy: " << compute_busy << "\n";
    o << "noc_busy: " << noc_busy << "\n";
    o << "dram_busy: " << dram_busy << "\n";
    o << "row_conflict_stall: " << row_conflict_stall << "\n";
    o << "dram_requests: " << dram_requests << " hits=" << dram_row_hits
      << " conflicts=" << dram_row_conflicts << "\n";
    o << "avg_core_utilization: " << avg_core_utilization << "\n";
    o << "avg_channel_utilization: " << avg_channel_utilization << "\n";
    o << "spatial_utilization: " << spatial_utilization << "\n";
    o << "tracker_max_spread: " << tracker_max_spread << "\n";
    o << "energy_total_j: " << energy.total() << " static=" << energy.total_static()
      << " dynamic=" << energy.total_dynamic() << "\n";
    return o.str();
}

std::string SimReport::digest() const {
    std::ostringstream o;
    o.precision(17);
    o << total_cycles << "|" << critical_path.compute << "|" << critical_path.noc << "|"
      << critical_path.dram_access << "|" << critical_path.row_conflict_stall << "|"
      << critical_path.sync_wait << "|" << compute_busy << "|" << noc_busy << "|" << dram_busy
      << "|" << row_conflict_stall << "|" << dram_requests << "|" << dram_row_hits << "|"
      << dram_row_conflicts << "|" << energy.total() << "|" << spatial_utilization;
    return o.str();
}

}  // namespace voxel
