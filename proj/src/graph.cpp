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

#include "voxel/graph.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "voxel/mapping.hpp"

namespace voxel {

const char* op_kind_name(OpKind k) {
    switch (k) {
        case OpKind::MatMul: return "matmul";
        case OpKind::Elementwise: return "elementwise";
        case OpKind::Softmax: return "softmax";
        case OpKind::Reduce: return "reduce";
    }
    return "matmul";
}

const char* collective_kind_name(CollectiveKind k) {
    switch (k) {
        case CollectiveKind::AllReduce: return "allreduce";
        case CollectiveKind::AllGather: return "allgather";
        case CollectiveKind::Broadcast: return "broadcast";
        case CollectiveKind::ReduceScatter: return "reducescatter";
    }
    return "allreduce";
}

TileMapPolicy tile_map_policy_from_name(const std::string& name) {
    if (name == "sequential") return TileMapPolicy::Sequential;
    if (name == "dim-ordered" || name == "dimension-ordered") return TileMapPolicy::DimensionOrdered;
    throw ConfigError("unknown tile-map policy '" + name + "' (sequential|dim-ordered)");
}

const char* tile_map_policy_name(TileMapPolicy p) {
    return p == TileMapPolicy::Sequential ? "sequential" : "dim-ordered";
}

OpTile OpTile::matmul(std::uint64_t m, std::uint64_t k, std::uint64_t n,
                      std::vector<TensorId> inputs, TensorId output) {
    OpTile t;
    t.kind = OpKind::MatMul;
    t.m = m;
    t.k = k;
    t.n = n;
    t.inputs = std::move(inputs);
    t.output = output;
    return t;
}

OpTile OpTile::elementwise(std::uint64_t elems, std::uint32_t fused, std::vector<TensorId> inputs,
                           TensorId output) {
    OpTile t;
    t.kind = OpKind::Elementwise;
    t.elems = elems;
    t.fused_inputs = fused;
    t.inputs = std::move(inputs);
    t.output = output;
    return t;
}

OpTile OpTile::softmax(std::uint64_t rows, std::uint64_t cols, std::vector<TensorId> inputs,
                       TensorId output) {
    OpTile t;
    t.kind = OpKind::Softmax;
    t.rows = rows;
    t.cols = cols;
    t.inputs = std::move(inputs);
    t.output = output;
    return t;
}

OpTile OpTile::reduce(std::uint64_t elems, std::vector<TensorId> inputs, TensorId output) {
    OpTile t;
    t.kind = OpKind::Reduce;
    t.elems = elems;
    t.inputs = std::move(inputs);
    t.output = output;
    return t;
}

std::vector<std::uint32_t> folded_ring_order(std::uint32_t n) {
    std::vector<std::uint32_t> order;
    order.reserve(n);
    for (std::uint32_t p = 0; p < n; p += 2) order.push_back(p);
    const std::uint32_t last_odd = (n >= 2) ? ((n % 2 == 0) ? n - 1 : n - 2) : 0;
    for (std::uint32_t p = last_odd; n >= 2 && p >= 1; p -= 2) {
        order.push_back(p);
        if (p < 2) break;
    }
    return order;
}

// ---------------------------------------------------------------------------
// PlanBuilder
// ---------------------------------------------------------------------------

PlanBuilder::PlanBuilder(const ChipSpec& spec, TileMapPolicy policy)
    : spec_(spec), geom_(derive_geometry(spec)), policy_(policy) {}

TensorId PlanBuilder::add_tensor(DType dtype, std::vector<std::uint64_t> shape, Location loc) {
    TensorRegion r;
    r.id = static_cast<TensorId>(graph_.tensors.size());
    r.dtype = dtype;
    r.shape = std::move(shape);
    r.size_bytes = dtype_size(dtype);
    for (auto d : r.shape) r.size_bytes *= d;
    r.location = std::move(loc);
    if (const auto* sram = std::get_if<CoreSram>(&r.location)) {
        if (sram->core >= spec_.num_cores)
            throw PlanError("tensor core id " + std::to_string(sram->core) + " outside grid");
        if (r.size_bytes > spec_.sram_per_core)
            throw PlanError("tensor of " + std::to_string(r.size_bytes) +
                            " B does not fit in sram_per_core");
    }
    graph_.tensors.push_back(std::move(r));
    writer_.push_back(kNoEvent);
    return graph_.tensors.back().id;
}

TensorId PlanBuilder::add_view(TensorId parent, Bytes byte_offset, std::vector<std::uint64_t> shape,
                               DType dtype) {
    const TensorRegion& p = tensor(parent);
    if (p.is_view()) throw PlanError("views of views are not supported");
    if (!(p.unplaced() || p.in_dram()))
        throw PlanError("views require a DRAM-destined parent tensor");
    const TensorId id = add_tensor(dtype, std::move(shape));
    TensorRegion& r = graph_.tensors[id];
    if (byte_offset + r.size_bytes > graph_.tensors[parent].size_bytes)
        throw PlanError("view window exceeds parent tensor " + std::to_string(parent));
    r.parent = parent;
    r.parent_offset = byte_offset;
    return id;
}

TensorId PlanBuilder::add_sram_tensor(DType dtype, std::vector<std::uint64_t> shape, CoreId core,
                                      std::optional<Bytes> offset) {
    const TensorId id = add_tensor(dtype, std::move(shape), CoreSram{core, offset.value_or(0)});
    TensorRegion& r = graph_.tensors[id];
    if (offset) {
        r.explicit_offset = true;
        if (offset.value() + r.size_bytes > spec_.sram_per_core)
            throw PlanError("tensor does not fit in sram_per_core at offset " +
                            std::to_string(*offset));
    }
    return id;
}

const TensorRegion& PlanBuilder::tensor(TensorId id) const {
    if (id >= graph_.tensors.size()) throw PlanError("unknown tensor id " + std::to_string(id));
    return graph_.tensors[id];
}

EventId PlanBuilder::append(Event ev) {
    ev.id = static_cast<EventId>(graph_.events.size());
    graph_.events.push_back(std::move(ev));
    return graph_.events.back().id;
}

EventId PlanBuilder::compute(OpTile tile, std::optional<CoreId> core,
                             std::span<const EventId> after) {
    if (finalized_) throw PlanError("builder already finalized");
    if (tile.output == kNoTensor) throw PlanError("compute tile has no output tensor");
    Bytes working_set = 0;
    for (TensorId in : tile.inputs) working_set += tensor(in).size_bytes;
    working_set += tensor(tile.output).size_bytes;
    if (working_set > spec_.sram_per_core)
        throw PlanError("SRAM over-commit: tile working set " + std::to_string(working_set) +
                        " B exceeds sram_per_core " + std::to_string(spec_.sram_per_core) + " B");

    Event ev;
    ev.kind = EventKind::Compute;
    ev.wave = wave_;
    if (core) {
        if (*core >= spec_.num_cores)
            throw PlanError("core id " + std::to_string(*core) + " outside grid");
        ev.core = *core;
    } else {
        ev.core = spec_.num_cores;  // sentinel until auto-assignment
    }
    for (TensorId in : tile.inputs) {
        if (writer_[in] != kNoEvent) ev.deps.push_back(writer_[in]);
    }
    if (writer_[tile.output] != kNoEvent) ev.deps.push_back(writer_[tile.output]);
    for (EventId d : after) ev.deps.push_back(d);
    std::sort(ev.deps.begin(), ev.deps.end());
    ev.deps.erase(std::unique(ev.deps.begin(), ev.deps.end()), ev.deps.end());
    ev.tile = std::move(tile);
    const EventId id = append(std::move(ev));
    writer_[graph_.events[id].tile.output] = id;
    if (!core) pending_auto_.push_back(id);
    return id;
}

EventId PlanBuilder::movedata(std::optional<TensorId> src, TensorId dst,
                              std::span<const EventId> after) {
    if (finalized_) throw PlanError("builder already finalized");
    const TensorRegion& d = tensor(dst);
    Event ev;
    ev.kind = EventKind::MoveData;
    ev.dst = dst;
    if (src) {
        const TensorRegion& s = tensor(*src);
        if (s.shape != d.shape)
            throw PlanError("movedata shape mismatch between tensors " + std::to_string(*src) +
                            " and " + std::to_string(dst));
        ev.src = *src;
        if (writer_[*src] != kNoEvent) ev.deps.push_back(writer_[*src]);
    }
    // Destination overlap against live explicitly-placed SRAM regions.
    if (const auto* dst_sram = std::get_if<CoreSram>(&d.location); dst_sram && d.explicit_offset) {
        for (const TensorRegion& other : graph_.tensors) {
            if (other.id == d.id || !other.explicit_offset) continue;
            const auto* o = std::get_if<CoreSram>(&other.location);
            if (!o || o->core != dst_sram->core) continue;
            if (writer_[other.id] == kNoEvent) continue;  // never written, not live
            const bool disjoint = dst_sram->offset + d.size_bytes <= o->offset ||
                                  o->offset + other.size_bytes <= dst_sram->offset;
            if (!disjoint)
                throw PlanError("movedata destination overlaps live region " +
                                std::to_string(other.id) + " on core " +
                                std::to_string(o->core));
        }
    }
    if (writer_[dst] != kNoEvent) ev.deps.push_back(writer_[dst]);
    for (EventId e : after) ev.deps.push_back(e);
    std::sort(ev.deps.begin(), ev.deps.end());
    ev.deps.erase(std::unique(ev.deps.begin(), ev.deps.end()), ev.deps.end());
    const EventId id = append(std::move(ev));
    writer_[dst] = id;
    return id;
}

EventId PlanBuilder::sync(std::span<const EventId> participants) {
    if (finalized_) throw PlanError("builder already finalized");
    if (participants.empty()) throw PlanError("sync over an empty participant set");
    Event ev;
    ev.kind = EventKind::Sync;
    for (EventId e : participants) {
        if (e >= graph_.events.size()) throw PlanError("sync over unknown event " + std::to_string(e));
        ev.deps.push_back(e);
    }
    std::sort(ev.deps.begin(), ev.deps.end());
    ev.deps.erase(std::unique(ev.deps.begin(), ev.deps.end()), ev.deps.end());
    return append(std::move(ev));
}

void PlanBuilder::add_dep(EventId event, EventId dep) {
    if (event >= graph_.events.size() || dep >= graph_.events.size())
        throw PlanError("add_dep with unknown event id");
    auto& deps = graph_.events[event].deps;
    if (std::find(deps.begin(), deps.end(), dep) == deps.end()) deps.push_back(dep);
}

void PlanBuilder::begin_wave() { ++wave_; }

std::vector<EventId> PlanBuilder::collective(CollectiveKind kind,
                                             std::span<const TensorId> regions,
                                             std::span<const CoreId> cores,
                                             std::span<const EventId> after) {
    if (regions.size() != cores.size() || regions.empty())
        throw PlanError("collective needs one region per participating core");
    const std::size_t R = cores.size();
    // By value: add_tensor below reallocates the registry.
    const TensorRegion first = tensor(regions[0]);
    for (TensorId t : regions) {
        if (tensor(t).shape != first.shape) throw PlanError("collective regions have mismatched shapes");
    }
    for (CoreId c : cores) {
        if (c >= spec_.num_cores) throw PlanError("collective core " + std::to_string(c) + " not in grid");
    }
    const std::uint64_t elems = first.size_bytes / dtype_size(first.dtype);
    std::vector<EventId> out;

    auto chunk_elems = [&](std::size_t c) {
        return elems / R + (c < elems % R ? 1 : 0);
    };

    switch (kind) {
        case CollectiveKind::Broadcast: {
            // Pass the tensor along the ring from the first core.
            for (std::size_t i = 0; i + 1 < R; ++i) {
                const TensorId dst = add_tensor(first.dtype, first.shape, CoreSram{cores[i + 1], 0});
                out.push_back(movedata(regions[i], dst, i == 0 ? after : std::span<const EventId>{}));
            }
            break;
        }
        case CollectiveKind::AllGather: {
            // Each shard is forwarded R-1 times around the ring; core i
            // accumulates every shard of the concatenated output.
            std::vector<TensorId> circulating(regions.begin(), regions.end());
            for (std::size_t step = 0; step + 1 < R; ++step) {
                std::vector<TensorId> next(R);
                for (std::size_t i = 0; i < R; ++i) {
                    const std::size_t to = (i + 1) % R;
                    const TensorId dst =
                        add_tensor(first.dtype, first.shape, CoreSram{cores[to], 0});
                    out.push_back(movedata(circulating[i], dst,
                                           step == 0 ? after : std::span<const EventId>{}));
                    next[to] = dst;
                }
                circulating = std::move(next);
            }
            break;
        }
        case CollectiveKind::AllReduce:
        case CollectiveKind::ReduceScatter: {
            // Reduce-scatter ring: after R-1 steps, core (c+1) mod R holds the
            // fully reduced chunk c.
            std::vector<std::vector<TensorId>> chunks(R);  // [core][chunk]
            for (std::size_t i = 0; i < R; ++i) {
                chunks[i].resize(R);
                for (std::size_t c = 0; c < R; ++c) {
                    chunks[i][c] =
                        add_tensor(first.dtype, {std::max<std::uint64_t>(chunk_elems(c), 1)},
                                   CoreSram{cores[i], 0});
                    // Chunks view the participant's region; reading through the
                    // parent keeps the data dependency on the region's writer.
                    if (writer_[regions[i]] != kNoEvent)
                        writer_[chunks[i][c]] = writer_[regions[i]];
                }
            }
            for (std::size_t step = 0; step + 1 < R; ++step) {
                for (std::size_t i = 0; i < R; ++i) {
                    const std::size_t to = (i + 1) % R;
                    const std::size_t c = (i + R - step) % R;  // chunk leaving core i
                    const TensorId recv =
                        add_tensor(first.dtype, {std::max<std::uint64_t>(chunk_elems(c), 1)},
                                   CoreSram{cores[to], 0});
                    const EventId mv = movedata(chunks[i][c], recv,
                                                step == 0 ? after : std::span<const EventId>{});
                    out.push_back(mv);
                    const EventId red = compute(
                        OpTile::reduce(chunk_elems(c), {recv, chunks[to][c]}, chunks[to][c]),
                        cores[to]);
                    out.push_back(red);
                }
            }
            if (kind == CollectiveKind::AllReduce) {
                // After R-1 reduce steps the fully reduced chunk c sits on
                // core (c+R-1) mod R; all-gather ring from there.
                std::vector<TensorId> circulating(R);
                for (std::size_t c = 0; c < R; ++c) {
                    const std::size_t owner = (c + R - 1) % R;
                    circulating[owner] = chunks[owner][c];
                }
                for (std::size_t step = 0; step + 1 < R; ++step) {
                    std::vector<TensorId> next(R);
                    for (std::size_t i = 0; i < R; ++i) {
                        const std::size_t to = (i + 1) % R;
                        const TensorRegion src = tensor(circulating[i]);
                        const TensorId dst = add_tensor(src.dtype, src.shape, CoreSram{cores[to], 0});
                        out.push_back(movedata(circulating[i], dst));
                        next[to] = dst;
                    }
                    circulating = std::move(next);
                }
            }
            break;
        }
    }
    return out;
}

void PlanBuilder::auto_assign_cores() {
    if (pending_auto_.empty()) return;
    // Sharing structure: pending tiles reading a common tensor form a ring in
    // creation order.
    std::map<TensorId, std::vector<std::uint32_t>> by_input;  // tensor -> pending indices
    for (std::uint32_t i = 0; i < pending_auto_.size(); ++i) {
        const Event& ev = graph_.events[pending_auto_[i]];
        for (TensorId in : ev.tile.inputs) by_input[in].push_back(i);
    }
    std::vector<SharingRing> rings;
    std::vector<bool> in_ring(pending_auto_.size(), false);
    for (const auto& [t, members] : by_input) {
        if (members.size() < 2) continue;
        SharingRing ring;
        for (std::uint32_t m : members) {
            if (!in_ring[m]) {
                in_ring[m] = true;
                ring.tiles.push_back(m);
            }
        }
        if (ring.tiles.size() >= 2) rings.push_back(std::move(ring));
    }
    const std::uint32_t n = static_cast<std::uint32_t>(pending_auto_.size());
    const CoreMap map = (policy_ == TileMapPolicy::DimensionOrdered)
                            ? map_dimension_ordered(n, rings, geom_)
                            : map_sequential(n, geom_);
    for (std::uint32_t i = 0; i < n; ++i) graph_.events[pending_auto_[i]].core = map.core(i);
    pending_auto_.clear();
}

ExecutionGraph PlanBuilder::finalize() {
    if (finalized_) throw PlanError("builder already finalized");
    if (graph_.events.empty()) throw PlanError("cannot finalize an empty plan");
    auto_assign_cores();
    finalized_ = true;
    ExecutionGraph g = std::move(graph_);
    g.seal();
    return g;
}

// ---------------------------------------------------------------------------
// ExecutionGraph
// ---------------------------------------------------------------------------

void ExecutionGraph::seal() {
    const std::size_t n = events.size();
    // Tensor references resolve.
    auto check_tensor = [&](TensorId t, EventId e) {
        if (t >= tensors.size())
            throw ValidationError("event " + std::to_string(e) + " references dangling tensor " +
                                  std::to_string(t));
    };
    for (const Event& ev : events) {
        for (EventId d : ev.deps) {
            if (d >= n)
                throw ValidationError("event " + std::to_string(ev.id) +
                                      " depends on unknown event " + std::to_string(d));
        }
        if (ev.kind == EventKind::Compute) {
            for (TensorId t : ev.tile.inputs) check_tensor(t, ev.id);
            check_tensor(ev.tile.output, ev.id);
        } else if (ev.kind == EventKind::MoveData) {
            if (ev.src != kNoTensor) check_tensor(ev.src, ev.id);
            check_tensor(ev.dst, ev.id);
        }
    }

    // Cycle detection (iterative DFS); reports one offending cycle.
    std::vector<std::uint8_t> color(n, 0);  // 0 white, 1 gray, 2 black
    std::vector<EventId> stack, path;
    for (EventId root = 0; root < n; ++root) {
        if (color[root] != 0) continue;
        stack.push_back(root);
        while (!stack.empty()) {
            const EventId v = stack.back();
            if (color[v] == 0) {
                color[v] = 1;
                path.push_back(v);
                for (EventId d : events[v].deps) {
                    if (color[d] == 1) {
                        std::ostringstream msg;
                        msg << "dependency cycle: ";
                        auto it = std::find(path.begin(), path.end(), d);
                        for (; it != path.end(); ++it) msg << *it << " -> ";
                        msg << d;
                        throw ValidationError(msg.str());
                    }
                    if (color[d] == 0) stack.push_back(d);
                }
            } else {
                stack.pop_back();
                if (color[v] == 1) {
                    color[v] = 2;
                    path.pop_back();
                }
            }
        }
    }

    readers_.assign(tensors.size(), {});
    writer_.assign(tensors.size(), kNoEvent);
    for (const Event& ev : events) {
        if (ev.kind == EventKind::Compute) {
            for (TensorId t : ev.tile.inputs) readers_[t].push_back(ev.id);
            writer_[ev.tile.output] = ev.id;
        } else if (ev.kind == EventKind::MoveData) {
            if (ev.src != kNoTensor) readers_[ev.src].push_back(ev.id);
            writer_[ev.dst] = ev.id;
        }
    }
}

namespace {

std::string location_to_text(const Location& loc) {
    if (std::holds_alternative<std::monostate>(loc)) return "none";
    if (const auto* sram = std::get_if<CoreSram>(&loc))
        return "sram " + std::to_string(sram->core) + ":" + std::to_string(sram->offset);
    const auto& span = std::get<DramSpan>(loc);
    std::ostringstream out;
    out << "dram ";
    for (std::size_t i = 0; i < span.ranges.size(); ++i) {
        if (i) out << ",";
        out << span.ranges[i].channel << ":" << span.ranges[i].offset << ":" << span.ranges[i].len;
    }
    return out.str();
}

Location location_from_text(const std::string& text) {
    if (text == "none") return {};
    std::istringstream in(text);
    std::string kind;
    in >> kind;
    if (kind == "sram") {
        std::string rest;
        in >> rest;
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw ValidationError("bad sram location '" + text + "'");
        return CoreSram{static_cast<CoreId>(std::stoul(rest.substr(0, colon))),
                        std::stoull(rest.substr(colon + 1))};
    }
    if (kind == "dram") {
        std::string rest;
        in >> rest;
        DramSpan span;
        std::istringstream rs(rest);
        std::string piece;
        while (std::getline(rs, piece, ',')) {
            const auto c1 = piece.find(':');
            const auto c2 = piece.find(':', c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos)
                throw ValidationError("bad dram range '" + piece + "'");
            span.ranges.push_back(DramRange{static_cast<ChannelId>(std::stoul(piece.substr(0, c1))),
                                            std::stoull(piece.substr(c1 + 1, c2 - c1 - 1)),
                                            std::stoull(piece.substr(c2 + 1))});
        }
        return span;
    }
    throw ValidationError("bad location '" + text + "'");
}

template <typename T>
std::string join_ids(const std::vector<T>& v) {
    std::ostringstream out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ",";
        out << v[i];
    }
    return out.str();
}

template <typename T>
std::vector<T> split_ids(const std::string& text) {
    std::vector<T> out;
    if (text.empty() || text == "-") return out;
    std::istringstream in(text);
    std::string piece;
    while (std::getline(in, piece, ',')) out.push_back(static_cast<T>(std::stoull(piece)));
    return out;
}

}  // namespace

DramSpan slice_span(const DramSpan& span, Bytes offset, Bytes len) {
    DramSpan out;
    Bytes pos = 0;
    for (const DramRange& r : span.ranges) {
        if (len == 0) break;
        const Bytes end = pos + r.len;
        if (end <= offset) {
            pos = end;
            continue;
        }
        const Bytes skip = offset > pos ? offset - pos : 0;
        const Bytes take = std::min(r.len - skip, len);
        out.ranges.push_back(DramRange{r.channel, r.offset + skip, take});
        len -= take;
        offset += take;
        pos = end;
    }
    if (len != 0) throw ValidationError("span slice exceeds the parent span");
    return out;
}

std::string ExecutionGraph::serialize() const {
    std::ostringstream out;
    out << "# voxel plan v1\n";
    for (const TensorRegion& t : tensors) {
        out << "tensor " << t.id << " " << dtype_name(t.dtype) << " " << join_ids(t.shape);
        if (t.is_view()) out << " view=" << t.parent << ":" << t.parent_offset;
        out << " | " << location_to_text(t.location) << "\n";
    }
    for (const Event& ev : events) {
        out << "event " << ev.id << " ";
        switch (ev.kind) {
            case EventKind::Compute:
                out << "compute core=" << ev.core << " wave=" << ev.wave
                    << " op=" << op_kind_name(ev.tile.kind) << ":" << ev.tile.m << ":" << ev.tile.k
                    << ":" << ev.tile.n << ":" << ev.tile.elems << ":" << ev.tile.fused_inputs << ":"
                    << ev.tile.rows << ":" << ev.tile.cols << " in=" << join_ids(ev.tile.inputs)
                    << " out=" << ev.tile.output;
                break;
            case EventKind::MoveData:
                out << "move src=" << (ev.src == kNoTensor ? std::string("-") : std::to_string(ev.src))
                    << " dst=" << ev.dst;
                break;
            case EventKind::Sync:
                out << "sync";
                break;
        }
        out << " deps=" << (ev.deps.empty() ? "-" : join_ids(ev.deps)) << "\n";
    }
    return out.str();
}

ExecutionGraph ExecutionGraph::deserialize(const std::string& text) {
    ExecutionGraph g;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    auto field = [](const std::string& l, const std::string& key) {
        const std::string tag = key + "=";
        const auto pos = l.find(tag);
        if (pos == std::string::npos) throw ValidationError("plan line missing field '" + key + "'");
        const auto end = l.find(' ', pos);
        return l.substr(pos + tag.size(),
                        end == std::string::npos ? std::string::npos : end - pos - tag.size());
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "tensor") {
            TensorRegion t;
            std::string dtype, shape, bar, loc;
            std::uint64_t id = 0;
            ls >> id >> dtype >> shape >> bar;
            if (bar.rfind("view=", 0) == 0) {
                const auto colon = bar.find(':', 5);
                t.parent = static_cast<TensorId>(std::stoul(bar.substr(5, colon - 5)));
                t.parent_offset = std::stoull(bar.substr(colon + 1));
                ls >> bar;  // consume the '|'
            }
            std::getline(ls, loc);
            if (!loc.empty() && loc[0] == ' ') loc = loc.substr(1);
            t.id = static_cast<TensorId>(id);
            t.dtype = dtype_from_name(dtype);
            t.shape = split_ids<std::uint64_t>(shape);
            t.location = location_from_text(loc);
            t.size_bytes = dtype_size(t.dtype);
            for (auto d : t.shape) t.size_bytes *= d;
            if (t.id != g.tensors.size())
                throw ValidationError("plan line " + std::to_string(lineno) +
                                      ": tensors out of order");
            g.tensors.push_back(std::move(t));
        } else if (word == "event") {
            Event ev;
            std::uint64_t id = 0;
            std::string kind;
            ls >> id >> kind;
            ev.id = static_cast<EventId>(id);
            if (kind == "compute") {
                ev.kind = EventKind::Compute;
                ev.core = static_cast<CoreId>(std::stoul(field(line, "core")));
                ev.wave = static_cast<std::uint32_t>(std::stoul(field(line, "wave")));
                const auto op = field(line, "op");
                std::vector<std::string> parts;
                std::istringstream os(op);
                std::string piece;
                while (std::getline(os, piece, ':')) parts.push_back(piece);
                if (parts.size() != 8)
                    throw ValidationError("plan line " + std::to_string(lineno) + ": bad op spec");
                OpTile& t = ev.tile;
                if (parts[0] == "matmul") t.kind = OpKind::MatMul;
                else if (parts[0] == "elementwise") t.kind = OpKind::Elementwise;
                else if (parts[0] == "softmax") t.kind = OpKind::Softmax;
                else if (parts[0] == "reduce") t.kind = OpKind::Reduce;
                else throw ValidationError("unknown op kind '" + parts[0] + "'");
                t.m = std::stoull(parts[1]);
                t.k = std::stoull(parts[2]);
                t.n = std::stoull(parts[3]);
                t.elems = std::stoull(parts[4]);
                t.fused_inputs = static_cast<std::uint32_t>(std::stoul(parts[5]));
                t.rows = std::stoull(parts[6]);
                t.cols = std::stoull(parts[7]);
                t.inputs = split_ids<TensorId>(field(line, "in"));
                t.output = static_cast<TensorId>(std::stoull(field(line, "out")));
            } else if (kind == "move") {
                ev.kind = EventKind::MoveData;
                const auto src = field(line, "src");
                ev.src = (src == "-") ? kNoTensor : static_cast<TensorId>(std::stoull(src));
                ev.dst = static_cast<TensorId>(std::stoull(field(line, "dst")));
            } else if (kind == "sync") {
                ev.kind = EventKind::Sync;
            } else {
                throw ValidationError("plan line " + std::to_string(lineno) + ": unknown event kind '" +
                                      kind + "'");
            }
            ev.deps = split_ids<EventId>(field(line, "deps"));
            if (ev.id != g.events.size())
                throw ValidationError("plan line " + std::to_string(lineno) + ": events out of order");
            g.events.push_back(std::move(ev));
        } else {
            throw ValidationError("plan line " + std::to_string(lineno) + ": unknown record '" +
                                  word + "'");
        }
    }
    g.seal();
    return g;
}

}  // namespace voxel
