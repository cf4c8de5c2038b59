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

#include "voxel/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "voxel/graph.hpp"

namespace voxel {

PlacementPolicy placement_policy_from_name(const std::string& name) {
    if (name == "uniform") return PlacementPolicy::Uniform;
    if (name == "interleaved") return PlacementPolicy::Interleaved;
    if (name == "software-aware" || name == "sw-aware") return PlacementPolicy::SoftwareAware;
    throw ConfigError("unknown placement policy '" + name +
                      "' (uniform|interleaved|software-aware)");
}

const char* placement_policy_name(PlacementPolicy p) {
    switch (p) {
        case PlacementPolicy::Uniform: return "uniform";
        case PlacementPolicy::Interleaved: return "interleaved";
        case PlacementPolicy::SoftwareAware: return "software-aware";
    }
    return "uniform";
}

CoreMap map_sequential(std::uint32_t num_tiles, const DerivedGeometry& geom) {
    CoreMap map;
    const std::uint32_t n = geom.grid_rows * geom.grid_cols;
    map.core_of_tile.resize(num_tiles);
    for (std::uint32_t i = 0; i < num_tiles; ++i) map.core_of_tile[i] = i % n;
    return map;
}

namespace {

// Places a ring of L tiles on rows [r0, r0+k) with folded row order and
// serpentine columns; every consecutive ring step (including the wrap) is at
// most 2 mesh hops when L fills the rows it uses.
void place_ring(const std::vector<std::uint32_t>& tiles, std::uint32_t r0, std::uint32_t cols,
                const DerivedGeometry& geom, CoreMap& map) {
    const std::uint32_t L = static_cast<std::uint32_t>(tiles.size());
    const std::uint32_t num_cores = geom.grid_rows * geom.grid_cols;
    if (L <= cols) {
        const auto order = folded_ring_order(L);
        for (std::uint32_t i = 0; i < L; ++i) {
            map.core_of_tile[tiles[i]] = geom.core_at(r0, order[i]) % num_cores;
        }
        return;
    }
    const std::uint32_t k = static_cast<std::uint32_t>(ceil_div(L, cols));
    const auto row_order = folded_ring_order(k);
    for (std::uint32_t p = 0; p < L; ++p) {
        const std::uint32_t seg = p / cols;
        const std::uint32_t within = p % cols;
        const std::uint32_t col = (seg % 2 == 0) ? within : (cols - 1 - within);
        const std::uint32_t row = r0 + row_order[seg];
        map.core_of_tile[tiles[p]] = geom.core_at(row, col) % num_cores;
    }
}

}  // namespace

CoreMap map_dimension_ordered(std::uint32_t num_tiles, const std::vector<SharingRing>& rings,
                              const DerivedGeometry& geom) {
    CoreMap map;
    map.core_of_tile.assign(num_tiles, 0);
    const std::uint32_t rows = geom.grid_rows;
    const std::uint32_t cols = geom.grid_cols;
    const std::uint32_t num_cores = rows * cols;

    std::vector<bool> assigned(num_tiles, false);
    std::uint32_t next_row = 0;  // within the current wave
    std::set<CoreId> used;       // cores taken in the current wave

    for (const SharingRing& ring : rings) {
        const std::uint32_t L = static_cast<std::uint32_t>(ring.tiles.size());
        if (L == 0) continue;
        if (L > num_cores)
            throw PlanError("sharing ring of " + std::to_string(L) + " tiles exceeds core count " +
                            std::to_string(num_cores));
        const std::uint32_t k = static_cast<std::uint32_t>(ceil_div(L, cols));
        if (next_row + k > rows) {  // spill to a fresh wave
            next_row = 0;
            used.clear();
        }
        place_ring(ring.tiles, next_row, cols, geom, map);
        for (std::uint32_t t : ring.tiles) {
            assigned[t] = true;
            used.insert(map.core_of_tile[t]);
        }
        next_row += k;
    }

    // Remaining tiles fill free cores sequentially.
    CoreId cursor = 0;
    for (std::uint32_t t = 0; t < num_tiles; ++t) {
        if (assigned[t]) continue;
        while (used.count(cursor)) {
            ++cursor;
            if (cursor >= num_cores) {
                cursor = 0;
                used.clear();  // new wave
            }
        }
        map.core_of_tile[t] = cursor;
        used.insert(cursor);
    }
    return map;
}

std::uint32_t map_hop_distance(const CoreMap& map, std::uint32_t tile_a, std::uint32_t tile_b,
                               const DerivedGeometry& geom, NocTopology topo) {
    const CoreId a = map.core(tile_a);
    const CoreId b = map.core(tile_b);
    if (a == b) return 0;
    if (topo == NocTopology::AllToAll) return 1;
    const std::uint32_t dr =
        static_cast<std::uint32_t>(std::abs(static_cast<int>(geom.core_row(a)) -
                                            static_cast<int>(geom.core_row(b))));
    const std::uint32_t dc =
        static_cast<std::uint32_t>(std::abs(static_cast<int>(geom.core_col(a)) -
                                            static_cast<int>(geom.core_col(b))));
    if (topo == NocTopology::Mesh2D) return dr + dc;
    return std::min(dr, geom.grid_rows - dr) + std::min(dc, geom.grid_cols - dc);
}

// ---------------------------------------------------------------------------
// Placement policies
// ---------------------------------------------------------------------------

const DramSpan* PlacementPlan::find(TensorId id) const {
    for (std::size_t i = 0; i < tensor_ids.size(); ++i) {
        if (tensor_ids[i] == id) return &spans[i];
    }
    return nullptr;
}

namespace {

struct ChannelCursors {
    std::vector<Addr> next;
    Bytes capacity;
    Bytes align;

    explicit ChannelCursors(const ChipSpec& spec, const DerivedGeometry& geom)
        : next(geom.channel_count, 0), capacity(geom.channel_capacity), align(spec.dram_interface) {}

    Addr take(ChannelId ch, Bytes len, TensorId tensor) {
        Addr at = (next[ch] + align - 1) / align * align;
        if (at + len > capacity)
            throw ValidationError("placement exceeds channel " + std::to_string(ch) +
                                  " capacity while placing tensor " + std::to_string(tensor));
        next[ch] = at + len;
        return at;
    }
};

// Stripes `size` bytes evenly over `channels`, appending ranges to `span`.
void stripe(DramSpan& span, const std::vector<ChannelId>& channels, Bytes size, TensorId tensor,
            ChannelCursors& cursors) {
    const std::size_t n = channels.size();
    const Bytes base = size / n;
    const Bytes rem = size % n;
    for (std::size_t i = 0; i < n; ++i) {
        const Bytes len = base + (i < rem ? 1 : 0);
        if (len == 0) continue;
        span.ranges.push_back(DramRange{channels[i], cursors.take(channels[i], len, tensor), len});
    }
    std::sort(span.ranges.begin(), span.ranges.end(),
              [](const DramRange& a, const DramRange& b) { return a.channel < b.channel; });
}

std::vector<ChannelId> all_channels(const DerivedGeometry& geom) {
    std::vector<ChannelId> chs(geom.channel_count);
    for (ChannelId c = 0; c < geom.channel_count; ++c) chs[c] = c;
    return chs;
}

std::vector<const TensorRegion*> unplaced_of(const std::vector<TensorRegion>& tensors) {
    std::vector<const TensorRegion*> out;
    for (const TensorRegion& t : tensors) {
        if (t.unplaced() && !t.is_view()) out.push_back(&t);
    }
    return out;
}

}  // namespace

PlacementPlan place_uniform(const std::vector<TensorRegion>& tensors, const ChipSpec& spec) {
    const DerivedGeometry geom = derive_geometry(spec);
    ChannelCursors cursors(spec, geom);
    const auto chs = all_channels(geom);
    PlacementPlan plan;
    for (const TensorRegion* t : unplaced_of(tensors)) {
        DramSpan span;
        stripe(span, chs, t->size_bytes, t->id, cursors);
        plan.tensor_ids.push_back(t->id);
        plan.spans.push_back(std::move(span));
    }
    return plan;
}

PlacementPlan place_interleaved(const std::vector<TensorRegion>& tensors, const ChipSpec& spec) {
    const DerivedGeometry geom = derive_geometry(spec);
    ChannelCursors cursors(spec, geom);
    const std::uint32_t C = geom.channel_count;
    const auto regions = unplaced_of(tensors);
    Bytes total = 0;
    for (const TensorRegion* t : regions) total += t->size_bytes;
    PlacementPlan plan;
    std::uint32_t rotate = 0;
    (void)total;
    // Cap below C so consecutive arcs never close the full circle and stay
    // disjoint.
    const std::uint32_t cap = (regions.size() >= 2 && C >= 2) ? C - 1 : C;
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const TensorRegion* t = regions[i];
        // Bank share proportional to this tensor's size against each
        // consecutively allocated neighbor; the floor of the smaller share
        // keeps adjacent arcs disjoint by construction.
        std::uint32_t nchan = C;
        if (regions.size() >= 2) {
            auto share_against = [&](const TensorRegion* other) {
                const double pair = static_cast<double>(t->size_bytes) +
                                    static_cast<double>(other->size_bytes);
                return static_cast<std::uint32_t>(std::floor(
                    static_cast<double>(C) * static_cast<double>(t->size_bytes) /
                    std::max(pair, 1.0)));
            };
            const TensorRegion* next = regions[(i + 1) % regions.size()];
            const TensorRegion* prev = regions[(i + regions.size() - 1) % regions.size()];
            nchan = std::min(share_against(next), share_against(prev));
        }
        nchan = std::clamp<std::uint32_t>(nchan, 1, cap);
        std::vector<ChannelId> arc(nchan);
        for (std::uint32_t i = 0; i < nchan; ++i) arc[i] = (rotate + i) % C;
        rotate = (rotate + nchan) % C;
        DramSpan span;
        stripe(span, arc, t->size_bytes, t->id, cursors);
        plan.tensor_ids.push_back(t->id);
        plan.spans.push_back(std::move(span));
    }
    return plan;
}

PlacementPlan place_software_aware(const std::vector<TensorRegion>& tensors,
                                   const ExecutionGraph& graph, const ChipSpec& spec) {
    const DerivedGeometry geom = derive_geometry(spec);
    const std::uint32_t C = geom.channel_count;

    std::vector<bool> is_dram(tensors.size(), false);
    for (const TensorRegion& t : tensors) is_dram[t.id] = t.unplaced() && !t.is_view();

    // Concurrency groups: all tensors of one operator, and the producing
    // operator's output together with the consumer's inputs. Views resolve to
    // the placed parent tensor.
    auto canon = [&](TensorId t) { return tensors[t].is_view() ? tensors[t].parent : t; };
    std::vector<std::vector<TensorId>> groups;
    auto add_group = [&](std::vector<TensorId> g) {
        for (TensorId& t : g) t = canon(t);
        std::sort(g.begin(), g.end());
        g.erase(std::unique(g.begin(), g.end()), g.end());
        std::erase_if(g, [&](TensorId t) { return !is_dram[t]; });
        if (g.size() >= 2) groups.push_back(std::move(g));
    };
    for (const Event& ev : graph.events) {
        if (ev.kind != EventKind::Compute) continue;
        std::vector<TensorId> g = ev.tile.inputs;
        g.push_back(ev.tile.output);
        add_group(std::move(g));
        for (EventId d : ev.deps) {
            const Event& p = graph.events[d];
            if (p.kind != EventKind::Compute) continue;
            std::vector<TensorId> chain = ev.tile.inputs;
            chain.push_back(p.tile.output);
            add_group(std::move(chain));
        }
    }
    std::sort(groups.begin(), groups.end());
    groups.erase(std::unique(groups.begin(), groups.end()), groups.end());

    // Tensors in groups wider than the channel count cannot be pairwise
    // disjoint; they fall back to the interleaved scheme.
    std::vector<bool> fallback(tensors.size(), false);
    for (const auto& g : groups) {
        if (g.size() > C) {
            for (TensorId t : g) fallback[t] = true;
        }
    }

    // Greedy coloring, lowest id first.
    std::vector<std::vector<TensorId>> adj(tensors.size());
    for (const auto& g : groups) {
        if (g.size() > C) continue;
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = i + 1; j < g.size(); ++j) {
                adj[g[i]].push_back(g[j]);
                adj[g[j]].push_back(g[i]);
            }
        }
    }
    constexpr std::uint32_t kNoColor = 0xffffffffu;
    std::vector<std::uint32_t> color(tensors.size(), kNoColor);
    std::uint32_t num_colors = 1;
    for (const TensorRegion& t : tensors) {
        if (!is_dram[t.id] || fallback[t.id]) continue;
        std::set<std::uint32_t> taken;
        for (TensorId nb : adj[t.id]) {
            if (color[nb] != kNoColor) taken.insert(color[nb]);
        }
        std::uint32_t c = 0;
        while (taken.count(c)) ++c;
        color[t.id] = c;
        num_colors = std::max(num_colors, c + 1);
    }
    if (num_colors > C) {
        throw ValidationError("software-aware placement needs " + std::to_string(num_colors) +
                              " disjoint channel sets but only " + std::to_string(C) +
                              " channels exist; offending group has " +
                              std::to_string(num_colors) + " concurrent tensors");
    }

    // Channel arcs per color class, sized proportionally to class bytes so
    // the heavy streams keep most of the TSVs while staying conflict-free.
    std::vector<double> class_bytes(num_colors, 0.0);
    double colored_total = 0;
    for (const TensorRegion& t : tensors) {
        if (!is_dram[t.id] || fallback[t.id] || color[t.id] == kNoColor) continue;
        class_bytes[color[t.id]] += static_cast<double>(t.size_bytes);
        colored_total += static_cast<double>(t.size_bytes);
    }
    std::vector<std::uint32_t> arc_len(num_colors, 1);
    std::uint32_t assigned = num_colors;  // one channel minimum per class
    if (colored_total > 0 && C > num_colors) {
        for (std::uint32_t j = 0; j < num_colors; ++j) {
            const std::uint32_t extra = static_cast<std::uint32_t>(
                std::floor((C - num_colors) * class_bytes[j] / colored_total));
            arc_len[j] += extra;
            assigned += extra;
        }
        // Largest classes absorb the rounding remainder.
        std::vector<std::uint32_t> order(num_colors);
        for (std::uint32_t j = 0; j < num_colors; ++j) order[j] = j;
        std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
            return std::tie(class_bytes[b], a) < std::tie(class_bytes[a], b);
        });
        for (std::uint32_t r = 0; assigned < C; ++r, ++assigned) {
            arc_len[order[r % num_colors]] += 1;
        }
    }
    std::vector<std::vector<ChannelId>> arcs(num_colors);
    std::uint32_t cursor_ch = 0;
    for (std::uint32_t j = 0; j < num_colors; ++j) {
        for (std::uint32_t i = 0; i < arc_len[j] && cursor_ch < C; ++i)
            arcs[j].push_back(cursor_ch++);
    }
    // Any channels left by clamping go to the heaviest class.
    while (cursor_ch < C) arcs[0].push_back(cursor_ch++);

    // Reader core of each byte window, from the execution graph: tile scans
    // stay on the reader's own column so streams do not pile onto shared
    // banks. Windows come from views; direct readers cover the whole tensor.
    struct Window {
        Bytes off;
        Bytes end;
        CoreId core;
    };
    std::vector<std::vector<Window>> windows(tensors.size());
    auto reader_core = [&](EventId e) -> CoreId {
        const Event& ev = graph.events[e];
        if (ev.kind == EventKind::Compute) return ev.core;
        if (ev.kind == EventKind::MoveData && ev.dst != kNoTensor) {
            if (const auto* s = std::get_if<CoreSram>(&graph.tensor(ev.dst).location))
                return s->core;
        }
        return 0;
    };
    if (!graph.events.empty()) {
        for (const TensorRegion& t : graph.tensors) {
            const TensorId root = t.is_view() ? t.parent : t.id;
            if (root >= tensors.size() || !is_dram[root]) continue;
            const auto& readers = graph.readers()[t.id];
            if (readers.empty()) continue;
            CoreId who = reader_core(readers.front());
            for (EventId r : readers) who = std::min(who, reader_core(r));
            const Bytes off = t.is_view() ? t.parent_offset : 0;
            windows[root].push_back(Window{off, off + t.size_bytes, who});
        }
    }

    ChannelCursors cursors(spec, geom);
    PlacementPlan plan;
    plan.concurrency_groups = groups;
    std::uint32_t rotate = 0;
    for (const TensorRegion& t : tensors) {
        if (!is_dram[t.id]) continue;
        DramSpan span;
        if (fallback[t.id]) {
            std::uint32_t nchan = std::clamp<std::uint32_t>(
                static_cast<std::uint32_t>(ceil_div(C, 4)), 1, C);
            std::vector<ChannelId> arc(nchan);
            for (std::uint32_t i = 0; i < nchan; ++i) arc[i] = (rotate + i) % C;
            rotate = (rotate + nchan) % C;
            stripe(span, arc, t.size_bytes, t.id, cursors);
        } else if (windows[t.id].size() < 2) {
            // A whole-tensor (or unread) window carries no layout signal;
            // stripe evenly like the uniform policy.
            stripe(span, arcs[color[t.id]], t.size_bytes, t.id, cursors);
        } else {
            // Atomic segments between window breakpoints; each segment lands
            // on the arc channel of its (lowest) reader core's rank, so the
            // tensor's streams spread across the whole arc. Ranges stay in
            // logical byte order so views slice correctly.
            const auto& arc = arcs[color[t.id]];
            std::vector<CoreId> readers;
            for (const Window& w : windows[t.id]) readers.push_back(w.core);
            std::sort(readers.begin(), readers.end());
            readers.erase(std::unique(readers.begin(), readers.end()), readers.end());
            std::vector<Bytes> cuts{0, t.size_bytes};
            for (const Window& w : windows[t.id]) {
                cuts.push_back(std::min(w.off, t.size_bytes));
                cuts.push_back(std::min(w.end, t.size_bytes));
            }
            std::sort(cuts.begin(), cuts.end());
            cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
                const Bytes lo = cuts[i], hi = cuts[i + 1];
                if (hi <= lo) continue;
                CoreId who = 0;
                bool found = false;
                for (const Window& w : windows[t.id]) {
                    if (w.off <= lo && hi <= w.end) {
                        who = found ? std::min(who, w.core) : w.core;
                        found = true;
                    }
                }
                ChannelId ch;
                if (found) {
                    const std::size_t rank = static_cast<std::size_t>(
                        std::lower_bound(readers.begin(), readers.end(), who) - readers.begin());
                    const std::size_t pos = rank * arc.size() / std::max<std::size_t>(readers.size(), 1);
                    ch = arc[std::min(pos, arc.size() - 1)];
                } else {
                    ch = arc[(lo / std::max<Bytes>(t.size_bytes / arc.size(), 1)) % arc.size()];
                }
                span.ranges.push_back(DramRange{ch, cursors.take(ch, hi - lo, t.id), hi - lo});
            }
        }
        plan.tensor_ids.push_back(t.id);
        plan.spans.push_back(std::move(span));
    }
    return plan;
}

PlacementPlan place(PlacementPolicy policy, const std::vector<TensorRegion>& tensors,
                    const ExecutionGraph& graph, const ChipSpec& spec) {
    switch (policy) {
        case PlacementPolicy::Uniform: return place_uniform(tensors, spec);
        case PlacementPolicy::Interleaved: return place_interleaved(tensors, spec);
        case PlacementPolicy::SoftwareAware: return place_software_aware(tensors, graph, spec);
    }
    return place_uniform(tensors, spec);
}

}  // namespace voxel
