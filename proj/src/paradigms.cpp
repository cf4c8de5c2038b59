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

#include "voxel/paradigms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace voxel {

Paradigm paradigm_from_name(const std::string& name) {
    if (name == "spmd") return Paradigm::Spmd;
    if (name == "dataflow") return Paradigm::Dataflow;
    if (name == "compute-shift" || name == "computeshift") return Paradigm::ComputeShift;
    throw ConfigError("unknown paradigm '" + name + "' (spmd|dataflow|compute-shift)");
}

const char* paradigm_name(Paradigm p) {
    switch (p) {
        case Paradigm::Spmd: return "spmd";
        case Paradigm::Dataflow: return "dataflow";
        case Paradigm::ComputeShift: return "compute-shift";
    }
    return "spmd";
}

namespace {

// Ragged even split: piece i of `parts` over `total`.
std::uint64_t share_of(std::uint64_t total, std::uint64_t parts, std::uint64_t i) {
    return total / parts + (i < total % parts ? 1 : 0);
}
std::uint64_t share_offset(std::uint64_t total, std::uint64_t parts, std::uint64_t i) {
    const std::uint64_t base = total / parts;
    const std::uint64_t rem = total % parts;
    return i * base + std::min<std::uint64_t>(i, rem);
}

struct Section {
    std::vector<std::uint32_t> ops;  // indices into the operator list
    bool parallel = false;           // head section: ops grouped by `group`
    double flops = 0;
};

double op_flops(const OperatorDesc& op) {
    switch (op.kind) {
        case OpKind::MatMul: return 2.0 * op.m * op.k * op.n;
        case OpKind::Elementwise: return static_cast<double>(op.elems);
        case OpKind::Softmax: return 3.0 * op.rows * op.cols;
        case OpKind::Reduce: return static_cast<double>(op.elems);
    }
    return 0;
}

// Groups the operator list into full-width sections and parallel (per-head)
// sections; a parallel section is a maximal run of group-tagged ops in one
// layer.
std::vector<Section> sectionize(const std::vector<OperatorDesc>& ops) {
    std::vector<Section> out;
    std::size_t i = 0;
    while (i < ops.size()) {
        Section s;
        if (ops[i].group >= 0) {
            s.parallel = true;
            const std::uint32_t layer = ops[i].layer;
            while (i < ops.size() && ops[i].group >= 0 && ops[i].layer == layer) {
                s.flops += op_flops(ops[i]);
                s.ops.push_back(static_cast<std::uint32_t>(i));
                ++i;
            }
        } else {
            s.flops = op_flops(ops[i]);
            s.ops.push_back(static_cast<std::uint32_t>(i));
            ++i;
        }
        out.push_back(std::move(s));
    }
    return out;
}

class Planner {
public:
    Planner(const std::vector<OperatorDesc>& ops, const ChipSpec& spec, const PlanOptions& opts)
        : ops_(ops),
          spec_(spec),
          opts_(opts),
          geom_(derive_geometry(spec)),
          builder_(spec, opts.tile_map),
          ds_(2) {
        // Working-set budget per tile: a third of SRAM leaves room for one
        // prefetched tile plus the write-back staging of the previous one.
        budget_ = spec_.sram_per_core / 3;
        register_tensors();
        op_done_.assign(ops_.size(), kNoEvent);
    }

    BuiltPlan take(std::vector<std::string> warnings) {
        BuiltPlan plan;
        plan.graph = builder_.finalize();
        plan.warnings = std::move(warnings);
        for (const Event& e : plan.graph.events) {
            if (e.kind == EventKind::Compute) ++plan.compute_events;
            if (e.kind == EventKind::MoveData) ++plan.move_events;
        }
        plan.allreduce_ops = allreduce_ops_;
        plan.weight_bytes_read = weight_bytes_;
        return plan;
    }

    PlanBuilder& builder() { return builder_; }
    const DerivedGeometry& geom() const { return geom_; }
    Bytes budget() const { return budget_; }

    // Ordering dependencies of an operator: producer completions plus
    // explicit `after` edges.
    std::vector<EventId> after_of(std::uint32_t op_idx) const {
        std::vector<EventId> after;
        const OperatorDesc& op = ops_[op_idx];
        for (const Operand& in : op.inputs) {
            if (in.persistent) continue;
            auto it = producer_op_.find(in.name);
            if (it != producer_op_.end() && it->second < op_idx &&
                op_done_[it->second] != kNoEvent) {
                after.push_back(op_done_[it->second]);
            }
        }
        for (std::uint32_t dep : op.after) {
            if (op_done_[dep] != kNoEvent) after.push_back(op_done_[dep]);
        }
        std::sort(after.begin(), after.end());
        after.erase(std::unique(after.begin(), after.end()), after.end());
        return after;
    }

    void set_done(std::uint32_t op_idx, EventId done) { op_done_[op_idx] = done; }

    TensorId named(const std::string& name) const { return named_.at(name); }

    /// View of byte window [offset, offset+len) of the named tensor; shared
    /// so equal slices share one fetch per core.
    TensorId view_of(const std::string& name, Bytes offset, Bytes len) {
        const TensorId parent = named_.at(name);
        const auto key = std::make_tuple(parent, offset, len);
        auto it = views_.find(key);
        if (it != views_.end()) return it->second;
        const TensorId v = builder_.add_view(parent, offset, {len / ds_}, DType::BF16);
        views_.emplace(key, v);
        return v;
    }

    EventId completion(std::vector<EventId> events) {
        if (events.empty()) throw PlanError("operator produced no events");
        if (events.size() == 1) return events[0];
        return builder_.sync(events);
    }

    // ---- shared per-operator planning --------------------------------

    /// Plans one operator partitioned over `cores` (SPMD style inside any
    /// paradigm). `row_scale`/`row_off` select a microbatch row window.
    EventId plan_partitioned(std::uint32_t op_idx, std::span<const CoreId> cores,
                             std::uint64_t row_parts = 1, std::uint64_t row_idx = 0,
                             std::vector<std::string>* warnings = nullptr);

    /// Compute-shift for a MatMul with a persistent B operand.
    EventId plan_shifted_matmul(std::uint32_t op_idx, std::span<const CoreId> cores,
                                std::vector<std::string>* warnings);

    const OperatorDesc& op(std::uint32_t i) const { return ops_[i]; }

    /// Head-section core blocks: contiguous, one per distinct group id.
    std::vector<std::vector<CoreId>> head_blocks(const Section& s,
                                                 std::span<const CoreId> cores) const;

    std::uint64_t allreduce_ops_ = 0;

    /// One fetch per (core, slice), mirroring engine residency.
    void count_weight(CoreId core, TensorId view, Bytes bytes) {
        if (counted_.emplace(core, view).second) weight_bytes_ += bytes;
    }

private:
    Bytes weight_bytes_ = 0;
    std::set<std::pair<CoreId, TensorId>> counted_;
    void register_tensors();

    struct MatmulSplit {
        std::uint64_t pk = 1, pn = 1;
    };
    MatmulSplit choose_split(const OperatorDesc& op, std::uint64_t num_cores) const;

    const std::vector<OperatorDesc>& ops_;
    ChipSpec spec_;
    PlanOptions opts_;
    DerivedGeometry geom_;
    PlanBuilder builder_;
    Bytes ds_;
    Bytes budget_ = 0;
    std::map<std::string, TensorId> named_;
    std::map<std::string, std::uint32_t> producer_op_;
    std::map<std::tuple<TensorId, Bytes, Bytes>, TensorId> views_;
    std::vector<EventId> op_done_;
};

void Planner::register_tensors() {
    // Pre-scan names: record max bytes and persistence; create DRAM tensors
    // and initial placements for the persistent ones.
    std::map<std::string, std::pair<Bytes, bool>> info;
    for (std::uint32_t i = 0; i < ops_.size(); ++i) {
        const OperatorDesc& op = ops_[i];
        for (const Operand& in : op.inputs) {
            auto& e = info[in.name];
            e.first = std::max(e.first, in.bytes);
            e.second = e.second || in.persistent;
        }
        auto& out = info[op.output.name];
        // Sliced outputs (per-head context) sum into the full tensor.
        if (producer_op_.count(op.output.name)) {
            out.first += op.output.bytes;
        } else {
            out.first = std::max(out.first, op.output.bytes);
        }
        producer_op_[op.output.name] = i;
    }
    // Consumers may declare the concatenated size; take the max of both.
    for (std::uint32_t i = 0; i < ops_.size(); ++i) {
        for (const Operand& in : ops_[i].inputs) info[in.name].first = std::max(info[in.name].first, in.bytes);
    }
    for (const auto& [name, e] : info) {
        const TensorId t = builder_.add_tensor(DType::BF16, {e.first / ds_});
        named_[name] = t;
        if (e.second) builder_.movedata(std::nullopt, t);
    }
}

Planner::MatmulSplit Planner::choose_split(const OperatorDesc& op, std::uint64_t C) const {
    // pm = 1 always: each weight byte is read by exactly one core, so every
    // paradigm streams the same weight volume from DRAM.
    MatmulSplit best;
    double best_score = -1;
    std::uint64_t best_pk = ~0ull;
    for (std::uint64_t pk = 1; pk <= C; ++pk) {
        if (C % pk != 0) continue;
        const std::uint64_t pn = C / pk;
        if (op.k / pk == 0 || op.n / pn == 0) continue;
        if (pk > 1) {
            // Partial results live in SRAM until the reduction.
            const Bytes partial = op.m * ceil_div(op.n, pn) * ds_;
            if (partial > budget_) continue;
        }
        const double ws = static_cast<double>(op.m * ceil_div(op.k, pk) +
                                              ceil_div(op.k, pk) * ceil_div(op.n, pn) +
                                              op.m * ceil_div(op.n, pn)) *
                          static_cast<double>(ds_);
        if (best_score < 0 || ws < best_score - 0.5 ||
            (std::abs(ws - best_score) <= 0.5 && pk < best_pk)) {
            best_score = ws;
            best_pk = pk;
            best.pk = pk;
            best.pn = pn;
        }
    }
    if (best_score < 0) {
        best.pk = 1;
        best.pn = std::min<std::uint64_t>(C, std::max<std::uint64_t>(op.n, 1));
    }
    return best;
}

std::vector<std::vector<CoreId>> Planner::head_blocks(const Section& s,
                                                      std::span<const CoreId> cores) const {
    std::vector<std::int32_t> groups;
    for (std::uint32_t oi : s.ops) {
        if (std::find(groups.begin(), groups.end(), ops_[oi].group) == groups.end())
            groups.push_back(ops_[oi].group);
    }
    const std::uint64_t G = std::min<std::uint64_t>(groups.size(), cores.size());
    std::vector<std::vector<CoreId>> blocks(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const std::uint64_t b = gi % G;
        const std::uint64_t lo = share_offset(cores.size(), G, b);
        const std::uint64_t n = share_of(cores.size(), G, b);
        for (std::uint64_t c = 0; c < n; ++c) blocks[gi].push_back(cores[lo + c]);
    }
    return blocks;
}

EventId Planner::plan_partitioned(std::uint32_t op_idx, std::span<const CoreId> cores,
                                  std::uint64_t row_parts, std::uint64_t row_idx,
                                  std::vector<std::string>* warnings) {
    const OperatorDesc& op = ops_[op_idx];
    builder_.begin_wave();
    const auto after = after_of(op_idx);
    const std::uint64_t C = cores.size();
    std::vector<EventId> events;

    if (op.kind == OpKind::Elementwise || op.kind == OpKind::Softmax ||
        op.kind == OpKind::Reduce) {
        // Row partition across the cores; secondary inputs slice
        // proportionally so total bytes stay core-count independent.
        const std::uint64_t total =
            op.kind == OpKind::Softmax ? op.rows : (op.kind == OpKind::Reduce ? op.elems : op.elems);
        const std::uint64_t rows = share_of(total, row_parts, row_idx);
        const std::uint64_t row0 = share_offset(total, row_parts, row_idx);
        for (std::uint64_t c = 0; c < C; ++c) {
            const std::uint64_t mine = share_of(rows, C, c);
            if (mine == 0) continue;
            const std::uint64_t off = row0 + share_offset(rows, C, c);
            std::vector<TensorId> ins;
            for (const Operand& in : op.inputs) {
                const Bytes ref_bytes =
                    op.kind == OpKind::Softmax ? op.rows * op.cols * ds_ : op.elems * ds_;
                if (in.bytes >= ref_bytes) {
                    const Bytes unit = op.kind == OpKind::Softmax ? op.cols * ds_ : ds_;
                    const TensorId v = view_of(in.name, off * unit, mine * unit);
                    if (in.persistent) count_weight(cores[c], v, mine * unit);
                    ins.push_back(v);
                } else {
                    // Small operand (norm weights): exact per-part slice so
                    // totals stay core-count independent.
                    const std::uint64_t elems = in.bytes / ds_;
                    const std::uint64_t parts = row_parts * C;
                    const std::uint64_t part = row_idx * C + c;
                    const std::uint64_t len = share_of(elems, parts, part);
                    if (len == 0) continue;
                    const std::uint64_t eoff = share_offset(elems, parts, part);
                    const TensorId v = view_of(in.name, eoff * ds_, len * ds_);
                    if (in.persistent) count_weight(cores[c], v, len * ds_);
                    ins.push_back(v);
                }
            }
            const Bytes unit = op.kind == OpKind::Softmax ? op.cols * ds_ : ds_;
            const TensorId outv = view_of(op.output.name, off * unit, mine * unit);
            OpTile tile;
            if (op.kind == OpKind::Softmax) {
                tile = OpTile::softmax(mine, op.cols, ins, outv);
            } else if (op.kind == OpKind::Reduce) {
                tile = OpTile::reduce(mine, ins, outv);
            } else {
                tile = OpTile::elementwise(mine, op.fused_inputs, ins, outv);
            }
            events.push_back(builder_.compute(std::move(tile), cores[c], after));
        }
        const EventId done = completion(std::move(events));
        set_done(op_idx, done);
        return done;
    }

    // MatMul: A (m x k) activation, B (k x n) weights; pm = 1.
    const std::uint64_t m = share_of(op.m, row_parts, row_idx);
    const std::uint64_t mrow0 = share_offset(op.m, row_parts, row_idx);
    if (m == 0) throw PlanError("empty microbatch");
    const MatmulSplit split = choose_split(op, C);
    const std::uint64_t pk = split.pk, pn = split.pn;
    if (warnings && pk * pn < C) {
        warnings->push_back("operator " + op.name + " too small to use all " +
                            std::to_string(C) + " cores; using " + std::to_string(pk * pn));
    }
    const Operand& a_op = op.inputs.at(0);
    const Operand& b_op = op.inputs.at(1);

    // Reduction rings: folded order keeps ring neighbors adjacent.
    std::vector<std::uint32_t> l_order(pk);
    for (std::uint64_t l = 0; l < pk; ++l) l_order[l] = static_cast<std::uint32_t>(l);
    if (opts_.tile_map == TileMapPolicy::DimensionOrdered && pk > 1)
        l_order = folded_ring_order(static_cast<std::uint32_t>(pk));

    std::vector<std::vector<EventId>> partial_done(pn);
    std::vector<std::vector<TensorId>> partial_region(pn);
    for (std::uint64_t j = 0; j < pn; ++j) {
        const std::uint64_t nc = share_of(op.n, pn, j);
        const std::uint64_t noff = share_offset(op.n, pn, j);
        if (nc == 0) continue;
        for (std::uint64_t l = 0; l < pk; ++l) {
            const std::uint64_t kc = share_of(op.k, pk, l);
            const std::uint64_t koff = share_offset(op.k, pk, l);
            if (kc == 0) continue;
            const CoreId core = cores[(j * pk + l_order[l]) % C];

            // Output target: DRAM view when no reduction, an SRAM partial
            // accumulator otherwise.
            TensorId out_target;
            if (pk == 1) {
                // Pre-tiled layout: row-block window of the output columns.
                const Bytes off = (mrow0 * op.n + m * noff) * ds_;
                out_target = view_of(op.output.name, off, m * nc * ds_);
            } else {
                out_target = builder_.add_sram_tensor(DType::BF16, {m * nc}, core);
                partial_region[j].push_back(out_target);
            }

            // Sub-tile (m x kc x nc) to the SRAM budget. K chunks accumulate
            // into the same output (serialized by the write-after-write dep).
            std::uint64_t mc = m, kcc = kc, ncc = nc;
            auto ws = [&] { return (mc * kcc + kcc * ncc + mc * ncc) * ds_; };
            while (ws() > budget_) {
                if (mc >= ncc && mc >= kcc && mc > 1) mc = ceil_div(mc, 2);
                else if (ncc >= kcc && ncc > 1) ncc = ceil_div(ncc, 2);
                else if (kcc > 1) kcc = ceil_div(kcc, 2);
                else break;
            }
            std::vector<EventId> tile_events;
            // Pre-tiled block bases (contiguous per (l, j) block).
            const Bytes a_base = (mrow0 * op.k + m * koff) * ds_;
            const Bytes b_base = (koff * op.n + kc * noff) * ds_;
            for (std::uint64_t mi = 0; mi < m; mi += mc) {
                const std::uint64_t mm = std::min(mc, m - mi);
                for (std::uint64_t ni = 0; ni < nc; ni += ncc) {
                    const std::uint64_t nn = std::min(ncc, nc - ni);
                    for (std::uint64_t ki = 0; ki < kc; ki += kcc) {
                        const std::uint64_t kk = std::min(kcc, kc - ki);
                        // Chunk windows: row-strip-major for A (shared across
                        // ni), column-strip-major for B (shared across mi).
                        const TensorId av =
                            view_of(a_op.name, a_base + (mi * kc + ki * mm) * ds_, mm * kk * ds_);
                        if (a_op.persistent) count_weight(core, av, mm * kk * ds_);
                        const TensorId bv =
                            view_of(b_op.name, b_base + (kc * ni + ki * nn) * ds_, kk * nn * ds_);
                        if (b_op.persistent) count_weight(core, bv, kk * nn * ds_);
                        TensorId outv = out_target;
                        if (pk == 1 && (mc < m || ncc < nc)) {
                            const Bytes off =
                                (mrow0 * op.n + m * noff + mi * nc + mm * ni) * ds_;
                            outv = view_of(op.output.name, off, mm * nn * ds_);
                        }
                        tile_events.push_back(builder_.compute(
                            OpTile::matmul(mm, kk, nn, {av, bv}, outv), core, after));
                    }
                }
            }
            if (pk > 1) {
                partial_done[j].push_back(completion(std::move(tile_events)));
            } else {
                for (EventId e : tile_events) events.push_back(e);
            }
        }
    }

    if (pk > 1) {
        // Barrier, then ring AllReduce per output block, then one store.
        for (std::uint64_t j = 0; j < pn; ++j) {
            if (partial_region[j].empty()) continue;
            const EventId barrier = builder_.sync(partial_done[j]);
            std::vector<CoreId> ring;
            for (std::uint64_t l = 0; l < partial_region[j].size(); ++l)
                ring.push_back(cores[(j * pk + l_order[l]) % C]);
            if (partial_region[j].size() > 1) {
                const std::vector<EventId> barrier_dep{barrier};
                auto evs = builder_.collective(CollectiveKind::AllReduce, partial_region[j], ring,
                                               barrier_dep);
                ++allreduce_ops_;
                const EventId red_done = builder_.sync(evs);
                const std::uint64_t nc = share_of(op.n, pn, j);
                const std::uint64_t noff = share_offset(op.n, pn, j);
                const Bytes off = (mrow0 * op.n + m * noff) * ds_;
                const TensorId outv = view_of(op.output.name, off, m * nc * ds_);
                events.push_back(
                    builder_.movedata(partial_region[j][0], outv,
                                      std::vector<EventId>{red_done}));
            } else {
                const std::uint64_t nc = share_of(op.n, pn, j);
                const std::uint64_t noff = share_offset(op.n, pn, j);
                const Bytes off = (mrow0 * op.n + m * noff) * ds_;
                const TensorId outv = view_of(op.output.name, off, m * nc * ds_);
                events.push_back(builder_.movedata(partial_region[j][0], outv,
                                                   std::vector<EventId>{barrier}));
            }
        }
    }

    const EventId done = completion(std::move(events));
    set_done(op_idx, done);
    return done;
}

EventId Planner::plan_shifted_matmul(std::uint32_t op_idx, std::span<const CoreId> cores,
                                     std::vector<std::string>* warnings) {
    const OperatorDesc& op = ops_[op_idx];
    const Operand& a_op = op.inputs.at(0);
    const Operand& b_op = op.inputs.at(1);
    const std::uint64_t C = cores.size();

    // Row rings of the grid side (or the whole set when smaller).
    const std::uint64_t R = std::min<std::uint64_t>(geom_.grid_cols, C);
    const std::uint64_t G = std::max<std::uint64_t>(C / R, 1);
    // A circulating shard must fit alongside its receive buffer and the
    // accumulator; oversized shards fall back to the partitioned plan.
    const std::uint64_t shard_elems_max = ceil_div(ceil_div(op.n, G), R) * op.k;
    if (shard_elems_max * ds_ > spec_.sram_per_core / 3) {
        if (warnings)
            warnings->push_back("operator " + op.name +
                                " weight shard exceeds the shift budget; partitioned fallback");
        return plan_partitioned(op_idx, cores, 1, 0, warnings);
    }
    if (warnings && op.m < R) {
        warnings->push_back("operator " + op.name +
                            " has fewer rows than the ring length; some ring members idle");
    }
    builder_.begin_wave();
    const auto after = after_of(op_idx);

    // Ring positions follow the tile-to-core policy.
    std::vector<std::uint32_t> order(R);
    for (std::uint64_t i = 0; i < R; ++i) order[i] = static_cast<std::uint32_t>(i);
    if (opts_.tile_map == TileMapPolicy::DimensionOrdered)
        order = folded_ring_order(static_cast<std::uint32_t>(R));

    std::vector<EventId> events;
    for (std::uint64_t g = 0; g < G; ++g) {
        const std::uint64_t ng = share_of(op.n, G, g);
        const std::uint64_t ng_off = share_offset(op.n, G, g);
        if (ng == 0) continue;

        std::vector<CoreId> member(R);
        for (std::uint64_t j = 0; j < R; ++j) member[j] = cores[g * R + order[j]];

        // Shard s: columns [ns_off, ns_off + ns) of the ring block; the
        // pre-tiled window of B it occupies.
        auto shard_view = [&](std::uint64_t s) {
            const std::uint64_t ns = share_of(ng, R, s);
            const std::uint64_t ns_off = share_offset(ng, R, s);
            const Bytes off = (ng_off + ns_off) * op.k * ds_;
            return view_of(b_op.name, off, std::max<std::uint64_t>(ns * op.k, 1) * ds_);
        };
        auto shard_cols = [&](std::uint64_t s) { return share_of(ng, R, s); };

        // One SRAM buffer per (member, step): holds shard (j - t) mod R.
        // Lifetimes are step-local, so at most two are live per member.
        std::vector<std::vector<TensorId>> buf(R, std::vector<TensorId>(R));
        for (std::uint64_t j = 0; j < R; ++j) {
            for (std::uint64_t t = 0; t < R; ++t) {
                const std::uint64_t s = (j + R - t) % R;
                buf[j][t] = builder_.add_sram_tensor(
                    DType::BF16, {std::max<std::uint64_t>(shard_cols(s) * op.k, 1)}, member[j]);
            }
        }

        std::vector<EventId> holder(R, kNoEvent);  // event making buf[j][t] valid
        for (std::uint64_t j = 0; j < R; ++j) {
            const TensorId sv = shard_view(j);
            if (b_op.persistent)
                count_weight(member[j], sv, std::max<std::uint64_t>(shard_cols(j) * op.k, 1) * ds_);
            holder[j] = builder_.movedata(sv, buf[j][0], after);
            events.push_back(holder[j]);
        }
        std::vector<EventId> last_compute(R, kNoEvent);
        for (std::uint64_t t = 0; t < R; ++t) {
            std::vector<EventId> next_holder(R, kNoEvent);
            for (std::uint64_t j = 0; j < R; ++j) {
                const std::uint64_t s = (j + R - t) % R;
                const std::uint64_t ns = shard_cols(s);
                const std::uint64_t ns_off = share_offset(ng, R, s);
                const std::uint64_t mj = share_of(op.m, R, j);
                const std::uint64_t m_off = share_offset(op.m, R, j);
                if (mj > 0 && ns > 0) {
                    // Sub-tile (mj x k x ns) against the resident shard; the
                    // shard stays whole, so only A and the output chunk.
                    std::uint64_t mc = mj, kcc = op.k;
                    auto ws = [&] { return (mc * kcc + kcc * ns + mc * ns) * ds_; };
                    while (ws() > budget_) {
                        if (mc > 1) mc = ceil_div(mc, 2);
                        else if (kcc > 1) kcc = ceil_div(kcc, 2);
                        else break;
                    }
                    const TensorId outv = view_of(
                        op.output.name,
                        (m_off * op.n + mj * (ng_off + ns_off)) * ds_, mj * ns * ds_);
                    for (std::uint64_t mi = 0; mi < mj; mi += mc) {
                        const std::uint64_t mm = std::min(mc, mj - mi);
                        for (std::uint64_t ki = 0; ki < op.k; ki += kcc) {
                            const std::uint64_t kk = std::min(kcc, op.k - ki);
                            const Bytes a_off = (m_off * op.k + mi * op.k + ki * mm) * ds_;
                            const TensorId av = view_of(a_op.name, a_off, mm * kk * ds_);
                            if (a_op.persistent) count_weight(member[j], av, mm * kk * ds_);
                            TensorId out_chunk = outv;
                            if (mc < mj) {
                                out_chunk = view_of(op.output.name,
                                                    (m_off * op.n + mj * (ng_off + ns_off) +
                                                     mi * ns) * ds_,
                                                    mm * ns * ds_);
                            }
                            std::vector<EventId> deps{holder[j]};
                            if (last_compute[j] != kNoEvent) deps.push_back(last_compute[j]);
                            last_compute[j] = builder_.compute(
                                OpTile::matmul(mm, kk, ns, {av, buf[j][t]}, out_chunk),
                                member[j], deps);
                            events.push_back(last_compute[j]);
                        }
                    }
                }
                // Shift the shard onward unless every member has seen it.
                if (t + 1 < R) {
                    const std::uint64_t to = (j + 1) % R;
                    next_holder[to] = builder_.movedata(buf[j][t], buf[to][t + 1],
                                                        std::vector<EventId>{holder[j]});
                    events.push_back(next_holder[to]);
                }
            }
            if (t + 1 < R) holder = next_holder;
        }
    }

    const EventId done = completion(std::move(events));
    set_done(op_idx, done);
    return done;
}

std::vector<CoreId> all_cores(const ChipSpec& spec) {
    std::vector<CoreId> cores(spec.num_cores);
    for (CoreId c = 0; c < spec.num_cores; ++c) cores[c] = c;
    return cores;
}

}  // namespace

BuiltPlan plan_spmd(const std::vector<OperatorDesc>& ops, const ChipSpec& spec,
                    const PlanOptions& opts) {
    Planner planner(ops, spec, opts);
    std::vector<std::string> warnings;
    const auto cores = all_cores(spec);
    const auto sections = sectionize(ops);
    for (const Section& s : sections) {
        if (!s.parallel) {
            planner.plan_partitioned(s.ops[0], cores, 1, 0, &warnings);
            continue;
        }
        const auto blocks = planner.head_blocks(s, cores);
        std::map<std::int32_t, std::size_t> block_of;
        std::size_t next = 0;
        for (std::uint32_t oi : s.ops) {
            const auto g = planner.op(oi).group;
            if (!block_of.count(g)) block_of[g] = next++;
            planner.plan_partitioned(oi, blocks[block_of[g]], 1, 0, &warnings);
        }
    }
    return planner.take(std::move(warnings));
}

BuiltPlan plan_dataflow(const std::vector<OperatorDesc>& ops, const ChipSpec& spec,
                        const PlanOptions& opts) {
    Planner planner(ops, spec, opts);
    std::vector<std::string> warnings;
    const auto sections = sectionize(ops);
    if (opts.dataflow_stages > ops.size())
        throw PlanError("pipeline stage count " + std::to_string(opts.dataflow_stages) +
                        " exceeds operator count " + std::to_string(ops.size()));
    const std::uint32_t S =
        std::max<std::uint32_t>(1, std::min<std::uint32_t>(opts.dataflow_stages,
                                                           static_cast<std::uint32_t>(sections.size())));
    // Balance stage FLOPs greedily at section granularity.
    double total = 0;
    for (const Section& s : sections) total += s.flops;
    std::vector<std::vector<std::uint32_t>> stage_sections(S);
    {
        double acc = 0;
        std::uint32_t stage = 0;
        const double target = total / S;
        for (std::uint32_t i = 0; i < sections.size(); ++i) {
            stage_sections[stage].push_back(i);
            acc += sections[i].flops;
            if (acc >= target * (stage + 1) * 0.999 && stage + 1 < S) ++stage;
        }
    }
    // Disjoint contiguous core subsets per stage.
    const auto cores = all_cores(spec);
    std::vector<std::vector<CoreId>> subset(S);
    for (std::uint32_t s = 0; s < S; ++s) {
        const std::uint64_t lo = share_offset(cores.size(), S, s);
        const std::uint64_t n = share_of(cores.size(), S, s);
        for (std::uint64_t c = 0; c < n; ++c) subset[s].push_back(cores[lo + c]);
    }

    // Microbatches stream through the stages; each (stage, microbatch) cell
    // re-plans the stage's operators on the stage subset over its row window.
    const std::uint32_t mb = std::max<std::uint32_t>(1, opts.microbatches);
    // Completion of (section, microbatch) for cross-microbatch deps is via
    // per-op completion bookkeeping inside the planner: the per-op done event
    // is overwritten each microbatch, so consumers in the next stage chain to
    // the same microbatch's producer.
    for (std::uint32_t m = 0; m < mb; ++m) {
        for (std::uint32_t s = 0; s < S; ++s) {
            for (std::uint32_t si : stage_sections[s]) {
                const Section& sec = sections[si];
                if (!sec.parallel) {
                    planner.plan_partitioned(sec.ops[0], subset[s], mb, m, &warnings);
                } else {
                    const auto blocks = planner.head_blocks(sec, subset[s]);
                    std::map<std::int32_t, std::size_t> block_of;
                    std::size_t next = 0;
                    for (std::uint32_t oi : sec.ops) {
                        const auto g = planner.op(oi).group;
                        if (!block_of.count(g)) block_of[g] = next++;
                        planner.plan_partitioned(oi, blocks[block_of[g]], mb, m, &warnings);
                    }
                }
            }
        }
    }
    return planner.take(std::move(warnings));
}

BuiltPlan plan_compute_shift(const std::vector<OperatorDesc>& ops, const ChipSpec& spec,
                             const PlanOptions& opts) {
    Planner planner(ops, spec, opts);
    std::vector<std::string> warnings;
    const auto cores = all_cores(spec);
    const auto sections = sectionize(ops);
    for (const Section& s : sections) {
        if (!s.parallel) {
            const OperatorDesc& op = planner.op(s.ops[0]);
            if (op.kind == OpKind::MatMul && op.inputs.size() >= 2 && op.inputs[1].persistent) {
                planner.plan_shifted_matmul(s.ops[0], cores, &warnings);
            } else {
                planner.plan_partitioned(s.ops[0], cores, 1, 0, &warnings);
            }
            continue;
        }
        const auto blocks = planner.head_blocks(s, cores);
        std::map<std::int32_t, std::size_t> block_of;
        std::size_t next = 0;
        for (std::uint32_t oi : s.ops) {
            const auto g = planner.op(oi).group;
            if (!block_of.count(g)) block_of[g] = next++;
            const OperatorDesc& op = planner.op(oi);
            // Per-head matmuls against the KV cache shift too when cached.
            if (op.kind == OpKind::MatMul && op.inputs.size() >= 2 && op.inputs[1].persistent &&
                blocks[block_of[g]].size() > 1) {
                planner.plan_shifted_matmul(oi, blocks[block_of[g]], &warnings);
            } else {
                planner.plan_partitioned(oi, blocks[block_of[g]], 1, 0, &warnings);
            }
        }
    }
    return planner.take(std::move(warnings));
}

BuiltPlan build_plan(const std::vector<OperatorDesc>& ops, const ChipSpec& spec,
                     const PlanOptions& opts) {
    switch (opts.paradigm) {
        case Paradigm::Spmd: return plan_spmd(ops, spec, opts);
        case Paradigm::Dataflow: return plan_dataflow(ops, spec, opts);
        case Paradigm::ComputeShift: return plan_compute_shift(ops, spec, opts);
    }
    return plan_spmd(ops, spec, opts);
}

}  // namespace voxel
