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

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "voxel/chipspec.hpp"
#include "voxel/common.hpp"

namespace voxel {

/// Directed link between adjacent routers, keyed (from << 32) | to.
using LinkId = std::uint64_t;

inline LinkId make_link(CoreId from, CoreId to) {
    return (static_cast<std::uint64_t>(from) << 32) | to;
}

struct Route {
    CoreId src = 0;
    CoreId dst = 0;
    std::vector<LinkId> links;

    std::uint32_t hop_count() const { return static_cast<std::uint32_t>(links.size()); }
};

/// Mesh2D: XY dimension-ordered; Torus2D: per-axis shortest wraparound;
/// AllToAll: one direct link per ordered pair.
Route route(CoreId src, CoreId dst, NocTopology topo, const DerivedGeometry& geom);

/// Closed-form transfer estimate: serialization at the fair share of the most
/// contended link on the route, plus per-hop latency.
Cycles transfer_time(Bytes bytes, const Route& r, std::uint32_t max_contenders_over_route,
                     std::uint32_t link_bw, Cycles hop_latency);

/// Progressive fair-share (fluid) link contention. Each active transfer
/// progresses at link_bw / (max contender count over its route); rates are
/// re-evaluated whenever a transfer starts or ends on a shared link.
class FluidNoc {
public:
    FluidNoc(std::uint32_t link_bw, Cycles hop_latency)
        : link_bw_(link_bw), hop_latency_(hop_latency) {}

    using TransferId = std::uint64_t;

    /// Registers a transfer whose data starts flowing at `now` (advance first).
    TransferId start(Bytes bytes, Route route, Cycles now);

    /// Integrates progress of all active transfers up to `now`.
    void advance(Cycles now);

    /// Earliest predicted (completion_time, transfer) among active transfers.
    std::optional<std::pair<Cycles, TransferId>> next_completion() const;

    /// True when the transfer's data has fully drained.
    bool drained(TransferId id) const;

    /// Removes a drained transfer; the caller adds hop latency itself.
    void complete(TransferId id);

    Cycles hop_latency() const { return hop_latency_; }
    std::uint64_t generation() const { return generation_; }
    std::size_t active_count() const { return transfers_.size(); }

private:
    void recompute_rates();

    struct Transfer {
        Route route;
        double remaining = 0;
        double rate = 0;
        Cycles last_update = 0;
    };

    std::uint32_t link_bw_;
    Cycles hop_latency_;
    std::map<TransferId, Transfer> transfers_;
    std::map<LinkId, std::uint32_t> link_load_;
    TransferId next_id_ = 1;
    std::uint64_t generation_ = 0;  // bumped on every membership change
};

}  // namespace voxel
