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

#include "voxel/noc_model.hpp"

#include <cmath>

namespace voxel {

Route route(CoreId src, CoreId dst, NocTopology topo, const DerivedGeometry& geom) {
    Route r;
    r.src = src;
    r.dst = dst;
    if (src == dst) return r;
    if (topo == NocTopology::AllToAll) {
        r.links.push_back(make_link(src, dst));
        return r;
    }
    const std::uint32_t rows = geom.grid_rows;
    const std::uint32_t cols = geom.grid_cols;
    std::uint32_t row = geom.core_row(src);
    std::uint32_t col = geom.core_col(src);
    const std::uint32_t drow = geom.core_row(dst);
    const std::uint32_t dcol = geom.core_col(dst);

    auto step_to = [&](std::uint32_t nrow, std::uint32_t ncol) {
        r.links.push_back(make_link(geom.core_at(row, col), geom.core_at(nrow, ncol)));
        row = nrow;
        col = ncol;
    };

    // X (column) dimension first, then Y.
    while (col != dcol) {
        std::uint32_t next;
        if (topo == NocTopology::Mesh2D) {
            next = col < dcol ? col + 1 : col - 1;
        } else {
            const std::uint32_t fwd = (dcol + cols - col) % cols;  // distance going +1
            next = (fwd <= cols - fwd) ? (col + 1) % cols : (col + cols - 1) % cols;
        }
        step_to(row, next);
    }
    while (row != drow) {
        std::uint32_t next;
        if (topo == NocTopology::Mesh2D) {
            next = row < drow ? row + 1 : row - 1;
        } else {
            const std::uint32_t fwd = (drow + rows - row) % rows;
            next = (fwd <= rows - fwd) ? (row + 1) % rows : (row + rows - 1) % rows;
        }
        step_to(next, col);
    }
    return r;
}

Cycles transfer_time(Bytes bytes, const Route& r, std::uint32_t max_contenders_over_route,
                     std::uint32_t link_bw, Cycles hop_latency) {
    if (max_contenders_over_route == 0) max_contenders_over_route = 1;
    const double share = static_cast<double>(link_bw) / max_contenders_over_route;
    const Cycles serialization =
        bytes == 0 ? 0 : static_cast<Cycles>(std::ceil(static_cast<double>(bytes) / share));
    return serialization + static_cast<Cycles>(r.hop_count()) * hop_latency;
}

FluidNoc::TransferId FluidNoc::start(Bytes bytes, Route route, Cycles now) {
    const TransferId id = next_id_++;
    Transfer t;
    t.route = std::move(route);
    t.remaining = static_cast<double>(bytes);
    t.last_update = now;
    for (LinkId l : t.route.links) ++link_load_[l];
    transfers_.emplace(id, std::move(t));
    recompute_rates();
    ++generation_;
    return id;
}

void FluidNoc::advance(Cycles now) {
    for (auto& [id, t] : transfers_) {
        if (now > t.last_update) {
            t.remaining -= t.rate * static_cast<double>(now - t.last_update);
            if (t.remaining < 0) t.remaining = 0;
            t.last_update = now;
        }
    }
}

std::optional<std::pair<Cycles, FluidNoc::TransferId>> FluidNoc::next_completion() const {
    std::optional<std::pair<Cycles, TransferId>> best;
    for (const auto& [id, t] : transfers_) {
        Cycles finish;
        if (t.remaining <= 1e-9) {
            finish = t.last_update;
        } else {
            finish = t.last_update +
                     static_cast<Cycles>(std::ceil(t.remaining / t.rate - 1e-12));
        }
        if (!best || finish < best->first) best = {finish, id};
    }
    return best;
}

bool FluidNoc::drained(TransferId id) const {
    auto it = transfers_.find(id);
    return it != transfers_.end() && it->second.remaining <= 1e-9;
}

void FluidNoc::complete(TransferId id) {
    auto it = transfers_.find(id);
    if (it == transfers_.end()) throw SimError("completing unknown NoC transfer");
    for (LinkId l : it->second.route.links) {
        auto lit = link_load_.find(l);
        if (lit != link_load_.end() && --lit->second == 0) link_load_.erase(lit);
    }
    transfers_.erase(it);
    recompute_rates();
    ++generation_;
}

void FluidNoc::recompute_rates() {
    for (auto& [id, t] : transfers_) {
        std::uint32_t max_load = 1;
        for (LinkId l : t.route.links) {
            auto lit = link_load_.find(l);
            if (lit != link_load_.end() && lit->second > max_load) max_load = lit->second;
        }
        t.rate = static_cast<double>(link_bw_) / max_load;
    }
}

}  // namespace voxel
