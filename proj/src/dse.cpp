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

#include "voxel/dse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace voxel {

std::vector<DseParameter> default_dse_domains() {
    return {
        {"num_cores", {"64", "256", "1024"}},
        {"sa_width", {"16", "32", "64"}},
        {"sram_per_core", {"512 KB", "2048 KB", "8192 KB"}},
        {"noc_link_bw", {"16", "32", "64"}},
        {"dram_total_bw", {"4 TB/s", "8 TB/s", "12 TB/s", "16 TB/s"}},
        {"core_group_size", {"1", "8", "16"}},
    };
}

namespace {

ChipSpec apply_value(const ChipSpec& base, const std::string& key, const std::string& value) {
    ConfigDoc doc = ConfigDoc::parse_text(render_spec(base));
    doc.set(key, value);
    return load_spec(doc);
}

}  // namespace

DseTrace coordinate_descent(const ChipSpec& initial, double area_limit,
                            const std::vector<DseParameter>& domains, const Objective& objective) {
    DseTrace trace;
    if (area_of(initial).total() > area_limit)
        throw ValidationError("no feasible initial point: initial spec area " +
                              std::to_string(area_of(initial).total()) + " mm2 exceeds the limit " +
                              std::to_string(area_limit));

    std::map<std::uint64_t, double> cache;  // spec hash -> objective
    auto evaluate = [&](const ChipSpec& s) {
        const std::uint64_t h = spec_hash(s);
        auto it = cache.find(h);
        if (it != cache.end()) {
            ++trace.cache_hits;
            return it->second;
        }
        ++trace.evaluations;
        double v;
        try {
            v = objective(s);
        } catch (const std::exception&) {
            v = std::numeric_limits<double>::infinity();
        }
        cache.emplace(h, v);
        return v;
    };

    ChipSpec current = initial;
    double best = evaluate(current);
    trace.visited.push_back(DsePoint{current, area_of(current).total(), best, true});

    bool improved = true;
    while (improved) {
        improved = false;
        for (const DseParameter& param : domains) {
            ChipSpec best_spec = current;
            double best_here = best;
            for (const std::string& value : param.values) {
                ChipSpec candidate;
                try {
                    candidate = apply_value(current, param.key, value);
                } catch (const std::exception&) {
                    continue;  // invalid combination
                }
                const double area = area_of(candidate).total();
                const bool feasible = area <= area_limit;
                double v = std::numeric_limits<double>::infinity();
                if (feasible) v = evaluate(candidate);
                trace.visited.push_back(DsePoint{candidate, area, v, feasible});
                if (feasible && v < best_here) {
                    best_here = v;
                    best_spec = candidate;
                }
            }
            if (best_here < best) {
                best = best_here;
                current = best_spec;
                improved = true;
            }
        }
    }
    trace.best = DsePoint{current, area_of(current).total(), best, true};
    return trace;
}

std::vector<ParetoPoint> pareto_frontier(std::vector<ParetoPoint> points) {
    std::sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        return std::tie(a.area, a.latency, a.tag) < std::tie(b.area, b.latency, b.tag);
    });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    std::vector<ParetoPoint> frontier;
    double best_latency = std::numeric_limits<double>::infinity();
    for (const ParetoPoint& p : points) {
        if (p.latency < best_latency) {
            frontier.push_back(p);
            best_latency = p.latency;
        }
    }
    return frontier;
}

FrontierResult explore_frontier(const ChipSpec& initial, double area_limit,
                                const std::vector<DseParameter>& domains,
                                const Objective& objective, std::uint32_t thresholds) {
    FrontierResult out;
    double limit = area_limit;
    for (std::uint32_t i = 0; i < thresholds; ++i, limit *= 0.75) {
        ChipSpec start = initial;
        if (area_of(start).total() > limit) {
            // Shrink the starting point into the threshold; the smallest
            // domain values bound the reachable area.
            bool ok = false;
            for (const DseParameter& param : domains) {
                try {
                    start = apply_value(start, param.key, param.values.front());
                } catch (const std::exception&) {
                    continue;
                }
                if (area_of(start).total() <= limit) {
                    ok = true;
                    break;
                }
            }
            if (!ok && area_of(start).total() > limit) continue;
        }
        const DseTrace trace = coordinate_descent(start, limit, domains, objective);
        for (const DsePoint& p : trace.visited) out.evaluated.push_back(p);
    }
    std::vector<ParetoPoint> pts;
    for (const DsePoint& p : out.evaluated) {
        if (p.feasible && std::isfinite(p.objective))
            pts.push_back(ParetoPoint{p.area, p.objective, spec_hash(p.spec)});
    }
    out.frontier = pareto_frontier(std::move(pts));
    return out;
}

}  // namespace voxel
