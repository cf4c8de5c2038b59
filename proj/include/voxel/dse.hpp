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
#include <functional>
#include <string>
#include <vector>

#include "voxel/chipspec.hpp"
#include "voxel/common.hpp"

namespace voxel {

/// One tunable ChipSpec parameter with its discrete domain.
struct DseParameter {
    std::string key;                  // config key, applied via the loader
    std::vector<std::string> values;  // candidate settings, in sweep order
};

/// Default powers-of-two sweep domains over the main design decisions.
std::vector<DseParameter> default_dse_domains();

struct DsePoint {
    ChipSpec spec;
    double area = 0;
    double objective = 0;  // geomean latency over the workload set
    bool feasible = false;
};

struct DseTrace {
    std::vector<DsePoint> visited;
    DsePoint best;
    std::uint64_t evaluations = 0;
    std::uint64_t cache_hits = 0;
};

/// Objective: geomean latency (cycles) of the workload set under a spec.
/// Infeasible or failing configurations return +inf.
using Objective = std::function<double(const ChipSpec&)>;

/// Cycles through the parameters; for each, tries every domain value and
/// keeps the feasible setting that minimizes the objective. Stops when a
/// full cycle yields no improvement.
DseTrace coordinate_descent(const ChipSpec& initial, double area_limit,
                            const std::vector<DseParameter>& domains, const Objective& objective);

struct ParetoPoint {
    double area = 0;
    double latency = 0;
    std::uint64_t tag = 0;  // spec hash or caller id

    bool operator==(const ParetoPoint&) const = default;
};

/// Non-dominated set under (area down, latency down), sorted by area;
/// duplicates removed.
std::vector<ParetoPoint> pareto_frontier(std::vector<ParetoPoint> points);

/// Multi-threshold search: runs coordinate descent at geometric area
/// thresholds (ratio 0.75) and collects every evaluated point.
struct FrontierResult {
    std::vector<DsePoint> evaluated;
    std::vector<ParetoPoint> frontier;
};

FrontierResult explore_frontier(const ChipSpec& initial, double area_limit,
                                const std::vector<DseParameter>& domains,
                                const Objective& objective, std::uint32_t thresholds = 4);

}  // namespace voxel
