// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef TRAJBEAM_BASELINES_HPP
#define TRAJBEAM_BASELINES_HPP

#include "trajbeam/error.hpp"
#include "trajbeam/partition.hpp"
#include "trajbeam/skeleton.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace trajbeam
{
    enum class BaselineKind
    {
        exhaustive,
        greedy,
        fixed,
    };

    // Every location is its own reference.
    inline Partition exhaustive_plan(std::size_t locations)
    {
        detail::require(locations >= 1, "exhaustive_plan: M must be >= 1");
        std::vector<Region> regions;
        std::vector<Measurement> measurements;
        for (std::size_t x = 1; x <= locations; ++x)
        {
            regions.push_back({x, x, x});
            measurements.push_back({x, std::nullopt, std::nullopt});
        }
        return make_partition(locations, std::move(regions), std::move(measurements));
    }

    // Single forward pass over a realized skeleton sequence (`skeletons[x - 1]`
    // at location x). A new region starts at the first location whose skeleton
    // is dissimilar (d <= gamma) to the current reference.
    inline Partition greedy_plan(const std::vector<QuantizedSkeleton> &skeletons, const SkeletonMetric &metric, double gamma)
    {
        detail::require(!skeletons.empty(), "greedy_plan: empty realization");
        const std::size_t m = skeletons.size();
        std::vector<Region> regions;
        std::vector<Measurement> measurements;
        std::size_t ref = 1;
        measurements.push_back({1, std::nullopt, skeletons[0]});
        for (std::size_t x = 2; x <= m; ++x)
        {
            if (metric.distance(skeletons[x - 1], skeletons[ref - 1]) <= gamma)
            {
                regions.push_back({ref, x - 1, ref});
                ref = x;
                measurements.push_back({x, std::nullopt, skeletons[x - 1]});
            }
        }
        regions.push_back({ref, m, ref});
        return make_partition(m, std::move(regions), std::move(measurements));
    }

    // Regions ending at `boundaries` (strictly increasing, last = M), each
    // served by its first location.
    inline Partition fixed_plan(std::size_t locations, const std::vector<std::size_t> &boundaries)
    {
        detail::require(locations >= 1, "fixed_plan: M must be >= 1");
        detail::require(!boundaries.empty() && boundaries.back() == locations,
                        "fixed_plan: last boundary must equal M = " + std::to_string(locations));
        std::vector<Region> regions;
        std::vector<Measurement> measurements;
        std::size_t first = 1;
        for (const std::size_t b : boundaries)
        {
            detail::require(b >= first, "fixed_plan: boundaries must be strictly increasing and positive");
            regions.push_back({first, b, first});
            measurements.push_back({first, std::nullopt, std::nullopt});
            first = b + 1;
        }
        return make_partition(locations, std::move(regions), std::move(measurements));
    }

    // K equal-as-possible regions, the larger ones first.
    inline std::vector<std::size_t> even_boundaries(std::size_t locations, std::size_t regions)
    {
        detail::require(regions >= 1 && regions <= locations, "even_boundaries: need 1 <= K <= M");
        std::vector<std::size_t> out;
        std::size_t end = 0;
        for (std::size_t k = 0; k < regions; ++k)
        {
            end += locations / regions + (k < locations % regions ? 1 : 0);
            out.push_back(end);
        }
        return out;
    }
}

#endif
