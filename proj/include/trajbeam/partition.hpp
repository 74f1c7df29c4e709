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


#ifndef TRAJBEAM_PARTITION_HPP
#define TRAJBEAM_PARTITION_HPP

#include "trajbeam/error.hpp"
#include "trajbeam/skeleton.hpp"

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace trajbeam
{
    // A location whose skeleton was measured (a reference point).
    struct Measurement
    {
        std::size_t location = 0;
        std::optional<std::size_t> state;
        std::optional<QuantizedSkeleton> skeleton;
        bool operator==(const Measurement &) const = default;
    };

    struct Region
    {
        std::size_t first = 0;
        std::size_t last = 0;
        std::size_t reference = 0;
        std::size_t size() const { return last - first + 1; }
        bool operator==(const Region &) const = default;
    };

    // Regions R_k = {boundaries[k-1] + 1, ..., boundaries[k]}, each served by
    // references[k - 1]. Measurements are kept in the order they were taken.
    struct Partition
    {
        std::size_t locations = 0;
        std::vector<std::size_t> boundaries;
        std::vector<std::size_t> references;
        std::vector<Measurement> measurements;

        std::size_t region_count() const { return references.size(); }
        std::size_t measurement_count() const { return measurements.size(); }

        std::vector<Region> regions() const
        {
            std::vector<Region> out;
            for (std::size_t k = 0; k + 1 < boundaries.size() && k < references.size(); ++k)
                out.push_back({boundaries[k] + 1, boundaries[k + 1], references[k]});
            return out;
        }

        // Maximal runs of consecutive locations served by the same reference.
        std::vector<Region> serving_runs() const
        {
            std::vector<Region> out;
            for (const auto &r : regions())
            {
                if (!out.empty() && out.back().reference == r.reference && out.back().last + 1 == r.first)
                    out.back().last = r.last;
                else
                    out.push_back(r);
            }
            return out;
        }

        // reference serving each location, index 0 = location 1
        std::vector<std::size_t> reference_of_location() const
        {
            std::vector<std::size_t> out(locations, 0);
            for (const auto &r : regions())
                for (std::size_t x = r.first; x <= r.last && x <= locations; ++x)
                    out[x - 1] = r.reference;
            return out;
        }

        const Measurement *measurement_at(std::size_t x) const
        {
            for (const auto &m : measurements)
                if (m.location == x)
                    return &m;
            return nullptr;
        }

        bool operator==(const Partition &) const = default;
    };

    // Where a region's reference may sit relative to the region.
    enum class ReferenceRule
    {
        endpoint,     // x_k in {alpha_{k-1}, alpha_k}
        region_start, // x_k = alpha_{k-1} + 1
        adjacent,     // x_k in R_k or directly next to it
    };

    // Empty optional when the partition is valid under `rule`.
    inline std::optional<std::string> partition_violation(const Partition &p, ReferenceRule rule)
    {
        const std::size_t m = p.locations;
        if (m == 0)
            return "no locations";
        if (p.boundaries.size() < 2 || p.boundaries.front() != 0 || p.boundaries.back() != m)
            return "boundaries must run from 0 to M";
        for (std::size_t k = 1; k < p.boundaries.size(); ++k)
            if (p.boundaries[k] <= p.boundaries[k - 1])
                return "boundaries must be strictly increasing (regions are non-empty)";
        if (p.references.size() + 1 != p.boundaries.size())
            return "need exactly one reference per region";

        std::set<std::size_t> measured;
        for (const auto &meas : p.measurements)
        {
            if (meas.location < 1 || meas.location > m)
                return "measurement outside the trajectory";
            if (!measured.insert(meas.location).second)
                return "location measured twice";
        }

        for (std::size_t k = 1; k < p.boundaries.size(); ++k)
        {
            const std::size_t lo = p.boundaries[k - 1], hi = p.boundaries[k], ref = p.references[k - 1];
            const std::string where = "region " + std::to_string(k) + " {" + std::to_string(lo + 1) + ".." + std::to_string(hi) + "}";
            if (ref < 1 || ref > m)
                return where + ": reference outside [1, M]";
            if (!p.measurements.empty() && !measured.count(ref))
                return where + ": reference " + std::to_string(ref) + " was never measured";
            bool ok = false;
            switch (rule)
            {
            case ReferenceRule::endpoint:
                ok = ref == lo || ref == hi;
                break;
            case ReferenceRule::region_start:
                ok = ref == lo + 1;
                break;
            case ReferenceRule::adjacent:
                ok = ref >= std::max<std::size_t>(lo, 1) && ref <= hi + 1;
                break;
            }
            if (!ok)
                return where + ": reference " + std::to_string(ref) + " violates the placement rule";
        }
        return std::nullopt;
    }

    inline bool is_valid_partition(const Partition &p, ReferenceRule rule) { return !partition_violation(p, rule); }

    inline Partition make_partition(std::size_t locations, std::vector<Region> regions, std::vector<Measurement> measurements)
    {
        std::sort(regions.begin(), regions.end(), [](const Region &a, const Region &b) { return a.first < b.first; });
        Partition p;
        p.locations = locations;
        p.boundaries.push_back(0);
        for (const auto &r : regions)
        {
            detail::require(r.first == p.boundaries.back() + 1 && r.last >= r.first, "make_partition: regions must tile the trajectory");
            p.boundaries.push_back(r.last);
            p.references.push_back(r.reference);
        }
        detail::require(p.boundaries.back() == locations, "make_partition: regions must end at M");
        p.measurements = std::move(measurements);
        return p;
    }
}

#endif
