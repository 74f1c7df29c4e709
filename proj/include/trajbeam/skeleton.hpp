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


#ifndef TRAJBEAM_SKELETON_HPP
#define TRAJBEAM_SKELETON_HPP

#include "trajbeam/arraysim.hpp"
#include "trajbeam/error.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace trajbeam
{
    struct AnglePair
    {
        double aod_rad = 0.0;
        double aoa_rad = 0.0;
        bool operator==(const AnglePair &) const = default;
    };

    // The L strongest (AoD, AoA) pairs at one location, strongest first.
    // Missing paths (blockage) are empty slots.
    class PathSkeleton
    {
    public:
        PathSkeleton() = default;
        explicit PathSkeleton(std::vector<std::optional<AnglePair>> pairs) : pairs_(std::move(pairs)) {}

        std::size_t length() const { return pairs_.size(); }
        const std::vector<std::optional<AnglePair>> &pairs() const { return pairs_; }
        const std::optional<AnglePair> &operator[](std::size_t l) const { return pairs_.at(l); }
        std::size_t present() const
        {
            return static_cast<std::size_t>(std::count_if(pairs_.begin(), pairs_.end(), [](const auto &p) { return p.has_value(); }));
        }
        bool operator==(const PathSkeleton &) const = default;

    private:
        std::vector<std::optional<AnglePair>> pairs_;
    };

    struct BeamIndexPair
    {
        std::size_t bs = 0;
        std::size_t ue = 0;
        auto operator<=>(const BeamIndexPair &) const = default;
    };

    // Skeleton on the codebook grid.
    class QuantizedSkeleton
    {
    public:
        QuantizedSkeleton() = default;
        explicit QuantizedSkeleton(std::vector<std::optional<BeamIndexPair>> pairs) : pairs_(std::move(pairs)) {}

        std::size_t length() const { return pairs_.size(); }
        const std::vector<std::optional<BeamIndexPair>> &pairs() const { return pairs_; }
        const std::optional<BeamIndexPair> &operator[](std::size_t l) const { return pairs_.at(l); }
        auto operator<=>(const QuantizedSkeleton &) const = default;

        std::string to_string() const
        {
            std::string out = "[";
            for (std::size_t l = 0; l < pairs_.size(); ++l)
            {
                if (l)
                    out += ",";
                out += pairs_[l] ? "(" + std::to_string(pairs_[l]->bs) + "," + std::to_string(pairs_[l]->ue) + ")" : "null";
            }
            return out + "]";
        }

    private:
        std::vector<std::optional<BeamIndexPair>> pairs_;
    };

    // Top-L paths by |gain|; equal gains are ordered by ascending AoD.
    inline PathSkeleton extract_skeleton(std::span<const PathComponent> paths, std::size_t length)
    {
        detail::require(length >= 1, "extract_skeleton: L must be >= 1");
        std::vector<const PathComponent *> order;
        order.reserve(paths.size());
        for (const auto &p : paths)
            order.push_back(&p);
        std::stable_sort(order.begin(), order.end(), [](const PathComponent *a, const PathComponent *b)
                         {
                             const double ga = std::abs(a->gain), gb = std::abs(b->gain);
                             if (ga != gb)
                                 return ga > gb;
                             return a->aod_rad < b->aod_rad; });
        std::vector<std::optional<AnglePair>> pairs(length);
        for (std::size_t l = 0; l < length && l < order.size(); ++l)
            pairs[l] = AnglePair{order[l]->aod_rad, order[l]->aoa_rad};
        return PathSkeleton(std::move(pairs));
    }

    // |a(phi_a)^H a(phi_b)| for an n-element half-wavelength ULA.
    inline double steering_overlap(double phi_a, double phi_b, std::size_t n)
    {
        return std::abs(array_response(phi_a, n).inner(array_response(phi_b, n)));
    }

    // sum_l |a_UE(aoa_b,l)^H a_UE(aoa_a,l)| |a_BS(aod_b,l)^H a_BS(aod_a,l)|, paired by rank.
    // Larger means more alike; the range is [0, L].
    inline double skeleton_distance(const PathSkeleton &a, const PathSkeleton &b, std::size_t n_bs, std::size_t n_ue)
    {
        detail::require(a.length() == b.length(), "skeleton_distance: skeleton lengths differ");
        double d = 0.0;
        for (std::size_t l = 0; l < a.length(); ++l)
        {
            if (!a[l] || !b[l])
                continue;
            d += steering_overlap(b[l]->aoa_rad, a[l]->aoa_rad, n_ue) * steering_overlap(b[l]->aod_rad, a[l]->aod_rad, n_bs);
        }
        return d;
    }

    // Nearest grid beam in sin(phi); exact midpoints go to the lower index.
    inline std::size_t nearest_beam(const Codebook &book, double angle_rad)
    {
        detail::require(book.size() >= 1, "nearest_beam: empty codebook");
        const double u = std::sin(angle_rad);
        std::size_t best = 0;
        double best_gap = std::abs(u - book.sine(0));
        for (std::size_t k = 1; k < book.size(); ++k)
        {
            const double gap = std::abs(u - book.sine(k));
            if (gap < best_gap - 1e-12)
            {
                best = k;
                best_gap = gap;
            }
        }
        return best;
    }

    inline QuantizedSkeleton quantize_skeleton(const PathSkeleton &ps, const Codebook &bs_book, const Codebook &ue_book)
    {
        std::vector<std::optional<BeamIndexPair>> pairs(ps.length());
        for (std::size_t l = 0; l < ps.length(); ++l)
            if (ps[l])
                pairs[l] = BeamIndexPair{nearest_beam(bs_book, ps[l]->aod_rad), nearest_beam(ue_book, ps[l]->aoa_rad)};
        return QuantizedSkeleton(std::move(pairs));
    }

    inline PathSkeleton dequantize_skeleton(const QuantizedSkeleton &q, const Codebook &bs_book, const Codebook &ue_book)
    {
        std::vector<std::optional<AnglePair>> pairs(q.length());
        for (std::size_t l = 0; l < q.length(); ++l)
            if (q[l])
                pairs[l] = AnglePair{bs_book.angle(q[l]->bs), ue_book.angle(q[l]->ue)};
        return PathSkeleton(std::move(pairs));
    }

    // Similarity between quantized skeletons from cached codebook overlaps.
    // Equivalent to skeleton_distance on the dequantized skeletons.
    class SkeletonMetric
    {
    public:
        SkeletonMetric() = default;
        SkeletonMetric(const Codebook &bs_book, const Codebook &ue_book)
            : bs_overlap_((bs_book.matrix().adjoint() * bs_book.matrix()).cwiseAbs()),
              ue_overlap_((ue_book.matrix().adjoint() * ue_book.matrix()).cwiseAbs())
        {
        }

        std::size_t bs_size() const { return static_cast<std::size_t>(bs_overlap_.rows()); }
        std::size_t ue_size() const { return static_cast<std::size_t>(ue_overlap_.rows()); }

        double distance(const QuantizedSkeleton &a, const QuantizedSkeleton &b) const
        {
            detail::require(a.length() == b.length(), "SkeletonMetric::distance: skeleton lengths differ");
            double d = 0.0;
            for (std::size_t l = 0; l < a.length(); ++l)
            {
                if (!a[l] || !b[l])
                    continue;
                d += ue_overlap_(static_cast<Eigen::Index>(b[l]->ue), static_cast<Eigen::Index>(a[l]->ue)) *
                     bs_overlap_(static_cast<Eigen::Index>(b[l]->bs), static_cast<Eigen::Index>(a[l]->bs));
            }
            return d;
        }

        bool valid(const QuantizedSkeleton &q) const
        {
            return std::all_of(q.pairs().begin(), q.pairs().end(), [&](const auto &p)
                               { return !p || (p->bs < bs_size() && p->ue < ue_size()); });
        }

    private:
        Eigen::MatrixXd bs_overlap_;
        Eigen::MatrixXd ue_overlap_;
    };
}

template <>
struct std::hash<trajbeam::QuantizedSkeleton>
{
    std::size_t operator()(const trajbeam::QuantizedSkeleton &q) const noexcept
    {
        std::size_t h = q.length();
        for (const auto &p : q.pairs())
        {
            const std::size_t v = p ? (p->bs * 1315423911u) ^ (p->ue + 0x9e3779b9u) : 0x7f4a7c15u;
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

#endif
