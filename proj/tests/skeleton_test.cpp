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


#include "support/oracles.hpp"
#include "trajbeam/skeleton.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace trajbeam;
using trajbeam::testing::cd;

namespace
{
    PathSkeleton random_skeleton(std::mt19937_64 &rng, std::size_t len, double null_share)
    {
        std::uniform_real_distribution<double> ang(-1.5, 1.5), u(0.0, 1.0);
        std::vector<std::optional<AnglePair>> pairs(len);
        for (auto &p : pairs)
            if (u(rng) >= null_share)
                p = AnglePair{ang(rng), ang(rng)};
        return PathSkeleton(pairs);
    }
}

TEST(ExtractSkeleton, StrongestPathsInGainOrder)
{
    std::vector<PathComponent> paths{{cd(0.1, 0), 0.1, 0.0}, {cd(0, -0.5), 0.2, 0.0}, {cd(0.3, 0), 0.3, 0.0}, {cd(0.05, 0), 0.4, 0.0}, {cd(0.4, 0), 0.5, 0.0}};
    const auto ps = extract_skeleton(paths, 3);
    ASSERT_EQ(ps.length(), 3u);
    EXPECT_DOUBLE_EQ(ps[0]->aod_rad, 0.2);
    EXPECT_DOUBLE_EQ(ps[1]->aod_rad, 0.5);
    EXPECT_DOUBLE_EQ(ps[2]->aod_rad, 0.3);
}

TEST(ExtractSkeleton, PadsWithNull)
{
    std::vector<PathComponent> paths{{cd(1, 0), 0.1, 0.2}};
    const auto ps = extract_skeleton(paths, 3);
    EXPECT_TRUE(ps[0].has_value());
    EXPECT_FALSE(ps[1].has_value());
    EXPECT_FALSE(ps[2].has_value());
    EXPECT_EQ(ps.present(), 1u);
}

TEST(ExtractSkeleton, EqualGainsByAscendingAod)
{
    std::vector<PathComponent> paths{{cd(0.5, 0), 0.7, 0.0}, {cd(0, 0.5), -0.2, 0.0}};
    const auto ps = extract_skeleton(paths, 2);
    EXPECT_DOUBLE_EQ(ps[0]->aod_rad, -0.2);
    EXPECT_DOUBLE_EQ(ps[1]->aod_rad, 0.7);
}

TEST(ExtractSkeleton, ZeroLengthRejected)
{
    EXPECT_THROW(extract_skeleton({}, 0), InvalidArgument);
}

TEST(SkeletonDistance, IdenticalNullFreeEqualsLength)
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i)
    {
        const auto s = random_skeleton(rng, 3, 0.0);
        EXPECT_NEAR(skeleton_distance(s, s, 64, 4), 3.0, 1e-12);
    }
}

TEST(SkeletonDistance, OrthogonalBeamsGiveZero)
{
    const auto fb = dft_codebook(8, 8), wb = dft_codebook(4, 4);
    PathSkeleton a({AnglePair{fb.angle(0), wb.angle(0)}, AnglePair{fb.angle(3), wb.angle(1)}});
    PathSkeleton b({AnglePair{fb.angle(5), wb.angle(2)}, AnglePair{fb.angle(4), wb.angle(3)}});
    EXPECT_NEAR(skeleton_distance(a, b, 8, 4), 0.0, 1e-12);
}

TEST(SkeletonDistance, SinglePairMatchesInnerProductOracle)
{
    const double shifted = std::asin(2.0 / 64.0);
    PathSkeleton a({AnglePair{0.0, 0.3}});
    PathSkeleton b({AnglePair{shifted, 0.3}});
    const double expected = trajbeam::testing::dirichlet_overlap(0.0, shifted, 64) * trajbeam::testing::dirichlet_overlap(0.3, 0.3, 4);
    EXPECT_NEAR(skeleton_distance(a, b, 64, 4), expected, 1e-12);
    // off-grid shift: nonzero overlap, still matches
    PathSkeleton c({AnglePair{std::asin(0.011), 0.25}});
    EXPECT_NEAR(skeleton_distance(a, c, 64, 4),
                trajbeam::testing::dirichlet_overlap(0.0, std::asin(0.011), 64) * trajbeam::testing::dirichlet_overlap(0.3, 0.25, 4), 1e-12);
}

TEST(SkeletonDistance, RangeSymmetryAndNullMonotonicity)
{
    std::mt19937_64 rng(5);
    for (int i = 0; i < 300; ++i)
    {
        const auto a = random_skeleton(rng, 3, 0.2);
        const auto b = random_skeleton(rng, 3, 0.2);
        const double d = skeleton_distance(a, b, 16, 4);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 3.0 + 1e-12);
        EXPECT_NEAR(d, skeleton_distance(b, a, 16, 4), 1e-12);
        for (std::size_t l = 0; l < 3; ++l)
        {
            auto pairs = b.pairs();
            pairs[l].reset();
            EXPECT_LE(skeleton_distance(a, PathSkeleton(pairs), 16, 4), d + 1e-12);
        }
    }
}

TEST(SkeletonDistance, LengthMismatchRejected)
{
    EXPECT_THROW(skeleton_distance(PathSkeleton(std::vector<std::optional<AnglePair>>(2)), PathSkeleton(std::vector<std::optional<AnglePair>>(3)), 4, 4),
                 InvalidArgument);
}

TEST(Quantize, OnGridAnglesMapToTheirIndex)
{
    const auto fb = dft_codebook(8, 16), wb = dft_codebook(4, 8);
    for (std::size_t k = 0; k < 16; ++k)
        EXPECT_EQ(nearest_beam(fb, fb.angle(k)), k);
    for (std::size_t k = 0; k < 8; ++k)
        EXPECT_EQ(nearest_beam(wb, wb.angle(k)), k);
}

TEST(Quantize, MidpointGoesToLowerIndex)
{
    const auto fb = dft_codebook(8, 16);
    for (std::size_t k = 0; k + 1 < 16; ++k)
    {
        const double mid = 0.5 * (fb.sine(k) + fb.sine(k + 1));
        EXPECT_EQ(nearest_beam(fb, std::asin(mid)), k);
    }
}

TEST(Quantize, DequantizedWithinHalfStepByGridScan)
{
    const auto fb = dft_codebook(8, 16), wb = dft_codebook(4, 8);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i)
    {
        const auto s = random_skeleton(rng, 3, 0.2);
        const auto q = quantize_skeleton(s, fb, wb);
        const auto back = dequantize_skeleton(q, fb, wb);
        for (std::size_t l = 0; l < 3; ++l)
        {
            ASSERT_EQ(s[l].has_value(), back[l].has_value());
            if (!s[l])
                continue;
            // nearest by a full scan
            double best = 10.0;
            for (std::size_t k = 0; k < fb.size(); ++k)
                best = std::min(best, std::abs(std::sin(s[l]->aod_rad) - fb.sine(k)));
            EXPECT_NEAR(std::abs(std::sin(s[l]->aod_rad) - std::sin(back[l]->aod_rad)), best, 1e-12);
            EXPECT_LE(best, 1.0 / 16.0 + 1e-12);
        }
    }
}

TEST(Quantize, IdempotentOnGridAlignedSkeletons)
{
    const auto fb = dft_codebook(8, 16), wb = dft_codebook(4, 8);
    const QuantizedSkeleton q({BeamIndexPair{3, 1}, std::nullopt, BeamIndexPair{15, 7}});
    const auto once = dequantize_skeleton(q, fb, wb);
    EXPECT_EQ(quantize_skeleton(once, fb, wb), q);
    EXPECT_EQ(dequantize_skeleton(quantize_skeleton(once, fb, wb), fb, wb), once);
}

TEST(SkeletonMetric, AgreesWithAngleDistance)
{
    const auto fb = dft_codebook(8, 16), wb = dft_codebook(4, 8);
    const SkeletonMetric metric(fb, wb);
    std::mt19937_64 rng(21);
    std::uniform_int_distribution<std::size_t> bi(0, 15), wi(0, 7), coin(0, 4);
    for (int i = 0; i < 200; ++i)
    {
        std::vector<std::optional<BeamIndexPair>> a(3), b(3);
        for (std::size_t l = 0; l < 3; ++l)
        {
            if (coin(rng))
                a[l] = BeamIndexPair{bi(rng), wi(rng)};
            if (coin(rng))
                b[l] = BeamIndexPair{bi(rng), wi(rng)};
        }
        const QuantizedSkeleton qa(a), qb(b);
        EXPECT_NEAR(metric.distance(qa, qb), skeleton_distance(dequantize_skeleton(qa, fb, wb), dequantize_skeleton(qb, fb, wb), 8, 4), 1e-12);
    }
}

TEST(SkeletonMetric, ValidityChecksIndices)
{
    const SkeletonMetric metric(dft_codebook(4, 8), dft_codebook(2, 4));
    EXPECT_TRUE(metric.valid(QuantizedSkeleton({BeamIndexPair{7, 3}, std::nullopt})));
    EXPECT_FALSE(metric.valid(QuantizedSkeleton({BeamIndexPair{8, 0}})));
    EXPECT_FALSE(metric.valid(QuantizedSkeleton({BeamIndexPair{0, 4}})));
}
