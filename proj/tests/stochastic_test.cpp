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
#include "trajbeam/stochastic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace trajbeam;
namespace tt = trajbeam::testing;

namespace
{
    SkeletonProcess default_process(std::uint64_t seed, std::size_t length = 3)
    {
        return derive_process(build_scenario(ScenarioConfig{}, seed), BlockageModel{}, dft_codebook(64, 128), dft_codebook(4, 128), length);
    }

    SkeletonProcess symmetric_two_state(std::size_t m, double stay)
    {
        std::vector<std::vector<QuantizedSkeleton>> labels(m, {tt::one_path(1, 0), tt::one_path(5, 2)});
        Eigen::MatrixXd k(2, 2);
        k << stay, 1.0 - stay, 1.0 - stay, stay;
        Eigen::VectorXd init(2);
        init << 0.5, 0.5;
        return SkeletonProcess(labels, init, std::vector<Eigen::MatrixXd>(m - 1, k), SkeletonMetric(tt::small_bs_book(), tt::small_ue_book()), k);
    }
}

TEST(Scenario, GeometryFollowsConfig)
{
    ScenarioConfig cfg;
    const auto sc = build_scenario(cfg, 4);
    ASSERT_EQ(sc.locations(), 10u);
    for (std::size_t i = 1; i < sc.locations(); ++i)
        EXPECT_NEAR(sc.trajectory[i].x - sc.trajectory[i - 1].x, 1.0, 1e-12);
    EXPECT_NEAR(sc.trajectory.front().x + sc.trajectory.back().x, 0.0, 1e-12);
    EXPECT_EQ(sc.walls.size(), cfg.reflectors);
    ASSERT_EQ(sc.path_slots(), 1 + cfg.reflectors);
    // line of sight: AoD is the bearing from the BS
    for (std::size_t x = 1; x <= sc.locations(); ++x)
    {
        const auto &los = *sc.candidate_paths[x - 1][0];
        const double dx = sc.trajectory[x - 1].x - sc.bs_position.x, dy = sc.trajectory[x - 1].y - sc.bs_position.y;
        EXPECT_NEAR(std::sin(los.aod_rad), dx / std::hypot(dx, dy), 1e-12);
        EXPECT_NEAR(std::sin(los.aoa_rad), -dx / std::hypot(dx, dy), 1e-12);
    }
}

TEST(Scenario, DeterministicPerSeed)
{
    EXPECT_EQ(build_scenario(ScenarioConfig{}, 17), build_scenario(ScenarioConfig{}, 17));
    EXPECT_NE(build_scenario(ScenarioConfig{}, 17), build_scenario(ScenarioConfig{}, 18));
}

TEST(Scenario, InvalidConfigRejected)
{
    ScenarioConfig cfg;
    cfg.locations = 0;
    EXPECT_THROW(build_scenario(cfg, 1), InvalidArgument);
    cfg = {};
    cfg.wall_distance_max_m = 1.0;
    EXPECT_THROW(build_scenario(cfg, 1), InvalidArgument);
}

TEST(DeriveProcess, BlockagePatternsAsStates)
{
    const auto p = default_process(2);
    ASSERT_EQ(p.locations(), 10u);
    EXPECT_EQ(p.max_state_count(), 16u);
    EXPECT_TRUE(p.homogeneous());
    for (std::size_t x = 1; x < p.locations(); ++x)
        for (Eigen::Index r = 0; r < p.kernel(x).rows(); ++r)
            EXPECT_NEAR(p.kernel(x).row(r).sum(), 1.0, 1e-12);
    // all paths blocked: every entry Null
    const auto &all_blocked = p.label(3, 15);
    for (std::size_t l = 0; l < all_blocked.length(); ++l)
        EXPECT_FALSE(all_blocked[l].has_value());
}

TEST(DeriveProcess, KernelIsProductOfPerPathChains)
{
    BlockageModel b;
    const auto p = default_process(2);
    const auto &k = p.step_kernel();
    // state 0b0101 -> 0b0011: path0 stays blocked, path1 unblocks->blocked, path2 blocked->unblocked, path3 stays unblocked
    const double expected = b.stay_blocked * (1 - b.stay_unblocked) * (1 - b.stay_blocked) * b.stay_unblocked;
    EXPECT_NEAR(k(0b0101, 0b0011), expected, 1e-15);
    EXPECT_NEAR(p.initial()(0), std::pow(1 - b.initial_blocked, 4), 1e-15);
}

TEST(DeriveProcess, CapsAndLengthChecks)
{
    const auto sc = build_scenario(ScenarioConfig{}, 1);
    EXPECT_THROW(derive_process(sc, BlockageModel{}, dft_codebook(64, 128), dft_codebook(4, 128), 3, 8), CapacityError);
    EXPECT_THROW(derive_process(sc, BlockageModel{}, dft_codebook(64, 128), dft_codebook(4, 128), 5), InvalidArgument);
}

TEST(TransitionKernel, ChapmanKolmogorov)
{
    const auto p = default_process(6);
    for (std::size_t a : {0u, 1u, 2u, 5u})
        for (std::size_t b : {1u, 3u, 4u})
        {
            const Eigen::MatrixXd lhs = transition_kernel(p, a + b);
            const Eigen::MatrixXd rhs = transition_kernel(p, a) * transition_kernel(p, b);
            EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
        }
    EXPECT_LE((transition(p, 2, 7) - transition_kernel(p, 5)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TransitionKernel, InhomogeneousRejected)
{
    std::mt19937_64 rng(1);
    const auto p = tt::random_instance(rng, 4, 3);
    EXPECT_THROW(transition_kernel(p, 2), InvalidArgument);
}

TEST(TransitionTable, ConditionalsMatchPathEnumeration)
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 40; ++trial)
    {
        const auto p = tt::random_instance(rng, 5, 3);
        const TransitionTable table(p);
        const auto paths = tt::enumerate_paths(p);
        for (std::size_t x = 1; x <= 5; ++x)
        {
            const auto marg = tt::enumerated_conditional(p, x, {});
            for (std::size_t s = 0; s < marg.size(); ++s)
                EXPECT_NEAR(table.marginal(x)(static_cast<Eigen::Index>(s)), marg[s], 1e-12);
        }
        // forward / backward / bridge against every reachable evidence
        for (std::size_t xl = 1; xl <= 5; ++xl)
            for (std::size_t xh = xl; xh <= 5; ++xh)
                for (std::size_t x = xl; x <= xh; ++x)
                    for (std::size_t sl = 0; sl < p.state_count(xl); ++sl)
                    {
                        if (table.marginal(xl)(static_cast<Eigen::Index>(sl)) <= 0.0)
                            continue;
                        const auto fwd = tt::enumerated_conditional(p, x, {{xl, sl}});
                        const auto got = table.forward(xl, sl, x);
                        for (std::size_t s = 0; s < fwd.size(); ++s)
                            EXPECT_NEAR(got(static_cast<Eigen::Index>(s)), fwd[s], 1e-12);
                        for (std::size_t sh = 0; sh < p.state_count(xh); ++sh)
                        {
                            double joint = 0.0;
                            for (const auto &wp : paths)
                                if (wp.states[xl - 1] == sl && wp.states[xh - 1] == sh)
                                    joint += wp.probability;
                            if (joint <= 0.0)
                            {
                                EXPECT_THROW(table.bridge(xl, xh, x, sl, sh), ConditioningError);
                                continue;
                            }
                            const auto br = tt::enumerated_conditional(p, x, {{xl, sl}, {xh, sh}});
                            const auto gb = table.bridge(xl, xh, x, sl, sh);
                            for (std::size_t s = 0; s < br.size(); ++s)
                                EXPECT_NEAR(gb(static_cast<Eigen::Index>(s)), br[s], 1e-12);
                        }
                    }
        for (std::size_t x = 1; x <= 5; ++x)
            for (std::size_t xh = x; xh <= 5; ++xh)
                for (std::size_t sh = 0; sh < p.state_count(xh); ++sh)
                {
                    if (table.marginal(xh)(static_cast<Eigen::Index>(sh)) <= 0.0)
                    {
                        EXPECT_THROW(table.backward(x, xh, sh), ConditioningError);
                        continue;
                    }
                    const auto bw = tt::enumerated_conditional(p, x, {{xh, sh}});
                    const auto got = table.backward(x, xh, sh);
                    for (std::size_t s = 0; s < bw.size(); ++s)
                        EXPECT_NEAR(got(static_cast<Eigen::Index>(s)), bw[s], 1e-12);
                }
    }
}

TEST(TransitionTable, BridgeEndpointsArePointMasses)
{
    const auto p = default_process(8);
    const TransitionTable table(p);
    for (std::size_t sl : {0u, 3u, 9u})
        for (std::size_t sh : {0u, 5u})
        {
            const auto at_l = table.bridge(2, 7, 2, sl, sh);
            const auto at_h = table.bridge(2, 7, 7, sl, sh);
            for (Eigen::Index s = 0; s < at_l.size(); ++s)
            {
                EXPECT_NEAR(at_l(s), s == static_cast<Eigen::Index>(sl) ? 1.0 : 0.0, 1e-12);
                EXPECT_NEAR(at_h(s), s == static_cast<Eigen::Index>(sh) ? 1.0 : 0.0, 1e-12);
            }
        }
}

TEST(TransitionTable, SymmetricChainMidpointBridge)
{
    const auto p = symmetric_two_state(5, 0.8);
    const auto got = bridge_distribution(p, 1, 5, 3, 0, 0);
    const auto ref = tt::enumerated_conditional(p, 3, {{1, 0}, {5, 0}});
    EXPECT_NEAR(got(0), ref[0], 1e-12);
    EXPECT_NEAR(got(1), ref[1], 1e-12);
    // two steps each side: P(same) = 0.68 per half
    EXPECT_NEAR(got(0), 0.68 * 0.68 / (0.68 * 0.68 + 0.32 * 0.32), 1e-12);
}

TEST(TransitionTable, RangeErrors)
{
    const auto p = symmetric_two_state(4, 0.9);
    const TransitionTable table(p);
    EXPECT_THROW(table.forward(3, 0, 2), InvalidArgument);
    EXPECT_THROW(table.backward(4, 3, 0), InvalidArgument);
    EXPECT_THROW(table.bridge(1, 3, 4, 0, 0), InvalidArgument);
    EXPECT_THROW(table.marginal(5), std::out_of_range);
}

TEST(Coverage, ProbabilityMatchesEnumeration)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto p = tt::random_instance(rng, 4, 3);
        const TransitionTable table(p);
        for (std::size_t s = 0; s < p.state_count(1); ++s)
        {
            if (table.marginal(1)(static_cast<Eigen::Index>(s)) <= 0.0)
                continue;
            for (std::size_t x = 2; x <= 4; ++x)
            {
                const auto law = tt::enumerated_conditional(p, x, {{1, s}});
                double expected = 0.0;
                for (std::size_t t = 0; t < law.size(); ++t)
                    if (p.metric().distance(p.label(x, t), p.label(1, s)) <= 0.5)
                        expected += law[t];
                EXPECT_NEAR(coverage_prob(p, x, 1, s, Evidence::left(1, s), 0.5), expected, 1e-12);
            }
        }
    }
}

TEST(Sampling, EmpiricalMarginalsApproachModel)
{
    const auto p = symmetric_two_state(6, 0.7);
    std::mt19937_64 rng(99);
    const int n = 20000;
    std::vector<int> ones(6, 0);
    for (int i = 0; i < n; ++i)
    {
        const auto path = sample_path(p, rng);
        for (std::size_t x = 0; x < 6; ++x)
            ones[x] += static_cast<int>(path[x]);
    }
    for (std::size_t x = 0; x < 6; ++x)
        EXPECT_NEAR(ones[x] / double(n), 0.5, 4.0 * std::sqrt(0.25 / n));
}

TEST(Reversal, SameJointLaw)
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial)
    {
        const auto p = tt::random_instance(rng, 4, 3);
        const auto r = reversed(p);
        const auto fwd = tt::enumerate_paths(p);
        const auto bwd = tt::enumerate_paths(r);
        std::map<std::vector<std::size_t>, double> law;
        for (const auto &wp : fwd)
            law[wp.states] += wp.probability;
        for (const auto &wp : bwd)
        {
            std::vector<std::size_t> flipped(wp.states.rbegin(), wp.states.rend());
            EXPECT_NEAR(law[flipped], wp.probability, 1e-12);
        }
        for (std::size_t x = 1; x <= 4; ++x)
            EXPECT_EQ(r.labels(x), p.labels(5 - x));
    }
}

TEST(RaytraceCsv, ParsesAndRoundTrips)
{
    std::istringstream in("location_index,path_rank,aod_deg,aoa_deg,gain_db\n"
                          "1,1,10,-10,-80\n"
                          "1,2,-30.5,45,-95.25\n"
                          "2,1,12,-12,-81\n"
                          "2,3,50,60,-100\n");
    const auto sc = parse_raytrace_csv(in);
    ASSERT_EQ(sc.locations(), 2u);
    ASSERT_EQ(sc.candidate_paths[1].size(), 3u);
    EXPECT_FALSE(sc.candidate_paths[1][1].has_value());
    EXPECT_NEAR(sc.candidate_paths[0][1]->aod_rad, -30.5 * std::numbers::pi / 180.0, 1e-15);
    EXPECT_DOUBLE_EQ(sc.candidate_paths[0][1]->gain_db, -95.25);

    std::ostringstream out;
    write_raytrace_csv(sc, out);
    std::istringstream again(out.str());
    const auto back = parse_raytrace_csv(again);
    ASSERT_EQ(back.locations(), 2u);
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t p = 0; p < sc.candidate_paths[x].size(); ++p)
        {
            ASSERT_EQ(back.candidate_paths[x][p].has_value(), sc.candidate_paths[x][p].has_value());
            if (sc.candidate_paths[x][p])
            {
                EXPECT_NEAR(back.candidate_paths[x][p]->aod_rad, sc.candidate_paths[x][p]->aod_rad, 1e-15);
                EXPECT_NEAR(back.candidate_paths[x][p]->aoa_rad, sc.candidate_paths[x][p]->aoa_rad, 1e-15);
                EXPECT_EQ(back.candidate_paths[x][p]->gain_db, sc.candidate_paths[x][p]->gain_db);
            }
        }
}

TEST(RaytraceCsv, SchemaErrorsNameTheProblem)
{
    auto error_of = [](const std::string &text) -> std::string
    {
        std::istringstream in(text);
        try
        {
            parse_raytrace_csv(in, "t.csv");
        }
        catch (const SchemaError &e)
        {
            return e.what();
        }
        return "no error";
    };
    const std::string h = "location_index,path_rank,aod_deg,aoa_deg,gain_db\n";
    EXPECT_NE(error_of("a,b\n1,2\n").find("header"), std::string::npos);
    EXPECT_NE(error_of(h + "1,1,10,10\n").find("row 2: expected 5 columns"), std::string::npos);
    EXPECT_NE(error_of(h + "1,1,x,10,-80\n").find("column 3"), std::string::npos);
    EXPECT_NE(error_of(h + "1,1,10,10,-80\n3,1,10,10,-80\n").find("missing location_index 2"), std::string::npos);
    EXPECT_NE(error_of(h + "1,1,10,10,-80\n1,1,11,10,-80\n").find("duplicate path_rank"), std::string::npos);
    EXPECT_NE(error_of(h + "1,1,95,10,-80\n").find("angle"), std::string::npos);
    EXPECT_NE(error_of(h).find("no data rows"), std::string::npos);
    EXPECT_NE(error_of("").find("empty"), std::string::npos);
    EXPECT_THROW(import_raytrace_csv("/nonexistent/dir/file.csv"), IoError);
}

TEST(RaytraceCsv, ImportedScenarioFeedsTheProcess)
{
    std::istringstream in("location_index,path_rank,aod_deg,aoa_deg,gain_db\n"
                          "1,1,10,-10,-80\n1,2,-30,45,-95\n2,1,12,-12,-81\n2,2,-29,44,-96\n");
    const auto sc = parse_raytrace_csv(in);
    const auto p = derive_process(sc, BlockageModel{}, dft_codebook(8, 16), dft_codebook(4, 8), 2);
    EXPECT_EQ(p.locations(), 2u);
    EXPECT_EQ(p.max_state_count(), 4u);
    const auto &q = p.label(1, 0);
    EXPECT_EQ(q[0]->bs, nearest_beam(dft_codebook(8, 16), 10.0 * std::numbers::pi / 180.0));
}
