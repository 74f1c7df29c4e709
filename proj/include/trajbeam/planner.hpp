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


#ifndef TRAJBEAM_PLANNER_HPP
#define TRAJBEAM_PLANNER_HPP

#include "trajbeam/error.hpp"
#include "trajbeam/partition.hpp"
#include "trajbeam/skeleton.hpp"
#include "trajbeam/stochastic.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace trajbeam
{
    struct PlannerConfig
    {
        double gamma = 0.2;   // a location is "not covered" when d <= gamma
        double epsilon = 0.1; // tolerated probability of not being covered
        std::size_t skeleton_length = 3;
        std::size_t state_cap = 64;
        std::size_t oracle_max_locations = 6;
        std::size_t oracle_max_states = 4;

        void validate() const
        {
            detail::require(skeleton_length >= 1, "PlannerConfig: L must be >= 1");
            detail::require(gamma >= 0.0 && gamma <= static_cast<double>(skeleton_length), "PlannerConfig: gamma must lie in [0, L]");
            detail::require(epsilon >= 0.0 && epsilon <= 1.0, "PlannerConfig: epsilon must lie in [0, 1]");
        }
    };

    // Probabilities within this margin of epsilon count as satisfying the
    // chance constraint.
    inline constexpr double kCoverageSlack = 1e-12;
    // Candidate values closer than this are ties (smallest location wins).
    inline constexpr double kValueTie = 1e-12;

    enum class BlockType
    {
        type1, // both endpoint skeletons known
        type2, // left endpoint known
        type3, // right endpoint known
    };

    inline const char *to_string(BlockType t)
    {
        switch (t)
        {
        case BlockType::type1:
            return "type1";
        case BlockType::type2:
            return "type2";
        case BlockType::type3:
            return "type3";
        }
        return "?";
    }

    // Block {x_l + 1, ..., x_h} with the endpoint states its type requires.
    struct BlockState
    {
        BlockType type = BlockType::type1;
        std::size_t x_l = 0;
        std::size_t x_h = 0;
        std::optional<std::size_t> s_l;
        std::optional<std::size_t> s_h;

        static BlockState type1(std::size_t x_l, std::size_t x_h, std::size_t s_l, std::size_t s_h)
        {
            return {BlockType::type1, x_l, x_h, s_l, s_h};
        }
        static BlockState type2(std::size_t x_l, std::size_t x_h, std::size_t s_l) { return {BlockType::type2, x_l, x_h, s_l, std::nullopt}; }
        static BlockState type3(std::size_t x_l, std::size_t x_h, std::size_t s_h) { return {BlockType::type3, x_l, x_h, std::nullopt, s_h}; }

        bool well_formed() const
        {
            if (x_l > x_h)
                return false;
            switch (type)
            {
            case BlockType::type1:
                return s_l && s_h && x_l >= 1;
            case BlockType::type2:
                return s_l && !s_h && x_l >= 1;
            case BlockType::type3:
                return !s_l && s_h && x_h >= 1;
            }
            return false;
        }
        bool empty() const { return x_l == x_h; }
        bool operator==(const BlockState &) const = default;
    };

    struct BlockStateHash
    {
        std::size_t operator()(const BlockState &b) const noexcept
        {
            std::uint64_t h = static_cast<std::uint64_t>(b.type);
            for (std::uint64_t v : {static_cast<std::uint64_t>(b.x_l), static_cast<std::uint64_t>(b.x_h),
                                    b.s_l ? *b.s_l + 1 : 0, b.s_h ? *b.s_h + 1 : 0})
                h = (h ^ v) * 0x100000001b3ull + 0x9e3779b97f4a7c15ull;
            return static_cast<std::size_t>(h ^ (h >> 29));
        }
    };

    struct Decision
    {
        enum class Kind
        {
            no_ref,  // split point alpha, no new reference inside the block
            new_ref, // measure next at location `at`
        };
        Kind kind = Kind::no_ref;
        std::size_t at = 0;

        static Decision no_ref(std::size_t alpha) { return {Kind::no_ref, alpha}; }
        static Decision new_ref(std::size_t x) { return {Kind::new_ref, x}; }
        bool operator==(const Decision &) const = default;
    };

    struct ValueDecision
    {
        double value = 0.0;
        Decision decision;
    };

    // Adaptive measurement policy: the first reference point plus a decision
    // for every block state reachable with positive probability.
    struct Plan
    {
        std::size_t locations = 0;
        double expected_k = 0.0;
        Decision root;
        std::unordered_map<BlockState, ValueDecision, BlockStateHash> decisions;

        const ValueDecision *find(const BlockState &s) const
        {
            const auto it = decisions.find(s);
            return it == decisions.end() ? nullptr : &it->second;
        }
    };

    // Memoized block value functions. One instance per process; not
    // thread-safe, but independent instances may run concurrently.
    class Solver
    {
    public:
        Solver(const SkeletonProcess &process, PlannerConfig config) : table_(process), config_(config)
        {
            config_.validate();
            detail::require(process.skeleton_length() == config_.skeleton_length,
                            "Solver: process skeleton length differs from PlannerConfig::skeleton_length");
            const std::size_t m = process.locations();
            // dissimilar_[x][r](s, t) = d(label(x, s), label(r, t)) <= gamma
            dissimilar_.resize(m + 1);
            for (std::size_t x = 1; x <= m; ++x)
            {
                dissimilar_[x].resize(m + 1);
                for (std::size_t r = 1; r <= m; ++r)
                {
                    auto &tab = dissimilar_[x][r];
                    tab.resize(static_cast<Eigen::Index>(process.state_count(x)), static_cast<Eigen::Index>(process.state_count(r)));
                    for (std::size_t s = 0; s < process.state_count(x); ++s)
                        for (std::size_t t = 0; t < process.state_count(r); ++t)
                            tab(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) =
                                process.distance(x, s, r, t) <= config_.gamma ? 1.0 : 0.0;
                }
            }
        }

        const SkeletonProcess &process() const { return table_.process(); }
        const TransitionTable &table() const { return table_; }
        const PlannerConfig &config() const { return config_; }
        std::size_t memo_size() const { return memo_.size(); }

        ValueDecision value(const BlockState &state)
        {
            detail::require(state.well_formed() && state.x_h <= process().locations(), "Solver: malformed block state");
            switch (state.type)
            {
            case BlockType::type1:
                return value_type1(state);
            case BlockType::type2:
                return value_type2(state);
            case BlockType::type3:
                return value_type3(state);
            }
            return {};
        }

        // Both endpoints known. No new reference if some split alpha lets
        // x_l cover {x_l+1..alpha} and x_h cover {alpha+1..x_h}; splits inside
        // the block are preferred (smallest first), alpha = x_l is the fallback.
        ValueDecision value_type1(const BlockState &state)
        {
            detail::require(state.type == BlockType::type1 && state.well_formed(), "value_type1: expects a Type 1 state");
            if (state.empty())
                return {0.0, Decision::no_ref(state.x_l)};
            if (const auto *hit = lookup(state))
                return *hit;
            const std::size_t xl = state.x_l, xh = state.x_h, sl = *state.s_l, sh = *state.s_h;

            // by_left[i] / by_right[i] for x = xl + 1 + i
            const std::size_t n = xh - xl;
            std::vector<char> by_left(n), by_right(n);
            for (std::size_t x = xl + 1; x <= xh; ++x)
            {
                const auto p = table_.bridge(xl, xh, x, sl, sh);
                by_left[x - xl - 1] = covered(x, xl, sl, p);
                by_right[x - xl - 1] = covered(x, xh, sh, p);
            }
            // suffix_ok[i]: by_right holds for all x > xl + i
            std::vector<char> suffix_ok(n + 1, 1);
            for (std::size_t i = n; i-- > 0;)
                suffix_ok[i] = suffix_ok[i + 1] && by_right[i];
            std::optional<std::size_t> alpha;
            bool prefix_ok = true;
            for (std::size_t i = 1; i <= n && prefix_ok; ++i)
            {
                prefix_ok = by_left[i - 1];
                if (prefix_ok && suffix_ok[i])
                {
                    alpha = xl + i;
                    break;
                }
            }
            if (!alpha && suffix_ok[0])
                alpha = xl;
            if (alpha)
                return store(state, {0.0, Decision::no_ref(*alpha)});

            ValueDecision best{std::numeric_limits<double>::infinity(), {}};
            for (std::size_t x = xl + 1; x < xh; ++x)
            {
                const auto p = table_.bridge(xl, xh, x, sl, sh);
                double v = 1.0;
                for (Eigen::Index s = 0; s < p.size(); ++s)
                {
                    if (p(s) <= 0.0)
                        continue;
                    const auto st = static_cast<std::size_t>(s);
                    v += p(s) * (value_type1(BlockState::type1(xl, x, sl, st)).value +
                                 value_type1(BlockState::type1(x, xh, st, sh)).value);
                }
                if (v < best.value - kValueTie)
                    best = {v, Decision::new_ref(x)};
            }
            return store(state, best);
        }

        // Left endpoint known; the block extends to the end of what is planned.
        ValueDecision value_type2(const BlockState &state)
        {
            detail::require(state.type == BlockType::type2 && state.well_formed(), "value_type2: expects a Type 2 state");
            if (state.empty())
                return {0.0, Decision::no_ref(state.x_h)};
            if (const auto *hit = lookup(state))
                return *hit;
            const std::size_t xl = state.x_l, xh = state.x_h, sl = *state.s_l;

            bool all = true;
            for (std::size_t x = xl + 1; x <= xh && all; ++x)
                all = covered(x, xl, sl, table_.forward(xl, sl, x));
            if (all)
                return store(state, {0.0, Decision::no_ref(xh)});

            ValueDecision best{std::numeric_limits<double>::infinity(), {}};
            for (std::size_t x = xl + 1; x <= xh; ++x)
            {
                const auto p = table_.forward(xl, sl, x);
                double v = 1.0;
                for (Eigen::Index s = 0; s < p.size(); ++s)
                {
                    if (p(s) <= 0.0)
                        continue;
                    const auto st = static_cast<std::size_t>(s);
                    v += p(s) * (value_type1(BlockState::type1(xl, x, sl, st)).value +
                                 value_type2(BlockState::type2(x, xh, st)).value);
                }
                if (v < best.value - kValueTie)
                    best = {v, Decision::new_ref(x)};
            }
            return store(state, best);
        }

        // Right endpoint known, nothing observed to the left of the block.
        // Splitting at x gives Type 3 {x_l+1..x} and Type 1 {x+1..x_h}.
        ValueDecision value_type3(const BlockState &state)
        {
            detail::require(state.type == BlockType::type3 && state.well_formed(), "value_type3: expects a Type 3 state");
            if (state.empty())
                return {0.0, Decision::no_ref(state.x_l)};
            if (const auto *hit = lookup(state))
                return *hit;
            const std::size_t xl = state.x_l, xh = state.x_h, sh = *state.s_h;

            bool all = true;
            for (std::size_t x = xl + 1; x <= xh && all; ++x)
                all = covered(x, xh, sh, table_.backward(x, xh, sh));
            if (all)
                return store(state, {0.0, Decision::no_ref(xl)});

            ValueDecision best{std::numeric_limits<double>::infinity(), {}};
            for (std::size_t x = xl + 1; x < xh; ++x)
            {
                const auto p = table_.backward(x, xh, sh);
                double v = 1.0;
                for (Eigen::Index s = 0; s < p.size(); ++s)
                {
                    if (p(s) <= 0.0)
                        continue;
                    const auto st = static_cast<std::size_t>(s);
                    v += p(s) * (value_type3(BlockState::type3(xl, x, st)).value +
                                 value_type1(BlockState::type1(x, xh, st, sh)).value);
                }
                if (v < best.value - kValueTie)
                    best = {v, Decision::new_ref(x)};
            }
            return store(state, best);
        }

        // First reference point of the whole trajectory.
        ValueDecision value_root()
        {
            const std::size_t m = process().locations();
            ValueDecision best{std::numeric_limits<double>::infinity(), {}};
            for (std::size_t x = 1; x <= m; ++x)
            {
                const auto &p = table_.marginal(x);
                double v = 1.0;
                for (Eigen::Index s = 0; s < p.size(); ++s)
                {
                    if (p(s) <= 0.0)
                        continue;
                    const auto st = static_cast<std::size_t>(s);
                    v += p(s) * (value_type3(BlockState::type3(0, x, st)).value + value_type2(BlockState::type2(x, m, st)).value);
                }
                if (v < best.value - kValueTie)
                    best = {v, Decision::new_ref(x)};
            }
            return best;
        }

        Plan release_plan(const ValueDecision &root)
        {
            Plan plan;
            plan.locations = process().locations();
            plan.expected_k = root.value;
            plan.root = root.decision;
            plan.decisions = std::move(memo_);
            memo_.clear();
            return plan;
        }

    private:
        // A location is covered by reference (r, t) given the law p of its
        // state. A reference always covers its own location.
        bool covered(std::size_t x, std::size_t r, std::size_t t, const Eigen::VectorXd &p) const
        {
            if (x == r)
                return true;
            const double miss = p.dot(dissimilar_[x][r].col(static_cast<Eigen::Index>(t)));
            return miss <= config_.epsilon + kCoverageSlack;
        }

        const ValueDecision *lookup(const BlockState &s) const
        {
            const auto it = memo_.find(s);
            return it == memo_.end() ? nullptr : &it->second;
        }

        ValueDecision store(const BlockState &s, ValueDecision v)
        {
            memo_.emplace(s, v);
            return v;
        }

        TransitionTable table_;
        PlannerConfig config_;
        std::vector<std::vector<Eigen::MatrixXd>> dissimilar_;
        std::unordered_map<BlockState, ValueDecision, BlockStateHash> memo_;
    };

    inline Plan solve(const SkeletonProcess &process, const PlannerConfig &config)
    {
        Solver solver(process, config);
        const auto root = solver.value_root();
        return solver.release_plan(root);
    }

    // Returns the state of the skeleton process measured at a location.
    using MeasureFn = std::function<std::size_t(std::size_t location)>;

    // Walks the plan's decision tree against a realization and returns the
    // regions it induces.
    inline Partition realize_plan(const Plan &plan, const SkeletonProcess &process, const MeasureFn &measure)
    {
        detail::require(plan.locations == process.locations(), "realize_plan: plan and process disagree on M");
        const TransitionTable table(process);
        const std::size_t m = process.locations();
        std::vector<Region> regions;
        std::vector<Measurement> measurements;

        auto take = [&](std::size_t x, const Evidence &evidence) -> std::size_t
        {
            const std::size_t s = measure(x);
            if (s >= process.state_count(x))
                throw ModelMismatch("realize_plan: state " + std::to_string(s) + " at location " + std::to_string(x) +
                                    " is outside the modelled alphabet");
            const auto p = table.distribution(x, evidence);
            if (!(p(static_cast<Eigen::Index>(s)) > 0.0))
                throw ModelMismatch("realize_plan: state " + std::to_string(s) + " at location " + std::to_string(x) +
                                    " has probability zero under the model");
            measurements.push_back({x, s, process.label(x, s)});
            return s;
        };
        auto region = [&](std::size_t first, std::size_t last, std::size_t ref)
        {
            if (first <= last)
                regions.push_back({first, last, ref});
        };

        std::function<void(const BlockState &)> walk = [&](const BlockState &st)
        {
            if (st.empty())
                return;
            const auto *entry = plan.find(st);
            if (!entry)
                throw ModelMismatch(std::string("realize_plan: plan has no decision for ") + to_string(st.type) + " block (" +
                                    std::to_string(st.x_l) + ", " + std::to_string(st.x_h) + "]");
            const auto &d = entry->decision;
            switch (st.type)
            {
            case BlockType::type1:
                if (d.kind == Decision::Kind::no_ref)
                {
                    region(st.x_l + 1, d.at, st.x_l);
                    region(d.at + 1, st.x_h, st.x_h);
                }
                else
                {
                    const auto s = take(d.at, Evidence::both(st.x_l, *st.s_l, st.x_h, *st.s_h));
                    walk(BlockState::type1(st.x_l, d.at, *st.s_l, s));
                    walk(BlockState::type1(d.at, st.x_h, s, *st.s_h));
                }
                break;
            case BlockType::type2:
                if (d.kind == Decision::Kind::no_ref)
                    region(st.x_l + 1, st.x_h, st.x_l);
                else
                {
                    const auto s = take(d.at, Evidence::left(st.x_l, *st.s_l));
                    walk(BlockState::type1(st.x_l, d.at, *st.s_l, s));
                    walk(BlockState::type2(d.at, st.x_h, s));
                }
                break;
            case BlockType::type3:
                if (d.kind == Decision::Kind::no_ref)
                    region(st.x_l + 1, st.x_h, st.x_h);
                else
                {
                    const auto s = take(d.at, Evidence::right(st.x_h, *st.s_h));
                    walk(BlockState::type3(st.x_l, d.at, s));
                    walk(BlockState::type1(d.at, st.x_h, s, *st.s_h));
                }
                break;
            }
        };

        detail::require(plan.root.kind == Decision::Kind::new_ref && plan.root.at >= 1 && plan.root.at <= m,
                        "realize_plan: plan has no root reference");
        const std::size_t x0 = plan.root.at;
        const auto s0 = take(x0, Evidence::none());
        walk(BlockState::type3(0, x0, s0));
        walk(BlockState::type2(x0, m, s0));
        return make_partition(m, std::move(regions), std::move(measurements));
    }

    // `states[x - 1]` is the realized state at location x.
    inline Partition realize_plan(const Plan &plan, const SkeletonProcess &process, const std::vector<std::size_t> &states)
    {
        detail::require(states.size() == process.locations(), "realize_plan: realization length differs from M");
        return realize_plan(plan, process, [&](std::size_t x) { return states.at(x - 1); });
    }

    // ------------------------------------------------------------------
    // Expectimax oracle
    // ------------------------------------------------------------------

    // Exhaustive search over adaptive measurement policies. An information
    // state is the set of measured (location, state) pairs; it is terminal
    // when some partition whose boundaries include every measured location
    // satisfies the chance constraint for all locations, conditioned on
    // everything measured. Probabilities come from enumerating whole
    // trajectories of the chain, so no block decomposition is assumed.
    class ExpectimaxOracle
    {
    public:
        ExpectimaxOracle(const SkeletonProcess &process, PlannerConfig config) : process_(process), config_(config)
        {
            config_.validate();
            m_ = process.locations();
            detail::require<CapacityError>(m_ <= config_.oracle_max_locations,
                                           "oracle_expectimax: " + std::to_string(m_) + " locations exceed the cap of " +
                                               std::to_string(config_.oracle_max_locations));
            detail::require<CapacityError>(process.max_state_count() <= config_.oracle_max_states,
                                           "oracle_expectimax: alphabet exceeds the cap of " + std::to_string(config_.oracle_max_states));
            enumerate_paths();
        }

        double value()
        {
            std::vector<int> info(m_ + 1, -1);
            return value(info);
        }

        // Probability that the chain passes through `info` (entries < 0 are free).
        double evidence_probability(const std::vector<int> &info) const
        {
            double z = 0.0;
            for (const auto &tp : paths_)
                if (consistent(tp, info))
                    z += tp.probability;
            return z;
        }

        bool feasible(const std::vector<int> &info) const
        {
            std::vector<const Trajectory *> live;
            double z = 0.0;
            for (const auto &tp : paths_)
                if (consistent(tp, info))
                {
                    live.push_back(&tp);
                    z += tp.probability;
                }
            // cover[x][r]: reference r may serve location x
            std::vector<std::vector<char>> cover(m_ + 1, std::vector<char>(m_ + 1, 0));
            for (std::size_t r = 1; r <= m_; ++r)
            {
                if (info[r] < 0)
                    continue;
                for (std::size_t x = 1; x <= m_; ++x)
                {
                    if (x == r)
                    {
                        cover[x][r] = 1;
                        continue;
                    }
                    double miss = 0.0;
                    for (const auto *tp : live)
                        if (process_.distance(x, tp->states[x], r, static_cast<std::size_t>(info[r])) <= config_.gamma)
                            miss += tp->probability;
                    cover[x][r] = miss / z <= config_.epsilon + kCoverageSlack;
                }
            }
            // every subset of cut points that contains all measured locations
            std::uint32_t required = 0;
            for (std::size_t x = 1; x < m_; ++x)
                if (info[x] >= 0)
                    required |= 1u << (x - 1);
            for (std::uint32_t cuts = 0; cuts < (1u << (m_ - 1)); ++cuts)
            {
                if ((cuts & required) != required)
                    continue;
                std::vector<std::size_t> alpha{0};
                for (std::size_t x = 1; x < m_; ++x)
                    if (cuts & (1u << (x - 1)))
                        alpha.push_back(x);
                alpha.push_back(m_);
                bool ok = true;
                for (std::size_t k = 1; k < alpha.size() && ok; ++k)
                {
                    bool served = false;
                    for (std::size_t ref : {alpha[k - 1], alpha[k]})
                    {
                        if (ref < 1 || info[ref] < 0)
                            continue;
                        bool all = true;
                        for (std::size_t x = alpha[k - 1] + 1; x <= alpha[k] && all; ++x)
                            all = cover[x][ref];
                        served = served || all;
                    }
                    ok = served;
                }
                if (ok)
                    return true;
            }
            return false;
        }

    private:
        struct Trajectory
        {
            std::vector<std::size_t> states; // index 0 unused
            double probability = 0.0;
        };

        void enumerate_paths()
        {
            Trajectory tp;
            tp.states.assign(m_ + 1, 0);
            std::function<void(std::size_t, double)> rec = [&](std::size_t x, double prob)
            {
                if (prob <= 0.0)
                    return;
                if (x > m_)
                {
                    tp.probability = prob;
                    paths_.push_back(tp);
                    return;
                }
                for (std::size_t s = 0; s < process_.state_count(x); ++s)
                {
                    const double step = x == 1 ? process_.initial()(static_cast<Eigen::Index>(s))
                                               : process_.kernel(x - 1)(static_cast<Eigen::Index>(tp.states[x - 1]), static_cast<Eigen::Index>(s));
                    tp.states[x] = s;
                    rec(x + 1, prob * step);
                }
            };
            rec(1, 1.0);
        }

        static bool consistent(const Trajectory &tp, const std::vector<int> &info)
        {
            for (std::size_t x = 1; x < info.size(); ++x)
                if (info[x] >= 0 && tp.states[x] != static_cast<std::size_t>(info[x]))
                    return false;
            return true;
        }

        std::uint64_t key(const std::vector<int> &info) const
        {
            std::uint64_t k = 0;
            for (std::size_t x = 1; x <= m_; ++x)
                k = k * (config_.oracle_max_states + 1) + static_cast<std::uint64_t>(info[x] + 1);
            return k;
        }

        double value(std::vector<int> &info)
        {
            const auto k = key(info);
            if (const auto it = memo_.find(k); it != memo_.end())
                return it->second;
            double best = 0.0;
            if (!feasible(info))
            {
                best = std::numeric_limits<double>::infinity();
                const double z = evidence_probability(info);
                for (std::size_t x = 1; x <= m_; ++x)
                {
                    if (info[x] >= 0)
                        continue;
                    double v = 1.0;
                    for (std::size_t s = 0; s < process_.state_count(x); ++s)
                    {
                        info[x] = static_cast<int>(s);
                        const double p = evidence_probability(info) / z;
                        if (p > 0.0)
                            v += p * value(info);
                    }
                    info[x] = -1;
                    best = std::min(best, v);
                }
            }
            memo_.emplace(k, best);
            return best;
        }

        const SkeletonProcess &process_;
        PlannerConfig config_;
        std::size_t m_ = 0;
        std::vector<Trajectory> paths_;
        std::unordered_map<std::uint64_t, double> memo_;
    };

    inline double oracle_expectimax(const SkeletonProcess &process, const PlannerConfig &config)
    {
        return ExpectimaxOracle(process, config).value();
    }
}

#endif
