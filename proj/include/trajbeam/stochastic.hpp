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


#ifndef TRAJBEAM_STOCHASTIC_HPP
#define TRAJBEAM_STOCHASTIC_HPP

#include "trajbeam/arraysim.hpp"
#include "trajbeam/error.hpp"
#include "trajbeam/skeleton.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace trajbeam
{
    // ------------------------------------------------------------------
    // Scenario geometry
    // ------------------------------------------------------------------

    struct Point2
    {
        double x = 0.0;
        double y = 0.0;
        bool operator==(const Point2 &) const = default;
    };

    // A candidate propagation path at one location. The slot index of the
    // path inside Scenario::candidate_paths identifies the physical path
    // across locations (LoS, wall 1, wall 2, ...).
    struct GeometricPath
    {
        double aod_rad = 0.0;
        double aoa_rad = 0.0;
        double gain_db = 0.0;
        double length_m = 0.0;
        bool operator==(const GeometricPath &) const = default;
    };

    enum class WallOrientation
    {
        parallel,      // y = position, runs along the trajectory
        perpendicular, // x = position, crosses the trajectory line
    };

    struct Wall
    {
        WallOrientation orientation = WallOrientation::parallel;
        double position_m = 0.0;
        double loss_db = 0.0;
        bool operator==(const Wall &) const = default;
    };

    struct ScenarioConfig
    {
        std::size_t locations = 10;
        double trajectory_length_m = 10.0;
        double bs_offset_m = 10.0; // perpendicular distance from the trajectory midpoint
        double bs_height_m = 6.0;
        double ue_height_m = 1.0;
        double carrier_ghz = 28.0;
        bool line_of_sight = true;
        std::size_t reflectors = 3;
        double wall_distance_min_m = 20.0;
        double wall_distance_max_m = 60.0;
        double reflection_loss_min_db = 3.0;
        double reflection_loss_max_db = 9.0;
        double perpendicular_wall_share = 0.0;

        void validate() const
        {
            detail::require(locations >= 1, "ScenarioConfig: locations must be >= 1");
            detail::require(trajectory_length_m > 0.0 && bs_offset_m > 0.0, "ScenarioConfig: lengths must be positive");
            detail::require(bs_height_m > 0.0 && ue_height_m > 0.0 && carrier_ghz > 0.0, "ScenarioConfig: heights and carrier must be positive");
            detail::require(line_of_sight || reflectors > 0, "ScenarioConfig: no propagation paths");
            detail::require(wall_distance_min_m > 0.0 && wall_distance_max_m >= wall_distance_min_m, "ScenarioConfig: invalid wall distance range");
            detail::require(reflection_loss_min_db >= 0.0 && reflection_loss_max_db >= reflection_loss_min_db, "ScenarioConfig: invalid reflection loss range");
            detail::require(perpendicular_wall_share >= 0.0 && perpendicular_wall_share <= 1.0, "ScenarioConfig: perpendicular_wall_share outside [0, 1]");
        }
    };

    struct Scenario
    {
        Point2 bs_position;
        double bs_height_m = 0.0;
        double ue_height_m = 0.0;
        double carrier_ghz = 28.0;
        std::vector<Point2> trajectory;
        std::vector<Wall> walls;
        // [location - 1][path slot]; an empty slot means the path does not exist there.
        std::vector<std::vector<std::optional<GeometricPath>>> candidate_paths;

        std::size_t locations() const { return trajectory.size(); }
        std::size_t path_slots() const
        {
            std::size_t n = 0;
            for (const auto &row : candidate_paths)
                n = std::max(n, row.size());
            return n;
        }
        bool operator==(const Scenario &) const = default;
    };

    namespace detail
    {
        // Uniform double in [0, 1) with 53 random bits; stable across standard libraries.
        inline double uniform01(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

        inline double uniform(std::mt19937_64 &rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

        // Azimuth seen by a ULA whose axis is the x axis. sin(phi) = cos(angle to the axis).
        inline double ula_angle(Point2 from, Point2 to)
        {
            const double dx = to.x - from.x, dy = to.y - from.y;
            const double r = std::hypot(dx, dy);
            if (r == 0.0)
                return 0.0;
            double phi = std::asin(std::clamp(dx / r, -1.0, 1.0));
            // -pi/2 and pi/2 give identical half-wavelength responses.
            if (phi <= -std::numbers::pi / 2.0)
                phi = std::numbers::pi / 2.0;
            return phi;
        }

        inline double free_space_loss_db(double distance_m, double carrier_ghz)
        {
            constexpr double c = 299792458.0;
            return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m * carrier_ghz * 1e9 / c);
        }

        inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream)
        {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
            return std::mt19937_64(seq);
        }
    }

    // Trajectory along the x axis centred on the origin, BS at (0, offset).
    // Walls are drawn from the seed; each wall adds a single-bounce path.
    inline Scenario build_scenario(const ScenarioConfig &config, std::uint64_t seed)
    {
        config.validate();
        auto rng = detail::make_rng(seed, 0x5ce7a410ull);

        Scenario sc;
        sc.bs_position = {0.0, config.bs_offset_m};
        sc.bs_height_m = config.bs_height_m;
        sc.ue_height_m = config.ue_height_m;
        sc.carrier_ghz = config.carrier_ghz;

        const double spacing = config.trajectory_length_m / static_cast<double>(config.locations);
        for (std::size_t i = 0; i < config.locations; ++i)
            sc.trajectory.push_back({(static_cast<double>(i) + 0.5) * spacing - config.trajectory_length_m / 2.0, 0.0});

        const double half = config.trajectory_length_m / 2.0;
        for (std::size_t r = 0; r < config.reflectors; ++r)
        {
            Wall w;
            const bool perpendicular = detail::uniform01(rng) < config.perpendicular_wall_share;
            const double dist = detail::uniform(rng, config.wall_distance_min_m, config.wall_distance_max_m);
            const bool far_side = detail::uniform01(rng) < 0.5;
            w.loss_db = detail::uniform(rng, config.reflection_loss_min_db, config.reflection_loss_max_db);
            if (perpendicular)
            {
                w.orientation = WallOrientation::perpendicular;
                w.position_m = far_side ? half + dist : -half - dist;
            }
            else
            {
                w.orientation = WallOrientation::parallel;
                // across the street from the BS, or behind it
                w.position_m = far_side ? -dist : config.bs_offset_m + dist;
            }
            sc.walls.push_back(w);
        }

        const double dh = config.bs_height_m - config.ue_height_m;
        const Point2 bs = sc.bs_position;
        for (const auto &ue : sc.trajectory)
        {
            std::vector<std::optional<GeometricPath>> row;
            auto add = [&](Point2 ue_image, Point2 bs_image, double extra_loss_db)
            {
                GeometricPath p;
                p.aod_rad = detail::ula_angle(bs, ue_image);
                p.aoa_rad = detail::ula_angle(ue, bs_image);
                p.length_m = std::hypot(std::hypot(ue_image.x - bs.x, ue_image.y - bs.y), dh);
                p.gain_db = -detail::free_space_loss_db(p.length_m, config.carrier_ghz) - extra_loss_db;
                row.emplace_back(p);
            };
            if (config.line_of_sight)
                add(ue, bs, 0.0);
            for (const auto &w : sc.walls)
            {
                if (w.orientation == WallOrientation::parallel)
                    add({ue.x, 2.0 * w.position_m - ue.y}, {bs.x, 2.0 * w.position_m - bs.y}, w.loss_db);
                else
                    add({2.0 * w.position_m - ue.x, ue.y}, {2.0 * w.position_m - bs.x, bs.y}, w.loss_db);
            }
            sc.candidate_paths.push_back(std::move(row));
        }
        return sc;
    }

    // ------------------------------------------------------------------
    // Skeleton process
    // ------------------------------------------------------------------

    // Independent two-state (unblocked / blocked) chain per path, per 1-index step.
    struct BlockageModel
    {
        double stay_unblocked = 0.99;
        double stay_blocked = 0.9;
        double initial_blocked = 0.1;
        // extra attenuation applied to a blocked path when synthesizing channels
        double blockage_loss_db = 30.0;

        void validate() const
        {
            auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
            detail::require(unit(stay_unblocked) && unit(stay_blocked) && unit(initial_blocked),
                            "BlockageModel: probabilities must lie in [0, 1]");
            detail::require(blockage_loss_db >= 0.0, "BlockageModel: blockage loss must be >= 0");
        }
    };

    inline constexpr double kStochasticTolerance = 1e-12;

    // Finite-state Markov chain along the trajectory, each state labelled with
    // the quantized skeleton it produces at that location. Locations are
    // 1-based; states at each location are 0-based.
    class SkeletonProcess
    {
    public:
        SkeletonProcess() = default;

        SkeletonProcess(std::vector<std::vector<QuantizedSkeleton>> labels, Eigen::VectorXd initial,
                        std::vector<Eigen::MatrixXd> kernels, SkeletonMetric metric,
                        std::optional<Eigen::MatrixXd> step_kernel = std::nullopt)
            : labels_(std::move(labels)), initial_(std::move(initial)), kernels_(std::move(kernels)),
              metric_(std::move(metric)), step_kernel_(std::move(step_kernel))
        {
            validate();
        }

        std::size_t locations() const { return labels_.size(); }
        std::size_t state_count(std::size_t x) const { return labels_.at(x - 1).size(); }
        std::size_t max_state_count() const
        {
            std::size_t n = 0;
            for (const auto &l : labels_)
                n = std::max(n, l.size());
            return n;
        }
        const QuantizedSkeleton &label(std::size_t x, std::size_t s) const { return labels_.at(x - 1).at(s); }
        const std::vector<QuantizedSkeleton> &labels(std::size_t x) const { return labels_.at(x - 1); }
        const Eigen::VectorXd &initial() const { return initial_; }
        // step x -> x + 1
        const Eigen::MatrixXd &kernel(std::size_t x) const { return kernels_.at(x - 1); }
        const SkeletonMetric &metric() const { return metric_; }
        std::size_t skeleton_length() const { return labels_.empty() || labels_[0].empty() ? 0 : labels_[0][0].length(); }

        bool homogeneous() const { return step_kernel_.has_value(); }
        const Eigen::MatrixXd &step_kernel() const
        {
            detail::require(step_kernel_.has_value(), "SkeletonProcess: kernel is not location-homogeneous");
            return *step_kernel_;
        }

        double distance(std::size_t x, std::size_t s, std::size_t y, std::size_t t) const
        {
            return metric_.distance(label(x, s), label(y, t));
        }

    private:
        void validate() const
        {
            detail::require(!labels_.empty(), "SkeletonProcess: at least one location required");
            detail::require(kernels_.size() + 1 == labels_.size(), "SkeletonProcess: need one kernel per step");
            const std::size_t len = labels_[0].empty() ? 0 : labels_[0][0].length();
            for (const auto &row : labels_)
            {
                detail::require(!row.empty(), "SkeletonProcess: empty alphabet at a location");
                for (const auto &q : row)
                {
                    detail::require(q.length() == len, "SkeletonProcess: skeleton lengths differ");
                    detail::require(metric_.valid(q), "SkeletonProcess: skeleton index outside the codebooks");
                }
            }
            detail::require(static_cast<std::size_t>(initial_.size()) == labels_[0].size(), "SkeletonProcess: initial distribution size mismatch");
            detail::require(initial_.minCoeff() >= 0.0 && std::abs(initial_.sum() - 1.0) <= kStochasticTolerance,
                            "SkeletonProcess: initial distribution must be a probability vector");
            for (std::size_t i = 0; i < kernels_.size(); ++i)
            {
                const auto &k = kernels_[i];
                detail::require(static_cast<std::size_t>(k.rows()) == labels_[i].size() &&
                                    static_cast<std::size_t>(k.cols()) == labels_[i + 1].size(),
                                "SkeletonProcess: kernel dimensions do not match the alphabets");
                detail::require(k.minCoeff() >= 0.0, "SkeletonProcess: negative transition probability");
                for (Eigen::Index r = 0; r < k.rows(); ++r)
                    detail::require(std::abs(k.row(r).sum() - 1.0) <= kStochasticTolerance, "SkeletonProcess: kernel row does not sum to 1");
            }
        }

        std::vector<std::vector<QuantizedSkeleton>> labels_;
        Eigen::VectorXd initial_;
        std::vector<Eigen::MatrixXd> kernels_;
        SkeletonMetric metric_;
        std::optional<Eigen::MatrixXd> step_kernel_;
    };

    // Path amplitudes of the unblocked candidate paths at one location.
    inline std::vector<PathComponent> unblocked_paths(const Scenario &sc, std::size_t x, std::uint64_t blocked_mask)
    {
        std::vector<PathComponent> out;
        const auto &row = sc.candidate_paths.at(x - 1);
        for (std::size_t p = 0; p < row.size(); ++p)
        {
            if (!row[p] || ((blocked_mask >> p) & 1u))
                continue;
            out.push_back({std::polar(std::pow(10.0, row[p]->gain_db / 20.0), 0.0), row[p]->aod_rad, row[p]->aoa_rad});
        }
        return out;
    }

    // States are blockage patterns over the scenario's path slots (bit p set
    // means path p is blocked). Each state is labelled with the quantized
    // skeleton of its unblocked paths.
    inline SkeletonProcess derive_process(const Scenario &scenario, const BlockageModel &blockage, const Codebook &bs_book,
                                          const Codebook &ue_book, std::size_t length, std::size_t state_cap = 64)
    {
        blockage.validate();
        detail::require(length >= 1, "derive_process: L must be >= 1");
        detail::require(scenario.locations() >= 1, "derive_process: scenario has no locations");
        const std::size_t paths = scenario.path_slots();
        detail::require(length <= paths, "derive_process: L exceeds the number of candidate paths");
        detail::require<CapacityError>(paths < 63 && (std::size_t{1} << paths) <= state_cap,
                                       "derive_process: " + std::to_string(paths) + " paths give more than " +
                                           std::to_string(state_cap) + " blockage states");
        const std::size_t n = std::size_t{1} << paths;

        const double a = blockage.stay_unblocked, b = blockage.stay_blocked;
        const double per_path[2][2] = {{a, 1.0 - a}, {1.0 - b, b}};
        Eigen::MatrixXd k(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        Eigen::VectorXd init(static_cast<Eigen::Index>(n));
        for (std::size_t s = 0; s < n; ++s)
        {
            double pi = 1.0;
            for (std::size_t p = 0; p < paths; ++p)
                pi *= ((s >> p) & 1u) ? blockage.initial_blocked : 1.0 - blockage.initial_blocked;
            init(static_cast<Eigen::Index>(s)) = pi;
            for (std::size_t t = 0; t < n; ++t)
            {
                double v = 1.0;
                for (std::size_t p = 0; p < paths; ++p)
                    v *= per_path[(s >> p) & 1u][(t >> p) & 1u];
                k(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = v;
            }
        }

        std::vector<std::vector<QuantizedSkeleton>> labels(scenario.locations());
        for (std::size_t x = 1; x <= scenario.locations(); ++x)
            for (std::size_t s = 0; s < n; ++s)
            {
                const auto paths_here = unblocked_paths(scenario, x, s);
                labels[x - 1].push_back(quantize_skeleton(extract_skeleton(paths_here, length), bs_book, ue_book));
            }

        std::vector<Eigen::MatrixXd> kernels(scenario.locations() - 1, k);
        return SkeletonProcess(std::move(labels), std::move(init), std::move(kernels), SkeletonMetric(bs_book, ue_book), k);
    }

    // Homogeneous kernel raised to `steps`.
    inline Eigen::MatrixXd transition_kernel(const SkeletonProcess &process, std::size_t steps)
    {
        const auto &k = process.step_kernel();
        Eigen::MatrixXd out = Eigen::MatrixXd::Identity(k.rows(), k.cols());
        Eigen::MatrixXd base = k;
        for (std::size_t e = steps; e > 0; e >>= 1)
        {
            if (e & 1u)
                out = out * base;
            if (e > 1)
                base = base * base;
        }
        return out;
    }

    // Product of step kernels from location `from` to `to` (from <= to).
    inline Eigen::MatrixXd transition(const SkeletonProcess &process, std::size_t from, std::size_t to)
    {
        detail::require(from >= 1 && from <= to && to <= process.locations(), "transition: invalid location range");
        const auto n = static_cast<Eigen::Index>(process.state_count(from));
        Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n, n);
        for (std::size_t x = from; x < to; ++x)
            out = out * process.kernel(x);
        return out;
    }

    // Evidence about the skeleton process: nothing, a known left endpoint, a
    // known right endpoint, or both.
    struct Evidence
    {
        enum class Kind
        {
            none,
            left,
            right,
            both
        };
        Kind kind = Kind::none;
        std::size_t x_l = 0, s_l = 0;
        std::size_t x_h = 0, s_h = 0;

        static Evidence none() { return {}; }
        static Evidence left(std::size_t x, std::size_t s) { return {Kind::left, x, s, 0, 0}; }
        static Evidence right(std::size_t x, std::size_t s) { return {Kind::right, 0, 0, x, s}; }
        static Evidence both(std::size_t xl, std::size_t sl, std::size_t xh, std::size_t sh) { return {Kind::both, xl, sl, xh, sh}; }
    };

    // Cached products of step kernels and location marginals.
    class TransitionTable
    {
    public:
        explicit TransitionTable(const SkeletonProcess &process) : process_(&process), m_(process.locations())
        {
            products_.resize((m_ + 1) * (m_ + 1));
            for (std::size_t a = 1; a <= m_; ++a)
            {
                const auto n = static_cast<Eigen::Index>(process.state_count(a));
                products_[index(a, a)] = Eigen::MatrixXd::Identity(n, n);
                for (std::size_t b = a + 1; b <= m_; ++b)
                    products_[index(a, b)] = products_[index(a, b - 1)] * process.kernel(b - 1);
            }
            marginals_.resize(m_ + 1);
            for (std::size_t x = 1; x <= m_; ++x)
                marginals_[x] = (process.initial().transpose() * products_[index(1, x)]).transpose();
        }

        const SkeletonProcess &process() const { return *process_; }
        std::size_t locations() const { return m_; }
        const Eigen::MatrixXd &between(std::size_t a, std::size_t b) const { return products_.at(index(a, b)); }
        const Eigen::VectorXd &marginal(std::size_t x) const { return marginals_.at(x); }

        // P(S_x = . | S_{x_l} = s_l)
        Eigen::VectorXd forward(std::size_t x_l, std::size_t s_l, std::size_t x) const
        {
            check(x_l <= x, "forward: x must not precede x_l");
            Eigen::VectorXd p = between(x_l, x).row(static_cast<Eigen::Index>(s_l)).transpose();
            return normalized(std::move(p), "forward");
        }

        // P(S_x = . | S_{x_h} = s_h)
        Eigen::VectorXd backward(std::size_t x, std::size_t x_h, std::size_t s_h) const
        {
            check(x <= x_h, "backward: x must not follow x_h");
            Eigen::VectorXd p = marginal(x).cwiseProduct(between(x, x_h).col(static_cast<Eigen::Index>(s_h)));
            return normalized(std::move(p), "backward");
        }

        // P(S_x = . | S_{x_l} = s_l, S_{x_h} = s_h)
        Eigen::VectorXd bridge(std::size_t x_l, std::size_t x_h, std::size_t x, std::size_t s_l, std::size_t s_h) const
        {
            check(x_l <= x && x <= x_h, "bridge: x outside [x_l, x_h]");
            Eigen::VectorXd p = between(x_l, x).row(static_cast<Eigen::Index>(s_l)).transpose().cwiseProduct(
                between(x, x_h).col(static_cast<Eigen::Index>(s_h)));
            return normalized(std::move(p), "bridge");
        }

        Eigen::VectorXd distribution(std::size_t x, const Evidence &e) const
        {
            switch (e.kind)
            {
            case Evidence::Kind::left:
                return forward(e.x_l, e.s_l, x);
            case Evidence::Kind::right:
                return backward(x, e.x_h, e.s_h);
            case Evidence::Kind::both:
                return bridge(e.x_l, e.x_h, x, e.s_l, e.s_h);
            case Evidence::Kind::none:
                break;
            }
            check(x >= 1 && x <= m_, "distribution: location out of range");
            return marginal(x);
        }

    private:
        std::size_t index(std::size_t a, std::size_t b) const
        {
            check(a >= 1 && a <= b && b <= m_, "TransitionTable: invalid location range");
            return a * (m_ + 1) + b;
        }
        static void check(bool ok, const char *what)
        {
            if (!ok)
                throw InvalidArgument(what);
        }
        static Eigen::VectorXd normalized(Eigen::VectorXd p, const char *what)
        {
            const double z = p.sum();
            if (!(z > 0.0))
                throw ConditioningError(std::string(what) + ": conditioning event has probability zero");
            return p / z;
        }

        const SkeletonProcess *process_;
        std::size_t m_;
        std::vector<Eigen::MatrixXd> products_;
        std::vector<Eigen::VectorXd> marginals_;
    };

    inline Eigen::VectorXd bridge_distribution(const SkeletonProcess &process, std::size_t x_l, std::size_t x_h, std::size_t x,
                                               std::size_t s_l, std::size_t s_h)
    {
        return TransitionTable(process).bridge(x_l, x_h, x, s_l, s_h);
    }

    // Pr{ d(PS(x), ps(x_ref)) <= gamma | evidence } where ps(x_ref) is the label of state s_ref.
    inline double coverage_prob(const TransitionTable &table, std::size_t x, std::size_t x_ref, std::size_t s_ref,
                                const Evidence &evidence, double gamma)
    {
        const auto &process = table.process();
        const Eigen::VectorXd p = table.distribution(x, evidence);
        double out = 0.0;
        for (Eigen::Index s = 0; s < p.size(); ++s)
            if (p(s) > 0.0 && process.distance(x, static_cast<std::size_t>(s), x_ref, s_ref) <= gamma)
                out += p(s);
        return std::min(out, 1.0);
    }

    inline double coverage_prob(const SkeletonProcess &process, std::size_t x, std::size_t x_ref, std::size_t s_ref,
                                const Evidence &evidence, double gamma)
    {
        return coverage_prob(TransitionTable(process), x, x_ref, s_ref, evidence, gamma);
    }

    inline std::size_t sample_categorical(const Eigen::VectorXd &p, std::mt19937_64 &rng)
    {
        const double u = detail::uniform01(rng) * p.sum();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i)
        {
            acc += p(i);
            if (u < acc)
                return static_cast<std::size_t>(i);
        }
        for (Eigen::Index i = p.size() - 1; i >= 0; --i)
            if (p(i) > 0.0)
                return static_cast<std::size_t>(i);
        return 0;
    }

    // One state per location, index 0 holds location 1.
    inline std::vector<std::size_t> sample_path(const SkeletonProcess &process, std::mt19937_64 &rng)
    {
        std::vector<std::size_t> states;
        states.push_back(sample_categorical(process.initial(), rng));
        for (std::size_t x = 1; x < process.locations(); ++x)
            states.push_back(sample_categorical(process.kernel(x).row(static_cast<Eigen::Index>(states.back())).transpose(), rng));
        return states;
    }

    // Same joint law with the location order reversed.
    inline SkeletonProcess reversed(const SkeletonProcess &process)
    {
        const TransitionTable table(process);
        const std::size_t m = process.locations();
        std::vector<std::vector<QuantizedSkeleton>> labels;
        for (std::size_t x = m; x >= 1; --x)
            labels.push_back(process.labels(x));
        std::vector<Eigen::MatrixXd> kernels;
        for (std::size_t y = m - 1; y >= 1; --y)
        {
            // reversed step from original y+1 to y
            const auto &mu_y = table.marginal(y);
            const auto &mu_next = table.marginal(y + 1);
            const auto &k = process.kernel(y);
            Eigen::MatrixXd r(k.cols(), k.rows());
            for (Eigen::Index t = 0; t < k.cols(); ++t)
            {
                if (mu_next(t) > 0.0)
                    for (Eigen::Index s = 0; s < k.rows(); ++s)
                        r(t, s) = mu_y(s) * k(s, t) / mu_next(t);
                else
                    r.row(t) = mu_y.transpose();
                r.row(t) /= r.row(t).sum();
            }
            kernels.push_back(std::move(r));
        }
        return SkeletonProcess(std::move(labels), table.marginal(m), std::move(kernels), process.metric());
    }

    // ------------------------------------------------------------------
    // Ray-trace CSV
    // ------------------------------------------------------------------

    inline constexpr const char *kRaytraceHeader = "location_index,path_rank,aod_deg,aoa_deg,gain_db";

    namespace detail
    {
        inline std::vector<std::string> split_csv_line(const std::string &line)
        {
            std::vector<std::string> out;
            std::string cell;
            std::istringstream in(line);
            while (std::getline(in, cell, ','))
                out.push_back(cell);
            if (!line.empty() && line.back() == ',')
                out.emplace_back();
            return out;
        }

        inline std::string trim(std::string s)
        {
            const auto first = s.find_first_not_of(" \t\r\n");
            if (first == std::string::npos)
                return {};
            const auto last = s.find_last_not_of(" \t\r\n");
            return s.substr(first, last - first + 1);
        }
    }

    // Rows: location_index (1-based, contiguous), path_rank (1-based slot),
    // angles in degrees in (-90, 90], gain in dB. Geometry fields other than
    // the paths are not part of the format and stay at their defaults.
    inline Scenario parse_raytrace_csv(std::istream &in, const std::string &source = "<stream>")
    {
        auto fail = [&](std::size_t row, const std::string &msg) -> SchemaError
        {
            return SchemaError(source + ": row " + std::to_string(row) + ": " + msg);
        };
        std::string line;
        if (!std::getline(in, line))
            throw SchemaError(source + ": empty file");
        if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
            line = line.substr(3);
        if (detail::trim(line) != kRaytraceHeader)
            throw SchemaError(source + ": header must be '" + std::string(kRaytraceHeader) + "'");

        std::map<std::size_t, std::map<std::size_t, GeometricPath>> rows;
        std::size_t row = 1;
        while (std::getline(in, line))
        {
            ++row;
            if (detail::trim(line).empty())
                continue;
            const auto cells = detail::split_csv_line(line);
            if (cells.size() != 5)
                throw fail(row, "expected 5 columns, found " + std::to_string(cells.size()));
            double v[5];
            for (int c = 0; c < 5; ++c)
            {
                const std::string cell = detail::trim(cells[static_cast<std::size_t>(c)]);
                std::size_t used = 0;
                try
                {
                    v[c] = std::stod(cell, &used);
                }
                catch (const std::exception &)
                {
                    used = 0;
                }
                if (cell.empty() || used != cell.size() || !std::isfinite(v[c]))
                    throw fail(row, "column " + std::to_string(c + 1) + " is not a finite number");
            }
            if (v[0] < 1 || v[0] != std::floor(v[0]))
                throw fail(row, "location_index must be a positive integer");
            if (v[1] < 1 || v[1] != std::floor(v[1]))
                throw fail(row, "path_rank must be a positive integer");
            for (int c : {2, 3})
                if (!(v[c] > -90.0 && v[c] <= 90.0))
                    throw fail(row, "angle outside (-90, 90] degrees");
            const auto loc = static_cast<std::size_t>(v[0]);
            const auto rank = static_cast<std::size_t>(v[1]);
            if (rows[loc].count(rank))
                throw fail(row, "duplicate path_rank " + std::to_string(rank) + " at location_index " + std::to_string(loc));
            GeometricPath p;
            p.aod_rad = v[2] * std::numbers::pi / 180.0;
            p.aoa_rad = v[3] * std::numbers::pi / 180.0;
            p.gain_db = v[4];
            rows[loc][rank] = p;
        }
        if (rows.empty())
            throw SchemaError(source + ": no data rows");
        const std::size_t m = rows.rbegin()->first;
        for (std::size_t x = 1; x <= m; ++x)
            if (!rows.count(x))
                throw SchemaError(source + ": missing location_index " + std::to_string(x));

        Scenario sc;
        for (std::size_t x = 1; x <= m; ++x)
        {
            sc.trajectory.push_back({static_cast<double>(x), 0.0});
            const auto &paths = rows[x];
            std::vector<std::optional<GeometricPath>> slots(paths.rbegin()->first);
            for (const auto &[rank, p] : paths)
                slots[rank - 1] = p;
            sc.candidate_paths.push_back(std::move(slots));
        }
        return sc;
    }

    inline Scenario import_raytrace_csv(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open '" + path + "'");
        return parse_raytrace_csv(in, path);
    }

    inline void write_raytrace_csv(const Scenario &sc, std::ostream &out)
    {
        out << kRaytraceHeader << '\n';
        out << std::setprecision(17);
        for (std::size_t x = 1; x <= sc.locations(); ++x)
        {
            const auto &row = sc.candidate_paths.at(x - 1);
            for (std::size_t p = 0; p < row.size(); ++p)
                if (row[p])
                    out << x << ',' << p + 1 << ',' << row[p]->aod_rad * 180.0 / std::numbers::pi << ','
                        << row[p]->aoa_rad * 180.0 / std::numbers::pi << ',' << row[p]->gain_db << '\n';
        }
    }

    inline void export_raytrace_csv(const Scenario &sc, const std::string &path)
    {
        std::ofstream out(path);
        if (!out)
            throw IoError("cannot write '" + path + "'");
        write_raytrace_csv(sc, out);
        if (!out)
            throw IoError("write failed for '" + path + "'");
    }
}

#endif
