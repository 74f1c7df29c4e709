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


#ifndef TRAJBEAM_HARNESS_HPP
#define TRAJBEAM_HARNESS_HPP

#include "trajbeam/arraysim.hpp"
#include "trajbeam/baselines.hpp"
#include "trajbeam/error.hpp"
#include "trajbeam/partition.hpp"
#include "trajbeam/planner.hpp"
#include "trajbeam/skeleton.hpp"
#include "trajbeam/stochastic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

namespace trajbeam
{
    enum class Method
    {
        proposed,
        exhaustive,
        greedy,
        fixed,
    };

    inline const char *to_string(Method m)
    {
        switch (m)
        {
        case Method::proposed:
            return "proposed";
        case Method::exhaustive:
            return "exhaustive";
        case Method::greedy:
            return "greedy";
        case Method::fixed:
            return "fixed";
        }
        return "?";
    }

    inline Method parse_method(const std::string &name)
    {
        for (Method m : {Method::proposed, Method::exhaustive, Method::greedy, Method::fixed})
            if (name == to_string(m))
                return m;
        throw InvalidArgument("unknown method '" + name + "' (expected proposed, exhaustive, greedy or fixed)");
    }

    struct ExperimentConfig
    {
        ScenarioConfig scenario;
        BlockageModel blockage;
        std::size_t n_bs = 64;
        std::size_t n_ue = 4;
        std::size_t f_size = 128;
        std::size_t w_size = 128;
        std::size_t skeleton_length = 3;
        double gamma = 0.2;
        double epsilon = 0.1;
        double p_dbm = 10.0;
        double noise_dbm = -94.0;
        std::size_t trajectories = 100;
        std::uint64_t seed = 1;
        std::vector<Method> methods{Method::proposed, Method::exhaustive, Method::greedy, Method::fixed};
        std::vector<std::size_t> fixed_boundaries{4, 6, 10};
        std::size_t state_cap = 64;
        std::size_t threads = 0; // 0: hardware concurrency

        PlannerConfig planner() const
        {
            PlannerConfig pc;
            pc.gamma = gamma;
            pc.epsilon = epsilon;
            pc.skeleton_length = skeleton_length;
            pc.state_cap = state_cap;
            return pc;
        }

        void validate() const
        {
            scenario.validate();
            blockage.validate();
            planner().validate();
            detail::require(n_bs >= 1 && n_ue >= 1 && f_size >= 1 && w_size >= 1, "ExperimentConfig: array and codebook sizes must be positive");
            detail::require(std::isfinite(p_dbm) && std::isfinite(noise_dbm), "ExperimentConfig: power levels must be finite");
            detail::require(trajectories >= 1, "ExperimentConfig: trajectories must be >= 1");
            detail::require(!methods.empty(), "ExperimentConfig: method list is empty");
            if (std::find(methods.begin(), methods.end(), Method::fixed) != methods.end())
                detail::require(!fixed_boundaries.empty() && fixed_boundaries.back() == scenario.locations,
                                "ExperimentConfig: fixed_boundaries must end at the number of locations");
        }
    };

    // Exhaustive codebook sweeps at the reference points.
    inline std::uint64_t count_presetup_searches(std::uint64_t references, std::uint64_t f_size, std::uint64_t w_size)
    {
        return references * f_size * w_size;
    }

    // Sweeps over skeleton pairs at the reference points.
    inline std::uint64_t count_runtime_searches(std::uint64_t references, std::uint64_t skeleton_length)
    {
        return references * skeleton_length * skeleton_length;
    }

    // Channel at location x with the paths in `blocked_mask` attenuated.
    inline ChannelMatrix realized_channel(const Scenario &sc, std::size_t x, std::uint64_t blocked_mask, const BlockageModel &blockage,
                                          std::size_t n_bs, std::size_t n_ue)
    {
        constexpr double kLightSpeed = 299792458.0;
        const double wavelength = kLightSpeed / (sc.carrier_ghz * 1e9);
        std::vector<PathComponent> paths;
        const auto &row = sc.candidate_paths.at(x - 1);
        for (std::size_t p = 0; p < row.size(); ++p)
        {
            if (!row[p])
                continue;
            const double db = row[p]->gain_db - (((blocked_mask >> p) & 1u) ? blockage.blockage_loss_db : 0.0);
            const double phase = -2.0 * std::numbers::pi * std::fmod(row[p]->length_m / wavelength, 1.0);
            paths.push_back({std::polar(std::pow(10.0, db / 20.0), phase), row[p]->aod_rad, row[p]->aoa_rad});
        }
        if (paths.empty())
            return ChannelMatrix::zero(n_bs, n_ue);
        return make_channel(paths, n_bs, n_ue);
    }

    // Per-location SNR when every location uses the best codebook pair found
    // by an exhaustive sweep at its region's reference.
    inline std::vector<double> evaluate_snr(const Partition &partition, const std::vector<ChannelMatrix> &channels, const Codebook &f_book,
                                            const Codebook &w_book, double p_dbm, double noise_dbm)
    {
        detail::require(is_valid_partition(partition, ReferenceRule::adjacent),
                        "evaluate_snr: invalid partition");
        detail::require(channels.size() == partition.locations, "evaluate_snr: need one channel per location");
        std::map<std::size_t, BeamPairResult> beams;
        std::vector<double> out(partition.locations, kSnrFloor);
        for (const auto &r : partition.regions())
        {
            auto it = beams.find(r.reference);
            if (it == beams.end())
                it = beams.emplace(r.reference, best_pair_exhaustive(channels[r.reference - 1], f_book, w_book, p_dbm, noise_dbm)).first;
            const auto f = f_book.beam(it->second.f_index);
            const auto w = w_book.beam(it->second.w_index);
            for (std::size_t x = r.first; x <= r.last; ++x)
                out[x - 1] = snr_db(channels[x - 1], f, w, p_dbm, noise_dbm);
        }
        return out;
    }

    struct TrajectoryOutcome
    {
        Partition partition;
        std::uint64_t presetup = 0;
        std::uint64_t runtime = 0;
        std::vector<double> snr_db;
    };

    struct MethodReport
    {
        Method method = Method::proposed;
        double presetup_mean = 0.0;
        double runtime_mean = 0.0;
        double k_mean = 0.0;
        std::vector<double> snr_mean_db;               // per location
        std::map<std::size_t, std::size_t> region_sizes; // size -> number of regions
        std::map<std::size_t, std::size_t> k_counts;     // K -> number of trajectories
        std::vector<Partition> partitions;             // one per trajectory
    };

    struct Report
    {
        ExperimentConfig config;
        std::vector<double> expected_k; // proposed planner, one per trajectory
        std::vector<MethodReport> methods;

        const MethodReport *find(Method m) const
        {
            for (const auto &r : methods)
                if (r.method == m)
                    return &r;
            return nullptr;
        }
    };

    // Scenario, skeleton process and sampled blockage states of trajectory t.
    struct TrajectoryModel
    {
        Scenario scenario;
        SkeletonProcess process;
        std::vector<std::size_t> states; // states[x - 1]
    };

    inline TrajectoryModel build_trajectory_model(const ExperimentConfig &cfg, std::size_t t, const Codebook &f_book, const Codebook &w_book)
    {
        auto rng = detail::make_rng(cfg.seed, t);
        TrajectoryModel m;
        m.scenario = build_scenario(cfg.scenario, rng());
        m.process = derive_process(m.scenario, cfg.blockage, f_book, w_book, cfg.skeleton_length, cfg.state_cap);
        m.states = sample_path(m.process, rng);
        return m;
    }

    namespace detail
    {
        // Rethrows the active library exception with a prefix, keeping its class.
        [[noreturn]] inline void rethrow_with_context(const std::string &prefix)
        {
            try
            {
                throw;
            }
            catch (const InvalidArgument &e)
            {
                throw InvalidArgument(prefix + e.what());
            }
            catch (const SchemaError &e)
            {
                throw SchemaError(prefix + e.what());
            }
            catch (const CapacityError &e)
            {
                throw CapacityError(prefix + e.what());
            }
            catch (const ConditioningError &e)
            {
                throw ConditioningError(prefix + e.what());
            }
            catch (const ModelMismatch &e)
            {
                throw ModelMismatch(prefix + e.what());
            }
            catch (const IoError &e)
            {
                throw IoError(prefix + e.what());
            }
        }

        struct TrajectoryResult
        {
            double expected_k = 0.0;
            std::vector<TrajectoryOutcome> outcomes; // parallel to config.methods
        };

        inline TrajectoryResult run_trajectory(const ExperimentConfig &cfg, std::size_t t, const Codebook &f_book, const Codebook &w_book)
        {
            const auto model = build_trajectory_model(cfg, t, f_book, w_book);
            const Scenario &sc = model.scenario;
            const SkeletonProcess &process = model.process;
            const auto &states = model.states;

            std::vector<ChannelMatrix> channels;
            std::vector<QuantizedSkeleton> skeletons;
            for (std::size_t x = 1; x <= process.locations(); ++x)
            {
                channels.push_back(realized_channel(sc, x, states[x - 1], cfg.blockage, cfg.n_bs, cfg.n_ue));
                skeletons.push_back(process.label(x, states[x - 1]));
            }

            TrajectoryResult out;
            for (const Method m : cfg.methods)
            {
                TrajectoryOutcome o;
                switch (m)
                {
                case Method::proposed:
                {
                    const Plan plan = solve(process, cfg.planner());
                    out.expected_k = plan.expected_k;
                    o.partition = realize_plan(plan, process, states);
                    break;
                }
                case Method::exhaustive:
                    o.partition = exhaustive_plan(process.locations());
                    break;
                case Method::greedy:
                    o.partition = greedy_plan(skeletons, process.metric(), cfg.gamma);
                    break;
                case Method::fixed:
                    o.partition = fixed_plan(process.locations(), cfg.fixed_boundaries);
                    break;
                }
                for (auto &meas : o.partition.measurements)
                    if (!meas.skeleton)
                    {
                        meas.state = states[meas.location - 1];
                        meas.skeleton = skeletons[meas.location - 1];
                    }
                const auto k = o.partition.measurement_count();
                o.presetup = count_presetup_searches(k, cfg.f_size, cfg.w_size);
                o.runtime = count_runtime_searches(k, cfg.skeleton_length);
                o.snr_db = evaluate_snr(o.partition, channels, f_book, w_book, cfg.p_dbm, cfg.noise_dbm);
                out.outcomes.push_back(std::move(o));
            }
            return out;
        }
    }

    // Runs every method on `config.trajectories` seeded trajectories. Each
    // trajectory has its own random stream, so the report does not depend on
    // the thread count.
    inline Report run_experiment(const ExperimentConfig &config)
    {
        config.validate();
        const Codebook f_book = dft_codebook(config.n_bs, config.f_size);
        const Codebook w_book = dft_codebook(config.n_ue, config.w_size);
        const std::size_t t_count = config.trajectories;

        std::vector<detail::TrajectoryResult> results(t_count);
        std::vector<std::exception_ptr> errors(t_count);
        std::atomic<std::size_t> next{0};
        auto worker = [&]
        {
            for (std::size_t t = next++; t < t_count; t = next++)
            {
                try
                {
                    results[t] = detail::run_trajectory(config, t, f_book, w_book);
                }
                catch (...)
                {
                    errors[t] = std::current_exception();
                }
            }
        };
        std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
        threads = std::min(threads, t_count);
        if (threads <= 1)
            worker();
        else
        {
            std::vector<std::jthread> pool;
            for (std::size_t i = 0; i < threads; ++i)
                pool.emplace_back(worker);
        }
        for (std::size_t t = 0; t < t_count; ++t)
            if (errors[t])
            {
                try
                {
                    std::rethrow_exception(errors[t]);
                }
                catch (const Error &)
                {
                    detail::rethrow_with_context("trajectory " + std::to_string(t) + ": ");
                }
            }

        Report report;
        report.config = config;
        const std::size_t m = config.scenario.locations;
        for (std::size_t i = 0; i < config.methods.size(); ++i)
        {
            MethodReport mr;
            mr.method = config.methods[i];
            mr.snr_mean_db.assign(m, 0.0);
            std::uint64_t presetup = 0, runtime = 0, k_total = 0;
            for (std::size_t t = 0; t < t_count; ++t)
            {
                const auto &o = results[t].outcomes[i];
                presetup += o.presetup;
                runtime += o.runtime;
                k_total += o.partition.measurement_count();
                ++mr.k_counts[o.partition.measurement_count()];
                for (const auto &r : o.partition.serving_runs())
                    ++mr.region_sizes[r.size()];
                for (std::size_t x = 0; x < m; ++x)
                    mr.snr_mean_db[x] += o.snr_db[x];
                mr.partitions.push_back(o.partition);
            }
            const double n = static_cast<double>(t_count);
            mr.presetup_mean = static_cast<double>(presetup) / n;
            mr.runtime_mean = static_cast<double>(runtime) / n;
            mr.k_mean = static_cast<double>(k_total) / n;
            for (auto &v : mr.snr_mean_db)
                v /= n;
            report.methods.push_back(std::move(mr));
        }
        if (std::find(config.methods.begin(), config.methods.end(), Method::proposed) != config.methods.end())
            for (const auto &r : results)
                report.expected_k.push_back(r.expected_k);
        return report;
    }
}

#endif
