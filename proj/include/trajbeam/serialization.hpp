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


#ifndef TRAJBEAM_SERIALIZATION_HPP
#define TRAJBEAM_SERIALIZATION_HPP

#include "trajbeam/error.hpp"
#include "trajbeam/harness.hpp"
#include "trajbeam/partition.hpp"
#include "trajbeam/planner.hpp"
#include "trajbeam/stochastic.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace trajbeam
{
    using json = nlohmann::json;

    namespace detail
    {
        // Object reader that rejects unknown keys and mistyped values.
        class ObjectReader
        {
        public:
            ObjectReader(const json &j, std::string where) : j_(j), where_(std::move(where))
            {
                if (!j_.is_object())
                    throw SchemaError(where_ + ": expected an object");
            }

            template <typename T>
            void optional(const char *key, T &out)
            {
                seen_.insert(key);
                if (const auto it = j_.find(key); it != j_.end())
                    out = get<T>(*it, key);
            }

            template <typename T>
            T required(const char *key)
            {
                seen_.insert(key);
                const auto it = j_.find(key);
                if (it == j_.end())
                    throw SchemaError(where_ + ": missing key '" + key + "'");
                return get<T>(*it, key);
            }

            const json *child(const char *key)
            {
                seen_.insert(key);
                const auto it = j_.find(key);
                return it == j_.end() ? nullptr : &*it;
            }

            void finish() const
            {
                for (const auto &[key, _] : j_.items())
                    if (!seen_.count(key))
                        throw SchemaError(where_ + ": unknown key '" + key + "'");
            }

        private:
            template <typename T>
            T get(const json &v, const char *key) const
            {
                const std::string path = where_ + "." + key;
                if constexpr (std::is_same_v<T, bool>)
                {
                    if (!v.is_boolean())
                        throw SchemaError(path + ": expected a boolean");
                }
                else if constexpr (std::is_integral_v<T>)
                {
                    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
                        throw SchemaError(path + ": expected a non-negative integer");
                }
                else if constexpr (std::is_floating_point_v<T>)
                {
                    if (!v.is_number())
                        throw SchemaError(path + ": expected a number");
                }
                else if constexpr (std::is_same_v<T, std::string>)
                {
                    if (!v.is_string())
                        throw SchemaError(path + ": expected a string");
                }
                try
                {
                    return v.get<T>();
                }
                catch (const json::exception &e)
                {
                    throw SchemaError(path + ": " + e.what());
                }
            }

            const json &j_;
            std::string where_;
            std::set<std::string> seen_;
        };

        inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

        inline double number_or_floor(const json &v, const std::string &where)
        {
            if (v.is_null())
                return kSnrFloor;
            if (!v.is_number())
                throw SchemaError(where + ": expected a number or null");
            return v.get<double>();
        }

        inline json read_json_file(const std::string &path)
        {
            std::ifstream in(path);
            if (!in)
                throw IoError("cannot open '" + path + "' for reading");
            try
            {
                return json::parse(in);
            }
            catch (const json::parse_error &e)
            {
                throw SchemaError(path + ": " + e.what());
            }
        }

        inline void write_text_file(const std::filesystem::path &path, const std::string &text)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw IoError("cannot open '" + path.string() + "' for writing");
            out << text;
            out.flush();
            if (!out)
                throw IoError("write failed for '" + path.string() + "'");
        }

        inline std::string format_double(double v)
        {
            std::ostringstream os;
            os.imbue(std::locale::classic());
            os << std::setprecision(17) << v;
            return os.str();
        }
    }

    // ------------------------------------------------------------------
    // Configuration
    // ------------------------------------------------------------------

    inline json to_json(const ScenarioConfig &c)
    {
        return {{"locations", c.locations},
                {"trajectory_length_m", c.trajectory_length_m},
                {"bs_offset_m", c.bs_offset_m},
                {"bs_height_m", c.bs_height_m},
                {"ue_height_m", c.ue_height_m},
                {"carrier_ghz", c.carrier_ghz},
                {"line_of_sight", c.line_of_sight},
                {"reflectors", c.reflectors},
                {"wall_distance_min_m", c.wall_distance_min_m},
                {"wall_distance_max_m", c.wall_distance_max_m},
                {"reflection_loss_min_db", c.reflection_loss_min_db},
                {"reflection_loss_max_db", c.reflection_loss_max_db},
                {"perpendicular_wall_share", c.perpendicular_wall_share}};
    }

    inline ScenarioConfig scenario_config_from_json(const json &j, const std::string &where = "scenario")
    {
        ScenarioConfig c;
        detail::ObjectReader r(j, where);
        r.optional("locations", c.locations);
        r.optional("trajectory_length_m", c.trajectory_length_m);
        r.optional("bs_offset_m", c.bs_offset_m);
        r.optional("bs_height_m", c.bs_height_m);
        r.optional("ue_height_m", c.ue_height_m);
        r.optional("carrier_ghz", c.carrier_ghz);
        r.optional("line_of_sight", c.line_of_sight);
        r.optional("reflectors", c.reflectors);
        r.optional("wall_distance_min_m", c.wall_distance_min_m);
        r.optional("wall_distance_max_m", c.wall_distance_max_m);
        r.optional("reflection_loss_min_db", c.reflection_loss_min_db);
        r.optional("reflection_loss_max_db", c.reflection_loss_max_db);
        r.optional("perpendicular_wall_share", c.perpendicular_wall_share);
        r.finish();
        return c;
    }

    inline json to_json(const BlockageModel &b)
    {
        return {{"stay_unblocked", b.stay_unblocked},
                {"stay_blocked", b.stay_blocked},
                {"initial_blocked", b.initial_blocked},
                {"blockage_loss_db", b.blockage_loss_db}};
    }

    inline BlockageModel blockage_from_json(const json &j, const std::string &where = "blockage")
    {
        BlockageModel b;
        detail::ObjectReader r(j, where);
        r.optional("stay_unblocked", b.stay_unblocked);
        r.optional("stay_blocked", b.stay_blocked);
        r.optional("initial_blocked", b.initial_blocked);
        r.optional("blockage_loss_db", b.blockage_loss_db);
        r.finish();
        return b;
    }

    inline json to_json(const ExperimentConfig &c)
    {
        json methods = json::array();
        for (const Method m : c.methods)
            methods.push_back(to_string(m));
        return {{"scenario", to_json(c.scenario)},
                {"blockage", to_json(c.blockage)},
                {"n_bs", c.n_bs},
                {"n_ue", c.n_ue},
                {"f_size", c.f_size},
                {"w_size", c.w_size},
                {"skeleton_length", c.skeleton_length},
                {"gamma", c.gamma},
                {"epsilon", c.epsilon},
                {"p_dbm", c.p_dbm},
                {"noise_dbm", c.noise_dbm},
                {"trajectories", c.trajectories},
                {"seed", c.seed},
                {"methods", methods},
                {"fixed_boundaries", c.fixed_boundaries},
                {"state_cap", c.state_cap},
                {"threads", c.threads}};
    }

    // Missing keys keep their defaults; unknown keys are schema errors.
    inline ExperimentConfig experiment_config_from_json(const json &j)
    {
        ExperimentConfig c;
        detail::ObjectReader r(j, "config");
        if (const json *s = r.child("scenario"))
            c.scenario = scenario_config_from_json(*s, "config.scenario");
        if (const json *b = r.child("blockage"))
            c.blockage = blockage_from_json(*b, "config.blockage");
        r.optional("n_bs", c.n_bs);
        r.optional("n_ue", c.n_ue);
        r.optional("f_size", c.f_size);
        r.optional("w_size", c.w_size);
        r.optional("skeleton_length", c.skeleton_length);
        r.optional("gamma", c.gamma);
        r.optional("epsilon", c.epsilon);
        r.optional("p_dbm", c.p_dbm);
        r.optional("noise_dbm", c.noise_dbm);
        r.optional("trajectories", c.trajectories);
        r.optional("seed", c.seed);
        if (const json *m = r.child("methods"))
        {
            if (!m->is_array())
                throw SchemaError("config.methods: expected an array of strings");
            c.methods.clear();
            for (const auto &v : *m)
            {
                if (!v.is_string())
                    throw SchemaError("config.methods: expected an array of strings");
                c.methods.push_back(parse_method(v.get<std::string>()));
            }
        }
        r.optional("fixed_boundaries", c.fixed_boundaries);
        r.optional("state_cap", c.state_cap);
        r.optional("threads", c.threads);
        r.finish();
        return c;
    }

    inline ExperimentConfig load_experiment_config(const std::string &path)
    {
        return experiment_config_from_json(detail::read_json_file(path));
    }

    // ------------------------------------------------------------------
    // Scenario
    // ------------------------------------------------------------------

    inline json to_json(const Scenario &sc)
    {
        json walls = json::array();
        for (const auto &w : sc.walls)
            walls.push_back({{"orientation", w.orientation == WallOrientation::parallel ? "parallel" : "perpendicular"},
                             {"position_m", w.position_m},
                             {"loss_db", w.loss_db}});
        json trajectory = json::array();
        for (const auto &p : sc.trajectory)
            trajectory.push_back({p.x, p.y});
        json locations = json::array();
        for (std::size_t x = 0; x < sc.candidate_paths.size(); ++x)
        {
            json paths = json::array();
            for (const auto &p : sc.candidate_paths[x])
            {
                if (!p)
                    paths.push_back(nullptr);
                else
                    paths.push_back({{"aod_rad", p->aod_rad}, {"aoa_rad", p->aoa_rad}, {"gain_db", p->gain_db}, {"length_m", p->length_m}});
            }
            locations.push_back({{"location_index", x + 1}, {"paths", paths}});
        }
        return {{"bs_position", {sc.bs_position.x, sc.bs_position.y}},
                {"bs_height_m", sc.bs_height_m},
                {"ue_height_m", sc.ue_height_m},
                {"carrier_ghz", sc.carrier_ghz},
                {"trajectory", trajectory},
                {"walls", walls},
                {"locations", locations}};
    }

    // ------------------------------------------------------------------
    // Plan and Partition
    // ------------------------------------------------------------------

    inline json to_json(const Decision &d)
    {
        return {{"kind", d.kind == Decision::Kind::no_ref ? "no_ref" : "new_ref"}, {"at", d.at}};
    }

    inline json to_json(const BlockState &s)
    {
        json j{{"type", to_string(s.type)}, {"x_l", s.x_l}, {"x_h", s.x_h}};
        j["s_l"] = s.s_l ? json(*s.s_l) : json(nullptr);
        j["s_h"] = s.s_h ? json(*s.s_h) : json(nullptr);
        return j;
    }

    // Decisions are sorted by (type, x_l, x_h, s_l, s_h) for stable output.
    inline json to_json(const Plan &plan)
    {
        std::vector<const std::pair<const BlockState, ValueDecision> *> entries;
        for (const auto &e : plan.decisions)
            entries.push_back(&e);
        auto key = [](const BlockState &s)
        { return std::tuple(static_cast<int>(s.type), s.x_l, s.x_h, s.s_l.value_or(0), s.s_h.value_or(0)); };
        std::sort(entries.begin(), entries.end(), [&](auto *a, auto *b) { return key(a->first) < key(b->first); });
        json decisions = json::array();
        for (const auto *e : entries)
            decisions.push_back({{"state", to_json(e->first)}, {"value", e->second.value}, {"decision", to_json(e->second.decision)}});
        return {{"locations", plan.locations}, {"expected_k", plan.expected_k}, {"root", to_json(plan.root)}, {"decisions", decisions}};
    }

    inline json to_json(const QuantizedSkeleton &q)
    {
        json out = json::array();
        for (const auto &p : q.pairs())
            out.push_back(p ? json{p->bs, p->ue} : json(nullptr));
        return out;
    }

    inline QuantizedSkeleton quantized_skeleton_from_json(const json &j, const std::string &where)
    {
        if (!j.is_array())
            throw SchemaError(where + ": expected an array of [bs, ue] pairs or nulls");
        std::vector<std::optional<BeamIndexPair>> pairs;
        for (const auto &e : j)
        {
            if (e.is_null())
                pairs.emplace_back();
            else if (e.is_array() && e.size() == 2 && e[0].is_number_unsigned() && e[1].is_number_unsigned())
                pairs.push_back(BeamIndexPair{e[0].get<std::size_t>(), e[1].get<std::size_t>()});
            else
                throw SchemaError(where + ": expected an array of [bs, ue] pairs or nulls");
        }
        return QuantizedSkeleton(std::move(pairs));
    }

    inline json to_json(const Partition &p)
    {
        json measurements = json::array();
        for (const auto &m : p.measurements)
        {
            json j{{"location", m.location}};
            j["state"] = m.state ? json(*m.state) : json(nullptr);
            j["skeleton"] = m.skeleton ? to_json(*m.skeleton) : json(nullptr);
            measurements.push_back(std::move(j));
        }
        return {{"locations", p.locations}, {"boundaries", p.boundaries}, {"references", p.references}, {"measurements", measurements}};
    }

    inline Partition partition_from_json(const json &j, const std::string &where = "partition")
    {
        Partition p;
        detail::ObjectReader r(j, where);
        p.locations = r.required<std::size_t>("locations");
        p.boundaries = r.required<std::vector<std::size_t>>("boundaries");
        p.references = r.required<std::vector<std::size_t>>("references");
        if (const json *ms = r.child("measurements"))
        {
            if (!ms->is_array())
                throw SchemaError(where + ".measurements: expected an array");
            for (std::size_t i = 0; i < ms->size(); ++i)
            {
                const std::string at = where + ".measurements[" + std::to_string(i) + "]";
                detail::ObjectReader mr((*ms)[i], at);
                Measurement m;
                m.location = mr.required<std::size_t>("location");
                if (const json *s = mr.child("state"); s && !s->is_null())
                {
                    if (!s->is_number_unsigned())
                        throw SchemaError(at + ".state: expected a non-negative integer or null");
                    m.state = s->get<std::size_t>();
                }
                if (const json *q = mr.child("skeleton"); q && !q->is_null())
                    m.skeleton = quantized_skeleton_from_json(*q, at + ".skeleton");
                mr.finish();
                p.measurements.push_back(std::move(m));
            }
        }
        r.finish();
        if (const auto bad = partition_violation(p, ReferenceRule::adjacent))
            throw SchemaError(where + ": " + *bad);
        return p;
    }

    // ------------------------------------------------------------------
    // Report
    // ------------------------------------------------------------------

    inline json to_json(const MethodReport &m)
    {
        json snr = json::array();
        for (const double v : m.snr_mean_db)
            snr.push_back(detail::finite_or_null(v));
        json sizes = json::array();
        for (const auto &[size, count] : m.region_sizes)
            sizes.push_back({size, count});
        json ks = json::array();
        for (const auto &[k, count] : m.k_counts)
            ks.push_back({k, count});
        json partitions = json::array();
        for (const auto &p : m.partitions)
            partitions.push_back(to_json(p));
        return {{"method", to_string(m.method)},
                {"presetup_mean", m.presetup_mean},
                {"runtime_mean", m.runtime_mean},
                {"k_mean", m.k_mean},
                {"snr_mean_db", snr},
                {"region_size_histogram", sizes},
                {"k_distribution", ks},
                {"partitions", partitions}};
    }

    inline json to_json(const Report &r)
    {
        json methods = json::array();
        for (const auto &m : r.methods)
            methods.push_back(to_json(m));
        return {{"config", to_json(r.config)}, {"expected_k", r.expected_k}, {"methods", methods}};
    }

    namespace detail
    {
        inline std::map<std::size_t, std::size_t> histogram_from_json(const json &j, const std::string &where)
        {
            std::map<std::size_t, std::size_t> out;
            if (!j.is_array())
                throw SchemaError(where + ": expected an array of [value, count] pairs");
            for (const auto &e : j)
            {
                if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned())
                    throw SchemaError(where + ": expected an array of [value, count] pairs");
                out[e[0].get<std::size_t>()] = e[1].get<std::size_t>();
            }
            return out;
        }
    }

    inline Report report_from_json(const json &j)
    {
        Report rep;
        detail::ObjectReader r(j, "report");
        const json *cfg = r.child("config");
        if (!cfg)
            throw SchemaError("report: missing key 'config'");
        rep.config = experiment_config_from_json(*cfg);
        rep.expected_k = r.required<std::vector<double>>("expected_k");
        const json *methods = r.child("methods");
        if (!methods || !methods->is_array())
            throw SchemaError("report.methods: expected an array");
        for (std::size_t i = 0; i < methods->size(); ++i)
        {
            const std::string at = "report.methods[" + std::to_string(i) + "]";
            detail::ObjectReader mr((*methods)[i], at);
            MethodReport m;
            m.method = parse_method(mr.required<std::string>("method"));
            m.presetup_mean = mr.required<double>("presetup_mean");
            m.runtime_mean = mr.required<double>("runtime_mean");
            m.k_mean = mr.required<double>("k_mean");
            const json *snr = mr.child("snr_mean_db");
            if (!snr || !snr->is_array())
                throw SchemaError(at + ".snr_mean_db: expected an array");
            for (const auto &v : *snr)
                m.snr_mean_db.push_back(detail::number_or_floor(v, at + ".snr_mean_db"));
            const json *sizes = mr.child("region_size_histogram");
            const json *ks = mr.child("k_distribution");
            const json *parts = mr.child("partitions");
            if (!sizes || !ks || !parts || !parts->is_array())
                throw SchemaError(at + ": missing histogram or partitions");
            m.region_sizes = detail::histogram_from_json(*sizes, at + ".region_size_histogram");
            m.k_counts = detail::histogram_from_json(*ks, at + ".k_distribution");
            for (std::size_t t = 0; t < parts->size(); ++t)
                m.partitions.push_back(partition_from_json((*parts)[t], at + ".partitions[" + std::to_string(t) + "]"));
            mr.finish();
            rep.methods.push_back(std::move(m));
        }
        r.finish();
        return rep;
    }

    inline Report load_report(const std::string &path) { return report_from_json(detail::read_json_file(path)); }

    // ------------------------------------------------------------------
    // CSV and file emission
    // ------------------------------------------------------------------

    inline std::string counts_csv(const Report &r)
    {
        std::string out = "method,presetup_mean,runtime_mean\n";
        for (const auto &m : r.methods)
            out += std::string(to_string(m.method)) + "," + detail::format_double(m.presetup_mean) + "," +
                   detail::format_double(m.runtime_mean) + "\n";
        return out;
    }

    inline std::string snr_csv(const Report &r)
    {
        std::string out = "location";
        for (const auto &m : r.methods)
            out += std::string(",") + to_string(m.method);
        out += "\n";
        const std::size_t rows = r.methods.empty() ? 0 : r.methods.front().snr_mean_db.size();
        for (std::size_t x = 0; x < rows; ++x)
        {
            out += std::to_string(x + 1);
            for (const auto &m : r.methods)
                out += "," + detail::format_double(m.snr_mean_db[x]);
            out += "\n";
        }
        return out;
    }

    inline json regions_json(const Report &r)
    {
        json out = json::object();
        for (const auto &m : r.methods)
        {
            json parts = json::array();
            for (const auto &p : m.partitions)
                parts.push_back(to_json(p));
            out[to_string(m.method)] = parts;
        }
        return out;
    }

    enum class ReportFormat
    {
        json,
        csv,
        all,
    };

    // Writes counts.csv, snr_per_location.csv, regions.json and report.json
    // (or the subset selected by `format`) into `out_dir`.
    inline std::vector<std::filesystem::path> emit_report(const Report &r, const std::filesystem::path &out_dir,
                                                          ReportFormat format = ReportFormat::all)
    {
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec)
            throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
        std::vector<std::filesystem::path> written;
        auto put = [&](const char *name, const std::string &text)
        {
            detail::write_text_file(out_dir / name, text);
            written.push_back(out_dir / name);
        };
        if (format != ReportFormat::json)
        {
            put("counts.csv", counts_csv(r));
            put("snr_per_location.csv", snr_csv(r));
        }
        if (format != ReportFormat::csv)
        {
            put("regions.json", regions_json(r).dump(2) + "\n");
            put("report.json", to_json(r).dump(2) + "\n");
        }
        return written;
    }

    struct CsvTable
    {
        std::vector<std::string> header;
        std::vector<std::vector<std::string>> rows;
    };

    inline CsvTable parse_csv(std::istream &in, const std::string &source)
    {
        CsvTable t;
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line))
        {
            ++row;
            if (!line.empty() && line.back() == '\r')
                line.pop_back();
            if (line.empty())
                continue;
            auto cells = detail::split_csv_line(line);
            if (t.header.empty())
                t.header = std::move(cells);
            else if (cells.size() != t.header.size())
                throw SchemaError(source + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " columns, expected " +
                                  std::to_string(t.header.size()));
            else
                t.rows.push_back(std::move(cells));
        }
        if (t.header.empty())
            throw SchemaError(source + ": empty CSV");
        return t;
    }

    inline double parse_csv_number(const std::string &cell, const std::string &where)
    {
        if (cell == "-inf")
            return kSnrFloor;
        try
        {
            std::size_t used = 0;
            const double v = std::stod(cell, &used);
            if (used != cell.size())
                throw SchemaError(where + ": '" + cell + "' is not a number");
            return v;
        }
        catch (const std::logic_error &)
        {
            throw SchemaError(where + ": '" + cell + "' is not a number");
        }
    }
}

#endif
