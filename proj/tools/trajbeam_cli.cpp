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


// Command line front end: plan, simulate, import, report.
//
// Failures print a single line "error: <class>: <message>" on stderr and exit
// with the class's code (see trajbeam/error.hpp).

#include "trajbeam.hpp"
#include "trajbeam/serialization.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace
{
    using namespace trajbeam;

    struct CommonOptions
    {
        std::string config_path;
        std::optional<std::uint64_t> seed;
        std::string out_dir;
        std::string methods;
    };

    ExperimentConfig load_config(const CommonOptions &o)
    {
        ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_experiment_config(o.config_path);
        if (o.seed)
            cfg.seed = *o.seed;
        if (!o.methods.empty())
        {
            cfg.methods.clear();
            std::string item;
            std::istringstream in(o.methods);
            while (std::getline(in, item, ','))
                cfg.methods.push_back(parse_method(item));
        }
        return cfg;
    }

    void write_or_print(const json &j, const std::string &out_dir, const char *name)
    {
        if (out_dir.empty())
        {
            std::cout << j.dump(2) << '\n';
            return;
        }
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        if (ec)
            throw IoError("cannot create '" + out_dir + "': " + ec.message());
        const auto path = std::filesystem::path(out_dir) / name;
        detail::write_text_file(path, j.dump(2) + "\n");
        std::cout << path.string() << '\n';
    }

    int run_plan(const CommonOptions &o, std::size_t trajectory, const std::string &scenario_csv)
    {
        const ExperimentConfig cfg = load_config(o);
        cfg.validate();
        const auto f_book = dft_codebook(cfg.n_bs, cfg.f_size);
        const auto w_book = dft_codebook(cfg.n_ue, cfg.w_size);
        json out;
        if (scenario_csv.empty())
        {
            const auto model = build_trajectory_model(cfg, trajectory, f_book, w_book);
            const Plan plan = solve(model.process, cfg.planner());
            out = {{"trajectory", trajectory},
                   {"plan", to_json(plan)},
                   {"realized", to_json(realize_plan(plan, model.process, model.states))}};
        }
        else
        {
            const Scenario sc = import_raytrace_csv(scenario_csv);
            const auto process = derive_process(sc, cfg.blockage, f_book, w_book, cfg.skeleton_length, cfg.state_cap);
            out = {{"scenario_csv", scenario_csv}, {"plan", to_json(solve(process, cfg.planner()))}};
        }
        write_or_print(out, o.out_dir, "plan.json");
        return 0;
    }

    int run_simulate(CommonOptions o, std::optional<std::size_t> trajectories, std::optional<std::size_t> threads, const std::string &format)
    {
        ExperimentConfig cfg = load_config(o);
        if (trajectories)
            cfg.trajectories = *trajectories;
        if (threads)
            cfg.threads = *threads;
        const Report report = run_experiment(cfg);
        if (o.out_dir.empty())
            o.out_dir = "trajbeam_out";
        const auto fmt = format == "json" ? ReportFormat::json : format == "csv" ? ReportFormat::csv : ReportFormat::all;
        for (const auto &p : emit_report(report, o.out_dir, fmt))
            std::cout << p.string() << '\n';
        for (const auto &m : report.methods)
            std::cerr << to_string(m.method) << ": K=" << m.k_mean << " presetup=" << m.presetup_mean << " runtime=" << m.runtime_mean << '\n';
        return 0;
    }

    int run_import(const std::string &csv, const std::string &out_dir)
    {
        write_or_print(to_json(import_raytrace_csv(csv)), out_dir, "scenario.json");
        return 0;
    }

    int run_report(const std::string &in, const std::string &out_dir, const std::string &format)
    {
        const Report report = load_report(in);
        const auto fmt = format == "json" ? ReportFormat::json : format == "csv" ? ReportFormat::csv : ReportFormat::all;
        for (const auto &p : emit_report(report, out_dir, fmt))
            std::cout << p.string() << '\n';
        return 0;
    }

    int fail(const char *error_class, const std::string &message, int code)
    {
        std::string line = message;
        for (char &c : line)
            if (c == '\n' || c == '\r')
                c = ' ';
        std::cerr << "error: " << error_class << ": " << line << '\n';
        return code;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Trajectory-aware beam training planner and simulator"};
    app.require_subcommand(1);

    CommonOptions common;
    std::size_t trajectory = 0;
    std::string scenario_csv, report_in, import_csv, format = "all";
    std::optional<std::size_t> trajectories, threads;

    auto add_common = [&](CLI::App *cmd, bool with_methods)
    {
        cmd->add_option("-c,--config", common.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
        cmd->add_option("--seed", common.seed, "master seed (overrides the config)");
        cmd->add_option("-o,--out-dir", common.out_dir, "output directory");
        if (with_methods)
            cmd->add_option("--methods", common.methods, "comma separated subset of proposed,exhaustive,greedy,fixed");
    };

    auto *plan = app.add_subcommand("plan", "solve one trajectory and print its plan");
    add_common(plan, false);
    plan->add_option("--trajectory", trajectory, "trajectory index drawn from the seed");
    plan->add_option("--scenario-csv", scenario_csv, "plan on an imported ray-trace CSV instead")->check(CLI::ExistingFile);

    auto *simulate = app.add_subcommand("simulate", "run the multi-trajectory experiment");
    add_common(simulate, true);
    simulate->add_option("--trajectories", trajectories, "number of trajectories (overrides the config)");
    simulate->add_option("--threads", threads, "worker threads, 0 for all cores");
    simulate->add_option("--format", format, "json, csv or all")->check(CLI::IsMember({"json", "csv", "all"}));

    auto *import = app.add_subcommand("import", "convert a ray-trace CSV to scenario JSON");
    import->add_option("csv", import_csv, "ray-trace CSV")->required();
    import->add_option("-o,--out-dir", common.out_dir, "output directory");

    auto *report = app.add_subcommand("report", "re-emit CSV/JSON from a stored report.json");
    report->add_option("--in", report_in, "report.json written by simulate")->required();
    report->add_option("-o,--out-dir", common.out_dir, "output directory")->required();
    report->add_option("--format", format, "json, csv or all")->check(CLI::IsMember({"json", "csv", "all"}));

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        return fail("invalid_argument", e.what(), 2);
    }

    try
    {
        if (plan->parsed())
            return run_plan(common, trajectory, scenario_csv);
        if (simulate->parsed())
            return run_simulate(common, trajectories, threads, format);
        if (import->parsed())
            return run_import(import_csv, common.out_dir);
        return run_report(report_in, common.out_dir, format);
    }
    catch (const trajbeam::Error &e)
    {
        return fail(e.error_class(), e.what(), e.exit_code());
    }
    catch (const std::exception &e)
    {
        return fail("internal", e.what(), 1);
    }
}
