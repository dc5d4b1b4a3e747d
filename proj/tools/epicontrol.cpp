/*
 Copyright 2026 The epicontrol Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "commands.hpp"

namespace {

struct Common {
    std::string config;
    std::string preset;
    std::string out;
    std::string data;
    std::string series;
    std::string params;
    std::vector<std::string> overrides;
    std::optional<double> step;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "flat key = value config file");
    cmd->add_option("--preset", c.preset, "built-in settings (paper-italy-2020)");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--data", c.data, "regional CSV feed, or - for stdin");
    cmd->add_option("--series", c.series, "national series CSV (default: <out>/series.csv)");
    cmd->add_option("--params", c.params, "key = value parameter file, e.g. a fit result");
    cmd->add_option("--set", c.overrides, "override one key, key=value (repeatable)");
    cmd->add_option("--step", c.step, "integration step in days");
}

epicontrol::RunConfig resolve(const Common& c) {
    using epicontrol::Settings;
    Settings s = c.preset.empty() ? Settings{} : epicontrol::preset(c.preset);
    if (!c.config.empty()) {
        s.merge_file(c.config);
    }
    if (!c.params.empty()) {
        s.merge_file(c.params);
    }
    s.merge_environment();
    if (!c.out.empty()) {
        s.set("out", c.out);
    }
    if (!c.data.empty()) {
        s.set("data", c.data);
    }
    if (!c.series.empty()) {
        s.set("series", c.series);
    }
    if (c.step) {
        s.set("step", std::to_string(*c.step));
    }
    for (const auto& o : c.overrides) {
        s.merge_assignment(o);
    }
    return epicontrol::RunConfig::from(s);
}

} // namespace

int main(int argc, char** argv) {
    namespace ec = epicontrol;
    CLI::App app{"SEIR-type epidemic model: calibration, simulation and optimal control"};
    app.require_subcommand(1);

    Common common;
    std::optional<std::uint64_t> seed;

    auto* ingest = app.add_subcommand("ingest", "aggregate the regional feed into a national series");
    auto* fit = app.add_subcommand("fit", "least-squares calibration against the national series");
    auto* simulate = app.add_subcommand("simulate", "uncontrolled trajectory");
    auto* optimize = app.add_subcommand("optimize", "optimal controls by forward-backward sweep");
    auto* report = app.add_subcommand("report", "comparison tables from series, simulate and optimize outputs");
    for (auto* cmd : {ingest, fit, simulate, optimize, report}) {
        add_common(cmd, common);
    }
    optimize->add_option("--seed", seed, "run the Hamiltonian sampling self-test with this seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : ec::cli::exit_usage;
    }

    try {
        const auto cfg = resolve(common);
        if (*ingest) {
            return ec::cli::cmd_ingest(cfg, std::cout);
        }
        if (*fit) {
            return ec::cli::cmd_fit(cfg, std::cout);
        }
        if (*simulate) {
            return ec::cli::cmd_simulate(cfg, std::cout);
        }
        if (*optimize) {
            return ec::cli::cmd_optimize(cfg, seed, std::cout);
        }
        return ec::cli::cmd_report(cfg, std::cout);
    } catch (const ec::Error& e) {
        std::cerr << "epicontrol: " << e.what() << '\n';
        return ec::cli::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "epicontrol: " << e.what() << '\n';
        return ec::cli::exit_data;
    }
}
