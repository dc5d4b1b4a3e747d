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

#ifndef EPICONTROL_TOOLS_COMMANDS_HPP
#define EPICONTROL_TOOLS_COMMANDS_HPP

// Subcommands behind the epicontrol executable. Each takes a resolved RunConfig,
// writes its outputs under cfg.out_dir and returns a process exit code.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "epicontrol/calendar.hpp"
#include "epicontrol/config.hpp"
#include "epicontrol/data_io.hpp"
#include "epicontrol/errors.hpp"
#include "epicontrol/fitting.hpp"
#include "epicontrol/integrator.hpp"
#include "epicontrol/metrics.hpp"
#include "epicontrol/model.hpp"
#include "epicontrol/pontryagin.hpp"

namespace epicontrol::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,
    exit_data = 3,
    exit_convergence = 4,
    exit_numerical = 5,
};

[[nodiscard]] inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage:
    case ErrorKind::invalid_argument:
    case ErrorKind::probe_at_bound:
        return exit_usage;
    case ErrorKind::data:
    case ErrorKind::io:
    case ErrorKind::out_of_range:
    case ErrorKind::grid_mismatch:
    case ErrorKind::division_by_zero:
        return exit_data;
    case ErrorKind::non_finite_state:
        return exit_numerical;
    }
    return exit_numerical;
}

inline constexpr const char* kSeriesFile = "series.csv";
inline constexpr const char* kFitTextFile = "fit_result.txt";
inline constexpr const char* kFitJsonFile = "fit_result.json";
inline constexpr const char* kSimulationFile = "simulation.csv";
inline constexpr const char* kOptimalFile = "optimal.csv";
inline constexpr const char* kConvergenceFile = "convergence.log";
inline constexpr const char* kReportFile = "report.txt";

namespace detail {

inline std::filesystem::path output_path(const RunConfig& cfg, const char* name) {
    std::filesystem::create_directories(cfg.out_dir);
    return std::filesystem::path(cfg.out_dir) / name;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        fail(ErrorKind::io, "cannot write '" + path.string() + "'");
    }
    return out;
}

inline std::ifstream open_input(const std::filesystem::path& path, const std::string& what) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::io, what + " '" + path.string() + "' not found");
    }
    return in;
}

inline std::filesystem::path series_path(const RunConfig& cfg) {
    return cfg.series_path.empty() ? std::filesystem::path(cfg.out_dir) / kSeriesFile
                                   : std::filesystem::path(cfg.series_path);
}

inline ObservedSeries load_series(const RunConfig& cfg) {
    auto in = open_input(series_path(cfg), "national series");
    return read_series_csv(in);
}

/// Reads S..P columns of a trajectory CSV written by simulate or optimize.
inline Trajectory<kStateDim> read_state_csv(const std::filesystem::path& path) {
    auto in = open_input(path, "trajectory file");
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::data, path.string() + ": empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            header.emplace_back(epicontrol::detail::trim(cell));
        }
    }
    std::array<std::size_t, kStateDim> column{};
    for (std::size_t i = 0; i < kStateDim; ++i) {
        const auto it = std::find(header.begin(), header.end(), kCompartmentNames[i]);
        require(it != header.end(), ErrorKind::data,
                path.string() + ": missing column " + std::string(kCompartmentNames[i]));
        column[i] = static_cast<std::size_t>(it - header.begin());
    }
    require(!header.empty() && header.front() == "t", ErrorKind::data, path.string() + ": first column must be t");

    std::vector<double> times;
    std::vector<StateVec> values;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (epicontrol::detail::trim(line).empty()) {
            continue;
        }
        std::vector<double> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                cells.push_back(std::stod(cell));
            } catch (const std::logic_error&) {
                fail(ErrorKind::data, path.string() + ":" + std::to_string(number) + ": bad number '" + cell + "'");
            }
        }
        require(cells.size() == header.size(), ErrorKind::data,
                path.string() + ":" + std::to_string(number) + ": wrong field count");
        times.push_back(cells[0]);
        StateVec x{};
        for (std::size_t i = 0; i < kStateDim; ++i) {
            x[i] = cells[column[i]];
        }
        values.push_back(x);
    }
    require(times.size() >= 2, ErrorKind::data, path.string() + ": need at least two rows");
    const double h = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    TimeGrid grid(times.front(), times.back(), h);
    for (std::size_t k = 0; k < times.size(); ++k) {
        require(std::abs(times[k] - grid.time(k)) <= 1e-6 * std::max(1.0, h), ErrorKind::data,
                path.string() + ": time column is not uniform");
    }
    return Trajectory<kStateDim>(grid, std::move(values));
}

inline nlohmann::json fit_result_json(const FitResult& result) {
    nlohmann::json j;
    for (auto v : kAllFitVariables) {
        j["parameters"][variable_name(v)] = result.calibration.get(v);
    }
    for (const auto& fv : result.free) {
        j["free"].push_back(variable_name(fv.variable));
    }
    j["converged"] = result.converged;
    j["status"] = result.status;
    j["iterations"] = result.iterations;
    j["residual_norm"] = result.residual_norm;
    j["initial_residual_norm"] = result.initial_residual_norm;
    j["rmse"] = {{"Q", result.rmse[0]}, {"R", result.rmse[1]}, {"D", result.rmse[2]}};
    return j;
}

/// Largest violation of H(u*) <= H(u) + 1e-8 (1 + |H|) over random u in the box.
inline double minimality_violation(const OptimalSolution& sol, const ModelParams& p, const CostWeights& w,
                                   const ControlBounds& b, const Population& pop, std::uint64_t seed,
                                   std::size_t nodes = 100, std::size_t samples = 1000) {
    std::mt19937_64 rng(seed);
    std::array<std::uniform_real_distribution<double>, kControlDim> draw{
        std::uniform_real_distribution<double>(b.lower[0], b.upper[0]),
        std::uniform_real_distribution<double>(b.lower[1], b.upper[1]),
        std::uniform_real_distribution<double>(b.lower[2], b.upper[2])};
    std::uniform_int_distribution<std::size_t> pick(0, sol.states.size() - 1);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < nodes; ++n) {
        const std::size_t k = pick(rng);
        const double t = sol.states.grid().time(k);
        const double h_star = hamiltonian(sol.states[k], sol.controls[k], sol.adjoints[k], t, p, w, pop);
        for (std::size_t s = 0; s < samples; ++s) {
            ControlVec u{draw[0](rng), draw[1](rng), draw[2](rng)};
            const double h = hamiltonian(sol.states[k], u, sol.adjoints[k], t, p, w, pop);
            worst = std::max(worst, h_star - h - 1e-8 * (1.0 + std::abs(h_star)));
        }
    }
    return worst;
}

} // namespace detail

/// Regional feed -> national series CSV over cfg.ingest_window.
inline int cmd_ingest(const RunConfig& cfg, std::ostream& log) {
    if (!cfg.ingest_window.valid()) {
        fail(ErrorKind::usage, "ingest window " + format_date(cfg.ingest_window.first) + " .. " +
                                   format_date(cfg.ingest_window.last) + " is empty");
    }
    require(!cfg.data_path.empty(), ErrorKind::usage, "ingest needs a data file (--data or data = ...)");
    ParsedFeed feed;
    if (cfg.data_path == "-") {
        feed = parse_regional_csv(std::cin);
    } else {
        auto in = detail::open_input(cfg.data_path, "data file");
        feed = parse_regional_csv(in);
    }
    if (!feed.rejected.empty()) {
        log << describe_rejections(feed.rejected) << '\n';
        fail(ErrorKind::data, std::to_string(feed.rejected.size()) + " malformed row(s) in " + cfg.data_path);
    }
    const auto series = aggregate_national(feed.records, cfg.ingest_window);
    const auto path = detail::output_path(cfg, kSeriesFile);
    auto out = detail::open_output(path);
    write_series_csv(out, series);
    log << "ingest: " << feed.records.size() << " regional rows -> " << series.size() << " days in " << path.string()
        << '\n';
    return exit_ok;
}

/// Least-squares calibration on the fit window of the national series.
inline int cmd_fit(const RunConfig& cfg, std::ostream& log) {
    const auto series = detail::load_series(cfg);

    const auto problem = make_fit_problem(cfg, series);

    FitOptions opts;
    opts.max_iterations = cfg.fit_max_iterations;
    opts.max_step = cfg.fit_max_step;
    const auto result = fit(problem, cfg.fit_guess, opts);

    {
        auto out = detail::open_output(detail::output_path(cfg, kFitTextFile));
        write_fit_result(out, result);
    }
    {
        auto out = detail::open_output(detail::output_path(cfg, kFitJsonFile));
        out << detail::fit_result_json(result).dump(2) << '\n';
    }
    log << "fit: " << result.status << " after " << result.iterations << " iterations, residual "
        << result.initial_residual_norm << " -> " << result.residual_norm << '\n';
    for (const auto& fv : result.free) {
        log << "  " << variable_name(fv.variable) << " = " << result.calibration.get(fv.variable) << '\n';
    }
    return result.converged ? exit_ok : exit_convergence;
}

/// Uncontrolled trajectory over [start_date, end_date].
inline int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
    const Population pop{cfg.population};
    const auto x0 = cfg.initial_state();
    check_state(x0, pop);
    const auto path = detail::output_path(cfg, kSimulationFile);
    auto out = detail::open_output(path);
    if (cfg.horizon() == 0.0) {
        out << 't';
        for (const char* name : kCompartmentNames) {
            out << ',' << name;
        }
        out << "\n0" << std::setprecision(std::numeric_limits<double>::max_digits10);
        for (double v : x0) {
            out << ',' << v;
        }
        out << '\n';
        log << "simulate: zero horizon, wrote the initial state to " << path.string() << '\n';
        return exit_ok;
    }
    const TimeGrid grid(0.0, cfg.horizon(), cfg.step);
    const auto& p = cfg.calibration.params;
    const auto traj = integrate_forward(
        [&](double t, const StateVec& x) { return rhs_uncontrolled(t, x, p, pop); }, x0, grid);
    write_csv(out, traj, kCompartmentNames);
    const auto& end = traj.back();
    log << "simulate: " << grid.size() << " nodes -> " << path.string() << "; at " << format_date(cfg.window.last)
        << " Q = " << end[Q] << ", R = " << end[R] << ", D = " << end[D] << '\n';
    return exit_ok;
}

/// Forward-backward sweep for the controlled problem.
inline int cmd_optimize(const RunConfig& cfg, std::optional<std::uint64_t> seed, std::ostream& log) {
    const Population pop{cfg.population};
    require(cfg.horizon() > 0.0, ErrorKind::usage, "optimize needs end_date after start_date");
    const TimeGrid grid(0.0, cfg.horizon(), cfg.step);
    const auto& p = cfg.calibration.params;
    const auto sol = solve_fbsm(p, cfg.initial_state(), cfg.weights, cfg.bounds, grid, cfg.fbsm, pop);
    {
        auto out = detail::open_output(detail::output_path(cfg, kOptimalFile));
        write_solution_csv(out, sol);
    }
    {
        auto out = detail::open_output(detail::output_path(cfg, kConvergenceFile));
        out << "iteration,change,cost,relaxation\n" << std::setprecision(10);
        for (const auto& rec : sol.history) {
            out << rec.iteration << ',' << rec.change << ',' << rec.cost << ',' << rec.relaxation << '\n';
        }
    }
    log << "optimize: " << (sol.converged ? "converged" : "not converged") << " after " << sol.iterations
        << " sweeps (adjoint " << to_string(cfg.fbsm.adjoint_form) << ", final relaxation " << sol.final_relaxation
        << "), J = " << sol.cost << '\n';
    if (seed) {
        const double worst = detail::minimality_violation(sol, p, cfg.weights, cfg.bounds, pop, *seed);
        log << "optimize: Hamiltonian self-test (seed " << *seed << ") worst slack " << worst
            << (worst <= 0.0 ? " ok" : " VIOLATED") << '\n';
        if (worst > 0.0) {
            return exit_numerical;
        }
    }
    return sol.converged ? exit_ok : exit_convergence;
}

/// Six comparison tables (R, D, Q for each month among report.dates).
inline int cmd_report(const RunConfig& cfg, std::ostream& log) {
    const auto series = detail::load_series(cfg);
    const auto uncontrolled = detail::read_state_csv(std::filesystem::path(cfg.out_dir) / kSimulationFile);
    const auto controlled = detail::read_state_csv(std::filesystem::path(cfg.out_dir) / kOptimalFile);
    require(!cfg.report_dates.empty(), ErrorKind::usage, "report.dates is empty");

    std::map<std::pair<int, unsigned>, std::vector<Date>> months;
    for (const auto& d : cfg.report_dates) {
        months[{static_cast<int>(d.year()), static_cast<unsigned>(d.month())}].push_back(d);
    }
    std::ostringstream text;
    for (Series s : {Series::recovered, Series::deceased, Series::quarantined}) {
        for (const auto& [ym, dates] : months) {
            const auto table = build_table(s, series, uncontrolled, controlled, cfg.window.first, dates);
            char tag[16];
            std::snprintf(tag, sizeof tag, "%04d-%02u", ym.first, ym.second);
            write_table_text(text, table, std::string(series_symbol(s)) + " " + tag);
            text << '\n';
            const std::string name = std::string("table_") + series_symbol(s) + "_" + tag + ".csv";
            auto out = detail::open_output(detail::output_path(cfg, name.c_str()));
            write_table_csv(out, table);
        }
    }
    auto out = detail::open_output(detail::output_path(cfg, kReportFile));
    out << text.str();
    log << text.str();
    return exit_ok;
}

} // namespace epicontrol::cli

#endif
