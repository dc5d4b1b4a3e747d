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

#ifndef EPICONTROL_CONFIG_HPP
#define EPICONTROL_CONFIG_HPP

// Run configuration: flat `key = value` text, layered as
// preset < config file < EPICONTROL_* environment < command-line overrides.
// Keys are case-insensitive. Environment names map by dropping the prefix,
// lowercasing and turning "__" into "." (EPICONTROL_FBSM__RELAXATION -> fbsm.relaxation).

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "epicontrol/calendar.hpp"
#include "epicontrol/data_io.hpp"
#include "epicontrol/errors.hpp"
#include "epicontrol/fitting.hpp"
#include "epicontrol/model.hpp"
#include "epicontrol/pontryagin.hpp"

extern char** environ;

namespace epicontrol {

inline constexpr std::string_view kEnvPrefix = "EPICONTROL_";

/// Italy, 1 September - 30 November 2020. E0 and I0 are reconstructed seeds
/// (least squares against the published uncontrolled-model columns with every
/// other value held at the listed rates); they were never reported directly.
inline constexpr std::string_view kItaly2020Preset = R"(# preset: paper-italy-2020
start_date = 2020-09-01
end_date = 2020-11-30
step = 0.1
population = 60461826
P0 = 0
Q0 = 26754
R0 = 207944
D0 = 35491
E0 = 97039
I0 = 2277
alpha = 1.1775e-7
beta = 3.97
gamma = 0.0048
delta = 0.1432
lambda1 = 0.0181
lambda2 = 0.8111
lambda3 = 6.9882
kappa1 = 0.00062
kappa2 = 0.0233
kappa3 = 54.0351
w1 = 1
w2 = 1
w3 = 1
v1 = 1
v2 = 1
v3 = 1
u_min = 0.1, 0, 0
u_max = 1, 1, 1
fbsm.relaxation = 0.5
fbsm.tolerance = 1e-4
fbsm.max_iterations = 500
fbsm.adjoint_form = state-sum
ingest.start_date = 2020-09-01
ingest.end_date = 2020-10-31
fit.start_date = 2020-09-01
fit.end_date = 2020-10-31
fit.free = alpha, beta, gamma, delta, lambda1, lambda2, lambda3, kappa1, kappa2, kappa3
fit.guess.alpha = 0.06
fit.guess.beta = 1
fit.guess.gamma = 5
fit.guess.delta = 0.5
fit.guess.lambda1 = 0.01
fit.guess.lambda2 = 0.1
fit.guess.lambda3 = 10
fit.guess.kappa1 = 0.001
fit.guess.kappa2 = 0.001
fit.guess.kappa3 = 10
fit.bounds.alpha = 1e-10, 1
fit.bounds.beta = 1e-4, 20
fit.bounds.gamma = 1e-4, 20
fit.bounds.delta = 1e-4, 10
fit.bounds.lambda1 = 1e-6, 1
fit.bounds.lambda2 = 1e-4, 10
fit.bounds.lambda3 = 0, 200
fit.bounds.kappa1 = 1e-7, 1
fit.bounds.kappa2 = 1e-5, 10
fit.bounds.kappa3 = 0, 200
fit.bounds.E0 = 0, 5e6
fit.bounds.I0 = 0, 5e6
report.dates = 2020-09-01, 2020-09-05, 2020-09-10, 2020-09-15, 2020-09-20, 2020-09-25, 2020-09-30, 2020-10-01, 2020-10-05, 2020-10-10, 2020-10-15, 2020-10-20, 2020-10-25, 2020-10-29
out = out
)";

[[nodiscard]] inline std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

[[nodiscard]] inline std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::size_t end = comma == std::string_view::npos ? text.size() : comma;
        const auto item = detail::trim(text.substr(start, end - start));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

/// Layered key/value store.
class Settings {
public:
    void set(std::string_view key, std::string_view value) {
        values_[lowercase(detail::trim(key))] = std::string(detail::trim(value));
    }

    /// Reads `key = value` lines; blank lines and `#` comments are skipped.
    void merge(std::istream& in, const std::string& source) {
        std::string line;
        std::size_t number = 0;
        while (std::getline(in, line)) {
            ++number;
            const auto text = detail::trim(line);
            if (text.empty() || text.front() == '#') {
                continue;
            }
            const auto eq = text.find('=');
            if (eq == std::string_view::npos || detail::trim(text.substr(0, eq)).empty()) {
                fail(ErrorKind::usage, source + ":" + std::to_string(number) + ": expected 'key = value'");
            }
            set(text.substr(0, eq), text.substr(eq + 1));
        }
    }

    void merge_text(std::string_view text, const std::string& source) {
        std::istringstream in{std::string(text)};
        merge(in, source);
    }

    void merge_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) {
            fail(ErrorKind::io, "cannot open config file '" + path + "'");
        }
        merge(in, path);
    }

    void merge_environment(char** env = environ) {
        if (env == nullptr) {
            return;
        }
        for (char** e = env; *e != nullptr; ++e) {
            const std::string_view entry(*e);
            if (entry.substr(0, kEnvPrefix.size()) != kEnvPrefix) {
                continue;
            }
            const auto eq = entry.find('=');
            if (eq == std::string_view::npos) {
                continue;
            }
            std::string key = lowercase(entry.substr(kEnvPrefix.size(), eq - kEnvPrefix.size()));
            for (std::size_t pos = key.find("__"); pos != std::string::npos; pos = key.find("__", pos + 1)) {
                key.replace(pos, 2, ".");
            }
            set(key, entry.substr(eq + 1));
        }
    }

    /// Applies a `key=value` override from the command line.
    void merge_assignment(std::string_view assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorKind::usage, "override '" + std::string(assignment) + "' is not key=value");
        }
        set(assignment.substr(0, eq), assignment.substr(eq + 1));
    }

    [[nodiscard]] bool contains(std::string_view key) const { return values_.contains(lowercase(key)); }

    [[nodiscard]] std::optional<std::string> find(std::string_view key) const {
        const auto it = values_.find(lowercase(key));
        if (it == values_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    [[nodiscard]] std::string text(std::string_view key) const {
        auto v = find(key);
        if (!v) {
            fail(ErrorKind::usage, "missing configuration key '" + std::string(key) + "'");
        }
        return *v;
    }

    [[nodiscard]] double number(std::string_view key) const { return to_number(key, text(key)); }

    [[nodiscard]] double number_or(std::string_view key, double fallback) const {
        const auto v = find(key);
        return v ? to_number(key, *v) : fallback;
    }

    [[nodiscard]] std::vector<double> numbers(std::string_view key) const {
        std::vector<double> out;
        for (const auto& item : split_list(text(key))) {
            out.push_back(to_number(key, item));
        }
        return out;
    }

    [[nodiscard]] const std::map<std::string, std::string>& entries() const noexcept { return values_; }

private:
    [[nodiscard]] static double to_number(std::string_view key, const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used == s.size() && std::isfinite(v)) {
                return v;
            }
        } catch (const std::logic_error&) {
        }
        fail(ErrorKind::usage, "configuration key '" + std::string(key) + "' is not a number: '" + s + "'");
    }

    std::map<std::string, std::string> values_;
};

[[nodiscard]] inline Settings preset(std::string_view name) {
    Settings s;
    if (name == "paper-italy-2020") {
        s.merge_text(kItaly2020Preset, "preset paper-italy-2020");
        return s;
    }
    fail(ErrorKind::usage, "unknown preset '" + std::string(name) + "' (available: paper-italy-2020)");
}

struct RunConfig {
    DateWindow window{};
    double step = 0.1;
    double population = 0.0;
    double p0 = 0.0;
    double q0 = 0.0;
    double r0 = 0.0;
    double d0 = 0.0;
    Calibration calibration;
    CostWeights weights;
    ControlBounds bounds;
    FbsmOptions fbsm;
    DateWindow ingest_window{};
    DateWindow fit_window{};
    std::vector<FreeVariable> fit_free;
    std::vector<double> fit_guess;
    int fit_max_iterations = 200;
    double fit_max_step = 0.5;
    std::string data_path;
    std::string series_path;
    std::string out_dir = "out";
    std::vector<Date> report_dates;

    [[nodiscard]] double horizon() const { return static_cast<double>(days_between(window.first, window.last)); }

    [[nodiscard]] StateVec initial_state() const {
        return make_initial_state(Population{population}, calibration.e0, calibration.i0, q0, r0, d0, p0);
    }

    [[nodiscard]] static RunConfig from(const Settings& s) {
        RunConfig c;
        c.window = {parse_date(s.text("start_date")), parse_date(s.text("end_date"))};
        require(c.window.valid(), ErrorKind::usage, "end_date precedes start_date");
        c.step = s.number_or("step", 0.1);
        require(c.step > 0.0, ErrorKind::usage, "step must be positive");
        c.population = s.number("population");
        c.p0 = s.number_or("p0", 0.0);
        c.q0 = s.number("q0");
        c.r0 = s.number("r0");
        c.d0 = s.number("d0");
        for (auto v : kAllFitVariables) {
            c.calibration.set(v, s.number(variable_name(v)));
        }
        c.calibration.params.validate();
        c.weights = {s.number_or("w1", 1.0), s.number_or("w2", 1.0), s.number_or("w3", 1.0),
                     s.number_or("v1", 1.0), s.number_or("v2", 1.0), s.number_or("v3", 1.0)};
        c.weights.validate();
        const auto lo = s.numbers("u_min");
        const auto hi = s.numbers("u_max");
        require(lo.size() == kControlDim && hi.size() == kControlDim, ErrorKind::usage,
                "u_min and u_max need three comma-separated values");
        std::copy(lo.begin(), lo.end(), c.bounds.lower.begin());
        std::copy(hi.begin(), hi.end(), c.bounds.upper.begin());
        c.bounds.validate();
        c.fbsm.relaxation = s.number_or("fbsm.relaxation", 0.5);
        c.fbsm.tolerance = s.number_or("fbsm.tolerance", 1e-4);
        c.fbsm.max_iterations = static_cast<int>(s.number_or("fbsm.max_iterations", 500));
        c.fbsm.min_relaxation = std::min(c.fbsm.relaxation, s.number_or("fbsm.min_relaxation", 1.0 / 1024.0));
        c.fbsm.adjoint_form = parse_adjoint_form(s.find("fbsm.adjoint_form").value_or("state-sum"));
        c.fbsm.validate();

        c.ingest_window = {parse_date(s.find("ingest.start_date").value_or(s.text("start_date"))),
                           parse_date(s.find("ingest.end_date").value_or(s.text("end_date")))};
        c.fit_window = {parse_date(s.find("fit.start_date").value_or(s.text("start_date"))),
                        parse_date(s.find("fit.end_date").value_or(s.text("end_date")))};
        for (const auto& name : split_list(s.find("fit.free").value_or(""))) {
            const auto v = parse_variable_ci(name);
            const auto bounds = s.numbers("fit.bounds." + std::string(variable_name(v)));
            require(bounds.size() == 2, ErrorKind::usage, "fit.bounds." + name + " needs 'lower, upper'");
            c.fit_free.push_back({v, bounds[0], bounds[1]});
            c.fit_guess.push_back(
                s.number_or("fit.guess." + std::string(variable_name(v)), c.calibration.get(v)));
        }
        c.fit_max_iterations = static_cast<int>(s.number_or("fit.max_iterations", 200));
        c.fit_max_step = s.number_or("fit.max_step", 0.5);
        require(c.fit_max_step > 0.0, ErrorKind::usage, "fit.max_step must be positive");
        c.data_path = s.find("data").value_or("");
        c.series_path = s.find("series").value_or("");
        c.out_dir = s.find("out").value_or("out");
        if (const auto dates = s.find("report.dates")) {
            for (const auto& d : split_list(*dates)) {
                c.report_dates.push_back(parse_date(d));
            }
        }
        return c;
    }

private:
    [[nodiscard]] static FitVariable parse_variable_ci(const std::string& name) {
        for (auto v : kAllFitVariables) {
            if (lowercase(name) == lowercase(variable_name(v))) {
                return v;
            }
        }
        fail(ErrorKind::usage, "unknown fit variable '" + name + "'");
    }
};

/// Least-squares problem for cfg.fit_window. Observation times count days from
/// start_date; Q0, R0, D0 come from the series when it covers start_date.
[[nodiscard]] inline FitProblem make_fit_problem(const RunConfig& cfg, const ObservedSeries& series) {
    require(cfg.fit_window.valid(), ErrorKind::usage, "fit window is empty");
    require(!cfg.fit_free.empty(), ErrorKind::usage, "fit.free lists no variables");
    FitProblem problem;
    problem.base = cfg.calibration;
    problem.population = cfg.population;
    problem.p0 = cfg.p0;
    problem.q0 = cfg.q0;
    problem.r0 = cfg.r0;
    problem.d0 = cfg.d0;
    problem.step = cfg.step;
    problem.free = cfg.fit_free;
    if (const auto k0 = series.index_of(cfg.window.first)) {
        problem.q0 = series.quarantined()[*k0];
        problem.r0 = series.recovered()[*k0];
        problem.d0 = series.deceased()[*k0];
    }
    for (long day = 0; day <= days_between(cfg.fit_window.first, cfg.fit_window.last); ++day) {
        const auto date = add_days(cfg.fit_window.first, day);
        const auto k = series.index_of(date);
        if (!k) {
            fail(ErrorKind::out_of_range, "fit date " + format_date(date) + " is not in the national series");
        }
        const auto t = static_cast<double>(days_between(cfg.window.first, date));
        require(t >= 0.0, ErrorKind::usage, "fit window starts before start_date");
        problem.observed.times.push_back(t);
        problem.observed.q.push_back(series.quarantined()[*k]);
        problem.observed.r.push_back(series.recovered()[*k]);
        problem.observed.d.push_back(series.deceased()[*k]);
    }
    return problem;
}

} // namespace epicontrol

#endif
