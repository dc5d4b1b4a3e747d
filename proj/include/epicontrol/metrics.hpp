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

#ifndef EPICONTROL_METRICS_HPP
#define EPICONTROL_METRICS_HPP

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "epicontrol/calendar.hpp"
#include "epicontrol/data_io.hpp"
#include "epicontrol/errors.hpp"
#include "epicontrol/integrator.hpp"
#include "epicontrol/model.hpp"

namespace epicontrol {

/// 100 |real - model| / real, unrounded.
[[nodiscard]] inline double relative_error(double real, double model) {
    require(real != 0.0, ErrorKind::division_by_zero, "relative error undefined for a zero real value");
    return 100.0 * std::abs(real - model) / std::abs(real);
}

struct Improvement {
    double percent = 0.0;
    int direction = 0; ///< sign of (controlled - real): +1 increase, -1 decrease, 0 none
};

[[nodiscard]] inline Improvement improvement(double real, double controlled) {
    require(real != 0.0, ErrorKind::division_by_zero, "improvement undefined for a zero real value");
    const double diff = controlled - real;
    return {100.0 * std::abs(diff) / std::abs(real), (diff > 0.0) - (diff < 0.0)};
}

/// Half-up rounding to two decimals for display.
[[nodiscard]] inline double round_percent(double percent) { return std::floor(percent * 100.0 + 0.5) / 100.0; }

[[nodiscard]] inline std::string format_percent(double percent) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", round_percent(percent));
    return buf;
}

enum class Series { recovered, deceased, quarantined };

[[nodiscard]] inline const char* series_symbol(Series s) {
    switch (s) {
    case Series::recovered:
        return "R";
    case Series::deceased:
        return "D";
    case Series::quarantined:
        return "Q";
    }
    return "?";
}

[[nodiscard]] inline Compartment series_compartment(Series s) {
    switch (s) {
    case Series::recovered:
        return R;
    case Series::deceased:
        return D;
    case Series::quarantined:
        break;
    }
    return Q;
}

struct ComparisonRow {
    Date date{};
    double real = 0.0;
    double uncontrolled = 0.0;
    double controlled = 0.0;
    double eta = 0.0;
    Improvement gain{};
};

struct ComparisonTable {
    Series series = Series::recovered;
    std::vector<ComparisonRow> rows;
};

[[nodiscard]] inline ComparisonRow make_row(const Date& date, double real, double uncontrolled, double controlled) {
    return {date, real, uncontrolled, controlled, relative_error(real, uncontrolled), improvement(real, controlled)};
}

/// Samples both model trajectories (time measured in days from `start`) and the
/// observed series at each date.
[[nodiscard]] inline ComparisonTable build_table(Series series, const ObservedSeries& real,
                                                 const Trajectory<kStateDim>& uncontrolled,
                                                 const Trajectory<kStateDim>& controlled, const Date& start,
                                                 const std::vector<Date>& samples) {
    ComparisonTable table{series, {}};
    const auto compartment = series_compartment(series);
    const auto& observed = series == Series::recovered  ? real.recovered()
                           : series == Series::deceased ? real.deceased()
                                                        : real.quarantined();
    for (const auto& date : samples) {
        const auto idx = real.index_of(date);
        if (!idx) {
            fail(ErrorKind::out_of_range, "sample date " + format_date(date) + " outside the observed series");
        }
        const auto t = static_cast<double>(days_between(start, date));
        for (const auto* traj : {&uncontrolled, &controlled}) {
            if (!traj->grid().contains(t)) {
                fail(ErrorKind::out_of_range, "sample date " + format_date(date) + " outside a model trajectory");
            }
        }
        if (!table.rows.empty() && days_between(table.rows.back().date, date) <= 0) {
            fail(ErrorKind::invalid_argument, "sample dates must be increasing");
        }
        table.rows.push_back(make_row(date, observed[*idx], uncontrolled.interpolate(t)[compartment],
                                      controlled.interpolate(t)[compartment]));
    }
    return table;
}

inline void write_table_csv(std::ostream& os, const ComparisonTable& table) {
    os << "date,real,uncontrolled,controlled,eta_percent,improvement_percent,direction\n";
    os << std::setprecision(12);
    for (const auto& row : table.rows) {
        os << format_date(row.date) << ',' << row.real << ',' << row.uncontrolled << ',' << row.controlled << ','
           << row.eta << ',' << row.gain.percent << ',' << row.gain.direction << '\n';
    }
}

/// Aligned plain-text layout: Day | Real | uncontrolled | controlled | eta | I.
inline void write_table_text(std::ostream& os, const ComparisonTable& table, const std::string& title) {
    const std::string sym = series_symbol(table.series);
    os << title << '\n';
    os << std::left << std::setw(5) << "Day" << std::right << std::setw(10) << "Real" << std::setw(14)
       << "uncontrolled" << std::setw(12) << "controlled" << std::setw(10) << ("eta_" + sym) << std::setw(10)
       << ("I_" + sym) << '\n';
    for (const auto& row : table.rows) {
        char day[4];
        std::snprintf(day, sizeof day, "%02u", static_cast<unsigned>(row.date.day()));
        os << std::left << std::setw(5) << day << std::right << std::fixed << std::setprecision(0) << std::setw(10)
           << row.real << std::setw(14) << std::round(row.uncontrolled) << std::setw(12) << std::round(row.controlled)
           << std::setw(10) << format_percent(row.eta) << std::setw(10) << format_percent(row.gain.percent) << '\n';
        os.unsetf(std::ios::fixed);
    }
}

} // namespace epicontrol

#endif
