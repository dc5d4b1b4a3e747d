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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "epicontrol/metrics.hpp"

using namespace epicontrol;
using Catch::Matchers::WithinAbs;

namespace {

Trajectory<kStateDim> flat(double q, double r, double d, double tf) {
    const TimeGrid grid(0.0, tf, 1.0);
    StateVec x{};
    x[Q] = q;
    x[R] = r;
    x[D] = d;
    return Trajectory<kStateDim>(grid, std::vector<StateVec>(grid.size(), x));
}

} // namespace

TEST_CASE("relative error and improvement on worked values", "[metrics]") {
    CHECK(round_percent(relative_error(209610, 207996)) == 0.77);
    // 31 / 35541 = 0.0872%; half-up gives 0.09, the published table shows 0.08.
    CHECK(round_percent(relative_error(35541, 35510)) == 0.09);
    CHECK(std::abs(round_percent(relative_error(35541, 35510)) - 0.08) <= 0.01 + 1e-12);
    CHECK(relative_error(10, 10) == 0.0);

    const auto up = improvement(100, 112.65);
    CHECK_THAT(up.percent, WithinAbs(12.65, 1e-9));
    CHECK(up.direction == 1);
    const auto down = improvement(100, 92.64);
    CHECK_THAT(down.percent, WithinAbs(7.36, 1e-9));
    CHECK(down.direction == -1);
    const auto big = improvement(10000, 4);
    CHECK(round_percent(big.percent) == 99.96);
    CHECK(big.direction == -1);
    CHECK(improvement(5, 5).direction == 0);
}

TEST_CASE("metrics reject a zero real value", "[metrics]") {
    try {
        (void)relative_error(0.0, 1.0);
        FAIL("expected division_by_zero");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::division_by_zero);
    }
    CHECK_THROWS_AS(improvement(0.0, 1.0), Error);
}

TEST_CASE("metrics are scale invariant", "[metrics]") {
    for (double c : {1e-3, 7.0, 1e6}) {
        CHECK_THAT(relative_error(c * 209610, c * 207996), WithinAbs(relative_error(209610, 207996), 1e-9));
        CHECK_THAT(improvement(c * 300, c * 17).percent, WithinAbs(improvement(300, 17).percent, 1e-9));
    }
}

TEST_CASE("rounding and formatting", "[metrics]") {
    CHECK(round_percent(0.125) == 0.13);
    CHECK(round_percent(1.0 / 3.0) == 0.33);
    CHECK(format_percent(12.6549) == "12.65%");
    CHECK(format_percent(0.0) == "0.00%");
    CHECK(format_percent(99.999) == "100.00%");
}

TEST_CASE("series symbols and compartments", "[metrics]") {
    CHECK(std::string(series_symbol(Series::recovered)) == "R");
    CHECK(std::string(series_symbol(Series::deceased)) == "D");
    CHECK(std::string(series_symbol(Series::quarantined)) == "Q");
    CHECK(series_compartment(Series::recovered) == R);
    CHECK(series_compartment(Series::deceased) == D);
    CHECK(series_compartment(Series::quarantined) == Q);
}

TEST_CASE("build_table samples the series and both trajectories", "[metrics]") {
    const Date start = parse_date("2020-09-01");
    std::vector<Date> dates;
    for (int i = 0; i < 5; ++i) {
        dates.push_back(add_days(start, i));
    }
    const ObservedSeries real(dates, {10, 10, 10, 10, 10}, {20, 20, 20, 20, 20}, {30, 30, 30, 30, 30});

    const auto same = flat(10, 20, 30, 4.0);
    for (Series s : {Series::recovered, Series::deceased, Series::quarantined}) {
        const auto table = build_table(s, real, same, same, start, {dates[0], dates[2], dates[4]});
        REQUIRE(table.rows.size() == 3);
        for (const auto& row : table.rows) {
            CHECK(row.eta == 0.0);
            CHECK(row.gain.percent == 0.0);
            CHECK(row.gain.direction == 0);
        }
    }

    const auto table = build_table(Series::deceased, real, flat(0, 0, 33, 4.0), flat(0, 0, 15, 4.0), start,
                                   {dates[1], dates[3]});
    CHECK_THAT(table.rows[0].eta, WithinAbs(10.0, 1e-12));
    CHECK_THAT(table.rows[0].gain.percent, WithinAbs(50.0, 1e-12));
    CHECK(table.rows[0].gain.direction == -1);

    std::ostringstream csv;
    write_table_csv(csv, table);
    CHECK(csv.str() ==
          "date,real,uncontrolled,controlled,eta_percent,improvement_percent,direction\n"
          "2020-09-02,30,33,15,10,50,-1\n"
          "2020-09-04,30,33,15,10,50,-1\n");

    std::ostringstream text;
    write_table_text(text, table, "D, September 2020");
    const auto out = text.str();
    CHECK(out.find("D, September 2020\n") == 0);
    CHECK(out.find("eta_D") != std::string::npos);
    CHECK(out.find("02") != std::string::npos);
    CHECK(out.find("10.00%") != std::string::npos);
    CHECK(out.find("50.00%") != std::string::npos);
}

TEST_CASE("build_table range and ordering errors", "[metrics]") {
    const Date start = parse_date("2020-09-01");
    const std::vector<Date> dates{start, add_days(start, 1), add_days(start, 2)};
    const ObservedSeries real(dates, {1, 1, 1}, {1, 1, 1}, {1, 1, 1});
    const auto traj = flat(1, 1, 1, 2.0);
    const auto shorter = flat(1, 1, 1, 1.0);
    auto kind = [&](const std::vector<Date>& samples, const Trajectory<kStateDim>& c) {
        try {
            (void)build_table(Series::recovered, real, traj, c, start, samples);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::usage;
    };
    CHECK(kind({add_days(start, 3)}, traj) == ErrorKind::out_of_range);
    CHECK(kind({add_days(start, -1)}, traj) == ErrorKind::out_of_range);
    CHECK(kind({dates[2]}, shorter) == ErrorKind::out_of_range);
    CHECK(kind({dates[1], dates[0]}, traj) == ErrorKind::invalid_argument);
    CHECK(kind({dates[1], dates[1]}, traj) == ErrorKind::invalid_argument);
}
