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

#ifndef EPICONTROL_CALENDAR_HPP
#define EPICONTROL_CALENDAR_HPP

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "epicontrol/errors.hpp"

namespace epicontrol {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; anything after the first ten characters (a time of day) is ignored.
[[nodiscard]] inline Date parse_date(std::string_view text) {
    auto digits = [&](std::size_t from, std::size_t count, int& out) {
        out = 0;
        for (std::size_t i = from; i < from + count; ++i) {
            if (text[i] < '0' || text[i] > '9') {
                return false;
            }
            out = out * 10 + (text[i] - '0');
        }
        return true;
    };
    int y = 0;
    int m = 0;
    int d = 0;
    const bool shaped = text.size() >= 10 && text[4] == '-' && text[7] == '-' && digits(0, 4, y) &&
                        digits(5, 2, m) && digits(8, 2, d) && (text.size() == 10 || text[10] == 'T' || text[10] == ' ');
    const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!shaped || !date.ok()) {
        fail(ErrorKind::data, "unparseable date '" + std::string(text) + "'");
    }
    return date;
}

[[nodiscard]] inline std::string format_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

/// Signed whole days from `from` to `to`.
[[nodiscard]] inline long days_between(const Date& from, const Date& to) {
    return (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
}

[[nodiscard]] inline Date add_days(const Date& date, long n) {
    return Date{std::chrono::sys_days{date} + std::chrono::days{n}};
}

} // namespace epicontrol

#endif
