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

#ifndef EPICONTROL_DATA_IO_HPP
#define EPICONTROL_DATA_IO_HPP

// Ingestion of the Protezione Civile regional feed (dpc-covid19-ita-regioni.csv)
// and aggregation into national daily series.
//
// Column mapping: data -> date, codice_regione -> region, totale_positivi -> Q,
// dimessi_guariti -> R, deceduti -> D. ricoverati_con_sintomi is carried along.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "epicontrol/calendar.hpp"
#include "epicontrol/errors.hpp"

namespace epicontrol {

struct RegionalRecord {
    Date date{};
    int region_code = 0;
    std::string region_name;
    std::int64_t hospitalized_with_symptoms = 0;
    std::int64_t total_positives = 0;
    std::int64_t recovered = 0;
    std::int64_t deceased = 0;

    friend bool operator==(const RegionalRecord&, const RegionalRecord&) = default;
};

struct RowError {
    std::size_t row = 0; ///< 1-based line number in the file, header is row 1
    std::string reason;
};

struct ParsedFeed {
    std::vector<RegionalRecord> records;
    std::vector<RowError> rejected;
};

/// Daily national totals over a gap-free window.
class ObservedSeries {
public:
    ObservedSeries() = default;

    ObservedSeries(std::vector<Date> dates, std::vector<double> q, std::vector<double> r, std::vector<double> d)
        : dates_(std::move(dates)), q_(std::move(q)), r_(std::move(r)), d_(std::move(d)) {
        require(q_.size() == dates_.size() && r_.size() == dates_.size() && d_.size() == dates_.size(),
                ErrorKind::data, "observed series columns differ in length");
        for (std::size_t k = 1; k < dates_.size(); ++k) {
            require(days_between(dates_[k - 1], dates_[k]) == 1, ErrorKind::data,
                    "observed series dates must be consecutive days (" + format_date(dates_[k - 1]) + " -> " +
                        format_date(dates_[k]) + ")");
        }
    }

    [[nodiscard]] std::size_t size() const noexcept { return dates_.size(); }
    [[nodiscard]] bool empty() const noexcept { return dates_.empty(); }
    [[nodiscard]] const std::vector<Date>& dates() const noexcept { return dates_; }
    [[nodiscard]] const std::vector<double>& quarantined() const noexcept { return q_; }
    [[nodiscard]] const std::vector<double>& recovered() const noexcept { return r_; }
    [[nodiscard]] const std::vector<double>& deceased() const noexcept { return d_; }

    /// Position of `date` in the series, if present.
    [[nodiscard]] std::optional<std::size_t> index_of(const Date& date) const {
        if (dates_.empty()) {
            return std::nullopt;
        }
        const long offset = days_between(dates_.front(), date);
        if (offset < 0 || static_cast<std::size_t>(offset) >= dates_.size()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(offset);
    }

private:
    std::vector<Date> dates_;
    std::vector<double> q_;
    std::vector<double> r_;
    std::vector<double> d_;
};

namespace detail {

// RFC 4180 style reader: quoted fields may hold commas, doubled quotes and newlines.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Reads the next record into `fields`; returns false at end of input.
    bool next(std::vector<std::string>& fields) {
        fields.clear();
        if (in_.peek() == std::char_traits<char>::eof()) {
            return false;
        }
        ++line_;
        start_line_ = line_;
        std::string field;
        bool quoted = false;
        bool any = false;
        for (int c = in_.get(); c != std::char_traits<char>::eof(); c = in_.get()) {
            any = true;
            const char ch = static_cast<char>(c);
            if (quoted) {
                if (ch == '"') {
                    if (in_.peek() == '"') {
                        field.push_back('"');
                        in_.get();
                    } else {
                        quoted = false;
                    }
                } else {
                    if (ch == '\n') {
                        ++line_;
                    }
                    field.push_back(ch);
                }
            } else if (ch == '"') {
                quoted = true;
            } else if (ch == ',') {
                fields.push_back(std::move(field));
                field.clear();
            } else if (ch == '\n') {
                break;
            } else if (ch != '\r') {
                field.push_back(ch);
            }
        }
        if (any) {
            fields.push_back(std::move(field));
        }
        return any;
    }

    [[nodiscard]] std::size_t line() const noexcept { return start_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 0;
    std::size_t start_line_ = 0;
};

[[nodiscard]] inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

template <typename Int>
[[nodiscard]] bool parse_int(std::string_view s, Int& out) {
    s = trim(s);
    if (s.empty()) {
        return false;
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

} // namespace detail

/// Parses the regional feed. Extra columns are ignored; rows whose mandatory
/// fields do not parse are collected in `rejected` with their line numbers.
[[nodiscard]] inline ParsedFeed parse_regional_csv(std::istream& in) {
    detail::CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) {
        fail(ErrorKind::data, "empty input: no header row");
    }
    if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        fields[0].erase(0, 3);
    }

    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        column.emplace(std::string(detail::trim(fields[i])), i);
    }
    const std::vector<std::string> mandatory{"data",           "codice_regione",  "ricoverati_con_sintomi",
                                             "totale_positivi", "dimessi_guariti", "deceduti"};
    std::vector<std::string> missing;
    for (const auto& name : mandatory) {
        if (!column.contains(name)) {
            missing.push_back(name);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& name : missing) {
            list += (list.empty() ? "" : ", ") + name;
        }
        fail(ErrorKind::data, "malformed header: missing column(s) " + list);
    }
    const std::size_t c_date = column["data"];
    const std::size_t c_code = column["codice_regione"];
    const std::size_t c_hosp = column["ricoverati_con_sintomi"];
    const std::size_t c_pos = column["totale_positivi"];
    const std::size_t c_rec = column["dimessi_guariti"];
    const std::size_t c_dead = column["deceduti"];
    const auto c_name = column.find("denominazione_regione");
    const std::size_t needed = std::max({c_date, c_code, c_hosp, c_pos, c_rec, c_dead}) + 1;

    ParsedFeed out;
    while (reader.next(fields)) {
        if (fields.size() == 1 && detail::trim(fields[0]).empty()) {
            continue;
        }
        const std::size_t row = reader.line();
        if (fields.size() < needed) {
            out.rejected.push_back({row, "too few fields"});
            continue;
        }
        RegionalRecord rec;
        try {
            rec.date = parse_date(detail::trim(fields[c_date]));
        } catch (const Error&) {
            out.rejected.push_back({row, "bad date '" + fields[c_date] + "'"});
            continue;
        }
        struct Count {
            std::size_t col;
            std::int64_t* target;
            const char* name;
        };
        const Count counts[] = {{c_hosp, &rec.hospitalized_with_symptoms, "ricoverati_con_sintomi"},
                                {c_pos, &rec.total_positives, "totale_positivi"},
                                {c_rec, &rec.recovered, "dimessi_guariti"},
                                {c_dead, &rec.deceased, "deceduti"}};
        std::string problem;
        if (!detail::parse_int(fields[c_code], rec.region_code)) {
            problem = "bad codice_regione";
        }
        for (const auto& c : counts) {
            if (problem.empty() && (!detail::parse_int(fields[c.col], *c.target) || *c.target < 0)) {
                problem = std::string("bad ") + c.name;
            }
        }
        if (!problem.empty()) {
            out.rejected.push_back({row, problem});
            continue;
        }
        if (c_name != column.end() && c_name->second < fields.size()) {
            rec.region_name = std::string(detail::trim(fields[c_name->second]));
        }
        out.records.push_back(std::move(rec));
    }
    return out;
}

/// Summary of rejected rows: the count and the first few line numbers.
[[nodiscard]] inline std::string describe_rejections(const std::vector<RowError>& rejected, std::size_t shown = 5) {
    std::ostringstream os;
    os << rejected.size() << " malformed row(s)";
    for (std::size_t i = 0; i < std::min(shown, rejected.size()); ++i) {
        os << (i == 0 ? ": " : "; ") << "row " << rejected[i].row << " (" << rejected[i].reason << ")";
    }
    if (rejected.size() > shown) {
        os << "; ...";
    }
    return os.str();
}

/// Writes records with the feed's mandatory columns, in the feed's column names.
inline void write_regional_csv(std::ostream& os, const std::vector<RegionalRecord>& records) {
    os << "data,codice_regione,denominazione_regione,ricoverati_con_sintomi,totale_positivi,dimessi_guariti,deceduti\n";
    for (const auto& r : records) {
        os << format_date(r.date) << "T17:00:00," << r.region_code << ',';
        if (r.region_name.find_first_of(",\"\n") != std::string::npos) {
            os << '"';
            for (char c : r.region_name) {
                os << c;
                if (c == '"') {
                    os << '"';
                }
            }
            os << '"';
        } else {
            os << r.region_name;
        }
        os << ',' << r.hospitalized_with_symptoms << ',' << r.total_positives << ',' << r.recovered << ','
           << r.deceased << '\n';
    }
}

struct DateWindow {
    Date first{};
    Date last{};

    [[nodiscard]] bool valid() const { return first.ok() && last.ok() && days_between(first, last) >= 0; }
    [[nodiscard]] std::size_t days() const { return static_cast<std::size_t>(days_between(first, last)) + 1; }
    [[nodiscard]] bool contains(const Date& d) const {
        return days_between(first, d) >= 0 && days_between(d, last) >= 0;
    }
};

/// Per-day sums over all regions, restricted to the window. Every day of the
/// window must be present and no (day, region) pair may repeat.
[[nodiscard]] inline ObservedSeries aggregate_national(const std::vector<RegionalRecord>& records,
                                                       const DateWindow& window) {
    require(window.valid(), ErrorKind::usage, "empty or inverted date window");
    const std::size_t n = window.days();
    std::vector<double> q(n, 0.0);
    std::vector<double> r(n, 0.0);
    std::vector<double> d(n, 0.0);
    std::vector<bool> seen(n, false);
    std::set<std::pair<long, int>> keys;

    for (const auto& rec : records) {
        if (!window.contains(rec.date)) {
            continue;
        }
        const long offset = days_between(window.first, rec.date);
        if (!keys.emplace(offset, rec.region_code).second) {
            fail(ErrorKind::data, "duplicate record for region " + std::to_string(rec.region_code) + " on " +
                                      format_date(rec.date));
        }
        const auto k = static_cast<std::size_t>(offset);
        q[k] += static_cast<double>(rec.total_positives);
        r[k] += static_cast<double>(rec.recovered);
        d[k] += static_cast<double>(rec.deceased);
        seen[k] = true;
    }

    std::vector<std::string> gaps;
    for (std::size_t k = 0; k < n; ++k) {
        if (!seen[k]) {
            gaps.push_back(format_date(add_days(window.first, static_cast<long>(k))));
        }
    }
    if (!gaps.empty()) {
        std::string list;
        for (std::size_t i = 0; i < gaps.size(); ++i) {
            if (i == 10) {
                list += ", ...";
                break;
            }
            list += (i == 0 ? "" : ", ") + gaps[i];
        }
        fail(ErrorKind::data, std::to_string(gaps.size()) + " missing day(s) in window: " + list);
    }

    std::vector<Date> dates(n);
    for (std::size_t k = 0; k < n; ++k) {
        dates[k] = add_days(window.first, static_cast<long>(k));
    }
    return ObservedSeries(std::move(dates), std::move(q), std::move(r), std::move(d));
}

/// National series as CSV: date,Q,R,D.
inline void write_series_csv(std::ostream& os, const ObservedSeries& series) {
    os << "date,Q,R,D\n";
    os.precision(15);
    for (std::size_t k = 0; k < series.size(); ++k) {
        os << format_date(series.dates()[k]) << ',' << series.quarantined()[k] << ',' << series.recovered()[k] << ','
           << series.deceased()[k] << '\n';
    }
}

[[nodiscard]] inline ObservedSeries read_series_csv(std::istream& in) {
    detail::CsvReader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) {
        fail(ErrorKind::data, "empty national series file");
    }
    if (fields.size() < 4 || detail::trim(fields[0]) != "date" || detail::trim(fields[1]) != "Q" ||
        detail::trim(fields[2]) != "R" || detail::trim(fields[3]) != "D") {
        fail(ErrorKind::data, "national series header must be date,Q,R,D");
    }
    std::vector<Date> dates;
    std::vector<double> q;
    std::vector<double> r;
    std::vector<double> d;
    while (reader.next(fields)) {
        if (fields.size() == 1 && detail::trim(fields[0]).empty()) {
            continue;
        }
        if (fields.size() < 4) {
            fail(ErrorKind::data, "national series row " + std::to_string(reader.line()) + " has too few fields");
        }
        dates.push_back(parse_date(detail::trim(fields[0])));
        for (auto [col, target] : {std::pair{1, &q}, std::pair{2, &r}, std::pair{3, &d}}) {
            try {
                std::size_t used = 0;
                const std::string text(detail::trim(fields[col]));
                target->push_back(std::stod(text, &used));
                if (used != text.size()) {
                    throw std::invalid_argument(text);
                }
            } catch (const std::logic_error&) {
                fail(ErrorKind::data, "national series row " + std::to_string(reader.line()) + " has a bad number");
            }
        }
    }
    return ObservedSeries(std::move(dates), std::move(q), std::move(r), std::move(d));
}

} // namespace epicontrol

#endif
