#include "regimekit/timeseries.hpp"

#include "regimekit/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace regimekit {

namespace {

using namespace std::chrono;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        auto line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        start = pos + 1;
    }
    return lines;
}

bool parse_uint(std::string_view s, unsigned& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool is_missing_token(std::string_view s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == ".";
}

std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_number(double v) {
    char buf[64];
    // Shortest representation that round-trips.
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::optional<Instant> parse_instant(std::string_view text) {
    text = trim(text);
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
    unsigned y = 0, m = 0, d = 0, hh = 0, mm = 0, ss = 0;
    if (!parse_uint(text.substr(0, 4), y) || !parse_uint(text.substr(5, 2), m) ||
        !parse_uint(text.substr(8, 2), d))
        return std::nullopt;
    if (text.size() > 10) {
        if (text.size() != 19 || (text[10] != ' ' && text[10] != 'T') || text[13] != ':' || text[16] != ':')
            return std::nullopt;
        if (!parse_uint(text.substr(11, 2), hh) || !parse_uint(text.substr(14, 2), mm) ||
            !parse_uint(text.substr(17, 2), ss))
            return std::nullopt;
        if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    }
    const year_month_day ymd{year{static_cast<int>(y)}, month{m}, day{d}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_instant(Instant t) {
    const auto day_start = floor<days>(t);
    const year_month_day ymd{day_start};
    const auto tod = t - day_start;
    const auto h = duration_cast<hours>(tod).count();
    const auto m = duration_cast<minutes>(tod).count() % 60;
    const auto s = tod.count() % 60;
    char buf[64];
    if (tod.count() == 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02lld:%02lld:%02lld", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<long long>(h), static_cast<long long>(m), static_cast<long long>(s));
    }
    return buf;
}

Instant make_instant(int y, unsigned m, unsigned d, unsigned h) {
    return sys_days{year{y} / month{m} / day{d}} + hours{h};
}

std::string to_string(Frequency f) {
    switch (f) {
        case Frequency::Monthly: return "monthly";
        case Frequency::Hourly: return "hourly";
        case Frequency::Irregular: return "irregular";
    }
    return "irregular";
}

Frequency frequency_from_string(std::string_view s) {
    if (s == "monthly") return Frequency::Monthly;
    if (s == "hourly") return Frequency::Hourly;
    if (s == "irregular") return Frequency::Irregular;
    throw DataError("unknown frequency '" + std::string(s) + "'");
}

Frequency infer_frequency(const std::vector<Instant>& ts) {
    if (ts.empty()) return Frequency::Irregular;
    const bool monthly = std::all_of(ts.begin(), ts.end(), [](Instant t) {
        const auto d = floor<days>(t);
        return t == d && year_month_day{d}.day() == day{1};
    });
    if (monthly) return Frequency::Monthly;
    const bool on_hours = std::all_of(ts.begin(), ts.end(), [](Instant t) {
        return t.time_since_epoch().count() % 3600 == 0;
    });
    if (on_hours) return Frequency::Hourly;
    return Frequency::Irregular;
}

// ---------------------------------------------------------------------------
// TimeSeries

TimeSeries::TimeSeries(std::vector<Instant> timestamps, std::vector<std::string> names,
                       Eigen::MatrixXd values, std::optional<Frequency> frequency)
    : timestamps_(std::move(timestamps)), names_(std::move(names)), values_(std::move(values)) {
    if (values_.cols() < 1) throw DataError("time series needs at least one column");
    if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
        throw DataError("column name count does not match value columns");
    if (static_cast<Eigen::Index>(timestamps_.size()) != values_.rows())
        throw DataError("timestamp count does not match value rows");
    for (std::size_t i = 1; i < timestamps_.size(); ++i) {
        if (!(timestamps_[i - 1] < timestamps_[i]))
            throw DataError("timestamps must be strictly increasing", static_cast<long>(i));
    }
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        for (Eigen::Index i = 0; i < values_.rows(); ++i) {
            if (!std::isfinite(values_(i, j)))
                throw DataError("non-finite value", static_cast<long>(i), names_[static_cast<std::size_t>(j)]);
        }
    }
    frequency_ = frequency.value_or(infer_frequency(timestamps_));
}

Eigen::Index TimeSeries::column_index(std::string_view name) const {
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (names_[j] == name) return static_cast<Eigen::Index>(j);
    }
    throw DataError("no column named '" + std::string(name) + "'");
}

Eigen::VectorXd TimeSeries::column(std::string_view name) const { return values_.col(column_index(name)); }

TimeSeries TimeSeries::select(const std::vector<std::string>& names) const {
    Eigen::MatrixXd out(values_.rows(), static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = values_.col(column_index(names[j]));
    return TimeSeries(timestamps_, names, std::move(out), frequency_);
}

TimeSeries TimeSeries::slice(Eigen::Index first, Eigen::Index count) const {
    if (first < 0 || count < 0 || first + count > rows()) throw DataError("slice out of range");
    std::vector<Instant> ts(timestamps_.begin() + first, timestamps_.begin() + first + count);
    return TimeSeries(std::move(ts), names_, values_.middleRows(first, count), frequency_);
}

TimeSeries TimeSeries::with_values(Eigen::MatrixXd values, std::vector<std::string> names) const {
    if (names.empty()) names = names_;
    return TimeSeries(timestamps_, std::move(names), std::move(values), frequency_);
}

bool TimeSeries::operator==(const TimeSeries& other) const {
    return timestamps_ == other.timestamps_ && names_ == other.names_ && frequency_ == other.frequency_ &&
           values_.rows() == other.values_.rows() && values_.cols() == other.values_.cols() &&
           values_ == other.values_;
}

// ---------------------------------------------------------------------------
// CSV

TimeSeries parse_csv(std::string_view text, const CsvSchema& schema, std::string_view source) {
    const auto lines = split_lines(text);
    std::size_t header_line = 0;
    while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
    if (header_line == lines.size()) throw DataError(std::string(source) + ": missing header row");
    const auto header = split_fields(lines[header_line]);

    long ts_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == schema.timestamp_column) ts_col = static_cast<long>(j);
    }
    if (ts_col < 0) throw DataError(std::string(source) + ": no timestamp column '" + schema.timestamp_column + "'");

    std::vector<std::size_t> value_cols;
    std::vector<std::string> names;
    if (schema.value_columns.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (static_cast<long>(j) != ts_col) {
                value_cols.push_back(j);
                names.emplace_back(header[j]);
            }
        }
    } else {
        for (const auto& want : schema.value_columns) {
            auto it = std::find(header.begin(), header.end(), want);
            if (it == header.end()) throw DataError(std::string(source) + ": no column named '" + want + "'");
            value_cols.push_back(static_cast<std::size_t>(it - header.begin()));
            names.push_back(want);
        }
    }
    if (value_cols.empty()) throw DataError(std::string(source) + ": no value columns");

    struct Row {
        Instant t;
        std::vector<double> v;
        long line;
    };
    std::vector<Row> rows;
    for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
        if (trim(lines[li]).empty()) continue;
        const auto fields = split_fields(lines[li]);
        const long row_no = static_cast<long>(li + 1);  // 1-based line number in the file
        if (fields.size() != header.size())
            throw DataError(std::string(source) + ": expected " + std::to_string(header.size()) + " fields, got " +
                                std::to_string(fields.size()),
                            row_no);
        auto t = parse_instant(fields[static_cast<std::size_t>(ts_col)]);
        if (!t) throw DataError(std::string(source) + ": unparseable timestamp '" +
                                    std::string(fields[static_cast<std::size_t>(ts_col)]) + "'",
                                row_no, schema.timestamp_column);
        Row row{*t, {}, row_no};
        bool missing = false;
        for (std::size_t j = 0; j < value_cols.size(); ++j) {
            const auto cell = fields[value_cols[j]];
            if (is_missing_token(cell)) {
                if (schema.missing == MissingPolicy::Reject)
                    throw DataError(std::string(source) + ": missing value", row_no, names[j]);
                missing = true;
                break;
            }
            auto v = parse_number(cell);
            if (!v) throw DataError(std::string(source) + ": unparseable number '" + std::string(cell) + "'", row_no, names[j]);
            row.v.push_back(*v);
        }
        if (!missing) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(std::string(source) + ": no observations");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].t == rows[i - 1].t)
            throw DataError(std::string(source) + ": duplicate timestamp " + format_instant(rows[i].t), rows[i].line,
                            schema.timestamp_column);
    }

    std::vector<Instant> ts;
    Eigen::MatrixXd values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ts.push_back(rows[i].t);
        for (std::size_t j = 0; j < names.size(); ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i].v[j];
    }
    return TimeSeries(std::move(ts), std::move(names), std::move(values), schema.frequency);
}

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    return parse_csv(read_file(path), schema, path.string());
}

std::string to_csv(const TimeSeries& series) {
    std::string out = "date";
    for (const auto& n : series.names()) out += "," + n;
    out += "\n";
    for (Eigen::Index i = 0; i < series.rows(); ++i) {
        out += format_instant(series.timestamps()[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < series.cols(); ++j) out += "," + format_number(series.values()(i, j));
        out += "\n";
    }
    return out;
}

void write_csv(const TimeSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_csv(series);
}

// ---------------------------------------------------------------------------
// Transforms

TimeSeries log_returns(const TimeSeries& series) {
    const auto& v = series.values();
    if (v.rows() < 2) throw DataError("log returns need at least two observations");
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            if (!(v(i, j) > 0.0))
                throw DataError("log returns need strictly positive values", static_cast<long>(i),
                                series.names()[static_cast<std::size_t>(j)]);
        }
    }
    Eigen::MatrixXd out(v.rows() - 1, v.cols());
    for (Eigen::Index i = 1; i < v.rows(); ++i) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) out(i - 1, j) = std::log(v(i, j) / v(i - 1, j));
    }
    std::vector<Instant> ts(series.timestamps().begin() + 1, series.timestamps().end());
    return TimeSeries(std::move(ts), series.names(), std::move(out), series.frequency());
}

TimeSeries log_levels(const TimeSeries& series) {
    const auto& v = series.values();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            if (!(v(i, j) > 0.0))
                throw DataError("log transform needs strictly positive values", static_cast<long>(i),
                                series.names()[static_cast<std::size_t>(j)]);
        }
    }
    return series.with_values(v.array().log().matrix());
}

// ---------------------------------------------------------------------------
// Descriptive statistics

StatsSummary describe_column(const Eigen::Ref<const Eigen::VectorXd>& x, std::string name) {
    const auto n = x.size();
    if (n < 2) throw DataError("dispersion undefined for fewer than two observations", -1, name);
    StatsSummary s;
    s.name = std::move(name);
    s.count = static_cast<long>(n);
    s.mean = x.mean();
    s.minimum = x.minCoeff();
    s.maximum = x.maxCoeff();
    s.range = s.maximum - s.minimum;

    std::vector<double> sorted(x.data(), x.data() + n);
    std::sort(sorted.begin(), sorted.end());
    const auto mid = static_cast<std::size_t>(n / 2);
    s.median = (n % 2 == 1) ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);

    const double dn = static_cast<double>(n);
    const double m2 = (x.array() - s.mean).square().sum();
    s.std_dev = std::sqrt(m2 / (dn - 1.0));

    if (n >= 3 && s.std_dev > 0.0) {
        const auto z = (x.array() - s.mean) / s.std_dev;
        s.skewness = dn / ((dn - 1.0) * (dn - 2.0)) * z.cube().sum();
        if (n >= 4) {
            s.kurtosis = dn * (dn + 1.0) / ((dn - 1.0) * (dn - 2.0) * (dn - 3.0)) * z.square().square().sum() -
                         3.0 * (dn - 1.0) * (dn - 1.0) / ((dn - 2.0) * (dn - 3.0));
        } else {
            s.kurtosis = std::numeric_limits<double>::quiet_NaN();
        }
    } else {
        s.skewness = std::numeric_limits<double>::quiet_NaN();
        s.kurtosis = std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

std::vector<StatsSummary> describe(const TimeSeries& series) {
    std::vector<StatsSummary> out;
    for (Eigen::Index j = 0; j < series.cols(); ++j)
        out.push_back(describe_column(series.values().col(j), series.names()[static_cast<std::size_t>(j)]));
    return out;
}

// ---------------------------------------------------------------------------
// Alignment

TimeSeries align(const TimeSeries& a, const TimeSeries& b, AlignPolicy policy) {
    std::vector<std::string> names = a.names();
    names.insert(names.end(), b.names().begin(), b.names().end());
    const auto ka = a.cols();
    const auto kb = b.cols();

    if (policy == AlignPolicy::InnerJoin) {
        if (a.frequency() != b.frequency())
            throw DataError("inner join requires identical frequencies (" + to_string(a.frequency()) + " vs " +
                            to_string(b.frequency()) + "); use forward-fill");
        std::vector<Instant> ts;
        std::vector<std::pair<Eigen::Index, Eigen::Index>> idx;
        std::size_t i = 0, j = 0;
        const auto& ta = a.timestamps();
        const auto& tb = b.timestamps();
        while (i < ta.size() && j < tb.size()) {
            if (ta[i] < tb[j]) ++i;
            else if (tb[j] < ta[i]) ++j;
            else {
                ts.push_back(ta[i]);
                idx.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                ++i;
                ++j;
            }
        }
        if (ts.empty()) throw DataError("inner join: timestamp sets do not intersect");
        Eigen::MatrixXd v(static_cast<Eigen::Index>(ts.size()), ka + kb);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const auto row = static_cast<Eigen::Index>(r);
            v.row(row).head(ka) = a.values().row(idx[r].first);
            v.row(row).tail(kb) = b.values().row(idx[r].second);
        }
        return TimeSeries(std::move(ts), std::move(names), std::move(v), a.frequency());
    }

    const auto& ta = a.timestamps();
    const auto& tb = b.timestamps();
    Eigen::MatrixXd v(b.rows(), ka + kb);
    std::size_t i = 0;
    for (std::size_t r = 0; r < tb.size(); ++r) {
        while (i + 1 < ta.size() && !(tb[r] < ta[i + 1])) ++i;
        if (tb[r] < ta[0])
            throw DataError("forward fill: no observation at or before " + format_instant(tb[r]), static_cast<long>(r));
        const auto row = static_cast<Eigen::Index>(r);
        v.row(row).head(ka) = a.values().row(static_cast<Eigen::Index>(i));
        v.row(row).tail(kb) = b.values().row(row);
    }
    return TimeSeries(tb, std::move(names), std::move(v), b.frequency());
}

// ---------------------------------------------------------------------------
// Event calendars

EventCalendar::EventCalendar(std::vector<EventRow> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw DataError("event calendar is empty");
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto& r = rows_[i];
        if (!std::isfinite(r.actual) || !std::isfinite(r.forecast) || !std::isfinite(r.previous))
            throw DataError("event rates must be finite", static_cast<long>(i));
        if (i > 0 && !(rows_[i - 1].datetime < r.datetime))
            throw DataError("event datetimes must be strictly increasing", static_cast<long>(i));
    }
}

TimeSeries EventCalendar::to_timeseries() const {
    std::vector<Instant> ts;
    Eigen::MatrixXd v(static_cast<Eigen::Index>(rows_.size()), 4);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        ts.push_back(rows_[i].datetime);
        v(r, 0) = rows_[i].actual;
        v(r, 1) = rows_[i].forecast;
        v(r, 2) = rows_[i].previous;
        v(r, 3) = rows_[i].actual - rows_[i].previous;
    }
    return TimeSeries(std::move(ts), {"actual", "forecast", "previous", "rate_change"}, std::move(v),
                      Frequency::Irregular);
}

EventCalendar parse_event_calendar(std::string_view text, std::string_view source) {
    CsvSchema schema;
    schema.timestamp_column = "datetime";
    schema.value_columns = {"actual", "forecast", "previous"};
    schema.frequency = Frequency::Irregular;
    const auto ts = parse_csv(text, schema, source);
    std::vector<EventRow> rows;
    for (Eigen::Index i = 0; i < ts.rows(); ++i) {
        rows.push_back({ts.timestamps()[static_cast<std::size_t>(i)], ts.values()(i, 0), ts.values()(i, 1),
                        ts.values()(i, 2)});
    }
    return EventCalendar(std::move(rows));
}

EventCalendar load_event_calendar(const std::filesystem::path& path) {
    return parse_event_calendar(read_file(path), path.string());
}

TimeSeries event_returns(const TimeSeries& prices, const EventCalendar& calendar, int window_hours) {
    if (window_hours < 1) throw DataError("event window must be at least one hour");
    if (prices.frequency() != Frequency::Hourly) throw DataError("event returns need hourly prices");
    const auto& ts = prices.timestamps();
    const auto lookup = [&](Instant t) -> std::optional<Eigen::Index> {
        auto it = std::lower_bound(ts.begin(), ts.end(), t);
        if (it == ts.end() || *it != t) return std::nullopt;
        return static_cast<Eigen::Index>(it - ts.begin());
    };

    std::vector<std::string> missing;
    std::vector<Instant> out_ts;
    Eigen::MatrixXd out(static_cast<Eigen::Index>(calendar.size()), 2);
    for (std::size_t e = 0; e < calendar.size(); ++e) {
        const auto& ev = calendar.rows()[e];
        const auto start = lookup(ev.datetime);
        const auto end = lookup(ev.datetime + hours{window_hours});
        if (!start || !end) {
            missing.push_back(format_instant(ev.datetime));
            continue;
        }
        const double p0 = prices.values()(*start, 0);
        const double p1 = prices.values()(*end, 0);
        if (!(p0 > 0.0 && p1 > 0.0)) throw DataError("nonpositive price at event " + format_instant(ev.datetime));
        const auto row = static_cast<Eigen::Index>(out_ts.size());
        out(row, 0) = ev.actual - ev.previous;
        out(row, 1) = std::log(p1 / p0);
        out_ts.push_back(ev.datetime);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw DataError("no matching price bar for event(s): " + list);
    }
    return TimeSeries(std::move(out_ts), {"rate_change", "return"}, out.topRows(static_cast<Eigen::Index>(calendar.size())),
                      Frequency::Irregular);
}

}  // namespace regimekit
