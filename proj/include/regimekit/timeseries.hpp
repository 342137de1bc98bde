#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace regimekit {

/// UTC instant with one-second resolution.
using Instant = std::chrono::sys_seconds;

/// Parse `YYYY-MM-DD` or `YYYY-MM-DD HH:MM:SS` (a `T` separator is accepted too).
std::optional<Instant> parse_instant(std::string_view text);
/// Dates at midnight print as `YYYY-MM-DD`, everything else as `YYYY-MM-DD HH:MM:SS`.
std::string format_instant(Instant t);
Instant make_instant(int year, unsigned month, unsigned day, unsigned hour = 0);

enum class Frequency { Monthly, Hourly, Irregular };

std::string to_string(Frequency f);
Frequency frequency_from_string(std::string_view s);

/// Infer frequency: every stamp first-of-month midnight -> monthly; every stamp on a whole
/// hour with steps that are multiples of an hour -> hourly; else irregular.
Frequency infer_frequency(const std::vector<Instant>& timestamps);

/// Timestamped multivariate observation matrix (rows = time, columns = series).
/// Immutable after construction; the constructor enforces the invariants.
class TimeSeries {
public:
    TimeSeries(std::vector<Instant> timestamps, std::vector<std::string> names,
               Eigen::MatrixXd values, std::optional<Frequency> frequency = std::nullopt);

    const std::vector<Instant>& timestamps() const noexcept { return timestamps_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const Eigen::MatrixXd& values() const noexcept { return values_; }
    Frequency frequency() const noexcept { return frequency_; }

    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }

    /// Column index by name; throws DataError if absent.
    Eigen::Index column_index(std::string_view name) const;
    Eigen::VectorXd column(std::string_view name) const;

    /// Subset / reorder columns.
    TimeSeries select(const std::vector<std::string>& names) const;
    /// Rows [first, first + count).
    TimeSeries slice(Eigen::Index first, Eigen::Index count) const;
    /// Same stamps, new values (e.g. transformed), optionally renamed.
    TimeSeries with_values(Eigen::MatrixXd values, std::vector<std::string> names = {}) const;

    bool operator==(const TimeSeries& other) const;

private:
    std::vector<Instant> timestamps_;
    std::vector<std::string> names_;
    Eigen::MatrixXd values_;
    Frequency frequency_;
};

enum class MissingPolicy { Reject, DropRows };

struct CsvSchema {
    std::string timestamp_column = "date";
    /// Empty means every non-timestamp column.
    std::vector<std::string> value_columns;
    MissingPolicy missing = MissingPolicy::Reject;
    std::optional<Frequency> frequency;
};

/// Load a header-first CSV. Rows are sorted by timestamp; duplicate stamps are rejected.
TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
/// Same parser over in-memory text; `source` only labels error messages.
TimeSeries parse_csv(std::string_view text, const CsvSchema& schema = {},
                     std::string_view source = "<memory>");
/// Write in the schema `load_csv` reads back (timestamp column named `date`).
void write_csv(const TimeSeries& series, const std::filesystem::path& path);
std::string to_csv(const TimeSeries& series);

/// ln(v[t+1] / v[t]) per column, stamped at the later observation.
TimeSeries log_returns(const TimeSeries& series);
/// Element-wise natural log; rejects nonpositive values.
TimeSeries log_levels(const TimeSeries& series);

/// Sample moments. Skewness and kurtosis use the bias-corrected spreadsheet estimators
/// (SKEW / KURT): G1 = n/((n-1)(n-2)) * sum(z^3) and
/// G2 = n(n+1)/((n-1)(n-2)(n-3)) * sum(z^4) - 3(n-1)^2/((n-2)(n-3)), with z standardized
/// by the n-1 standard deviation. Kurtosis is therefore excess kurtosis.
struct StatsSummary {
    std::string name;
    double mean = 0.0;
    double median = 0.0;
    double std_dev = 0.0;
    double kurtosis = 0.0;
    double skewness = 0.0;
    double range = 0.0;
    double minimum = 0.0;
    double maximum = 0.0;
    long count = 0;

    bool operator==(const StatsSummary&) const = default;
};

std::vector<StatsSummary> describe(const TimeSeries& series);
StatsSummary describe_column(const Eigen::Ref<const Eigen::VectorXd>& x, std::string name = {});

enum class AlignPolicy { InnerJoin, ForwardFill };

/// InnerJoin: rows on the common stamps, columns of `a` then `b`.
/// ForwardFill: rows on the stamps of `b`; each takes the latest row of `a` at or before it.
TimeSeries align(const TimeSeries& a, const TimeSeries& b, AlignPolicy policy);

struct EventRow {
    Instant datetime;
    double actual = 0.0;
    double forecast = 0.0;
    double previous = 0.0;
};

/// Scheduled policy announcements with rates stored as fractions (0.0550 for 5.5%).
class EventCalendar {
public:
    explicit EventCalendar(std::vector<EventRow> rows);

    const std::vector<EventRow>& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return rows_.size(); }
    /// Columns actual, forecast, previous, rate_change.
    TimeSeries to_timeseries() const;

private:
    std::vector<EventRow> rows_;
};

/// Columns `datetime`, `actual`, `forecast`, `previous`.
EventCalendar load_event_calendar(const std::filesystem::path& path);
EventCalendar parse_event_calendar(std::string_view text, std::string_view source = "<memory>");

/// Per event: log return of the first price column from the announcement bar to the bar
/// `window_hours` later (column `return`), paired with actual - previous (`rate_change`).
/// Output columns are ordered rate_change, return.
TimeSeries event_returns(const TimeSeries& prices, const EventCalendar& calendar, int window_hours);

}  // namespace regimekit
