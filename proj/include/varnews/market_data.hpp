#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace varnews::market {

/// Raw prices and volumes of one instrument. Timestamps are epoch seconds, strictly increasing.
struct TickSeries {
    std::string instrument_id;
    std::vector<std::int64_t> timestamps;
    std::vector<double> prices;
    std::vector<double> volumes;

    [[nodiscard]] std::size_t size() const noexcept { return timestamps.size(); }
};

/// Fixed-interval bars. `timestamps` and `volumes` hold one entry per bar; `log_returns` holds
/// one entry per bar after the first, so log_returns[i] is the return of bar i + 1. The first
/// bar anchors the first return and supplies the lagged volume of bar 1.
struct BarSeries {
    std::int64_t interval_seconds = 0;
    std::vector<std::int64_t> timestamps;
    std::vector<double> volumes;
    std::vector<double> log_returns;

    [[nodiscard]] std::size_t bars() const noexcept { return timestamps.size(); }
    /// Timestamps of bars that carry a return (bars 1..n-1).
    [[nodiscard]] std::span<const std::int64_t> return_timestamps() const {
        return std::span<const std::int64_t>(timestamps).subspan(1);
    }

    bool operator==(const BarSeries&) const = default;
};

struct SummaryStats {
    std::size_t n = 0;
    double min = 0, max = 0, mean = 0, std_dev = 0;
    double skewness = 0, kurtosis = 0;
    double quantile_1pct = 0;
    double jarque_bera = 0;
};

/// Validates the invariants of a tick series. Throws ValidationError.
void validate(const TickSeries& ticks);

/// Reads a tick CSV with header `timestamp,price,volume`. Timestamps are epoch seconds or
/// ISO-8601 (`YYYY-MM-DDTHH:MM:SS[Z]`, UTC). Errors carry the file name and line number.
[[nodiscard]] TickSeries load_ticks(const std::filesystem::path& path);
[[nodiscard]] TickSeries parse_ticks(std::string_view csv_text, std::string instrument_id,
                                     const std::string& source_name = "<memory>");

/// Parses `YYYY-MM-DDTHH:MM:SS[Z]` or a plain integer as epoch seconds.
[[nodiscard]] std::int64_t parse_timestamp(std::string_view text);

/// Bars close at epoch multiples of `interval_seconds` and cover (t - interval, t]. Bars with no
/// ticks (session breaks) are skipped, so returns span the break.
[[nodiscard]] BarSeries resample(const TickSeries& ticks, std::int64_t interval_seconds);

/// Coarsens an existing bar series: returns add up, volumes add up.
[[nodiscard]] BarSeries resample(const BarSeries& bars, std::int64_t interval_seconds);

/// Cross-sectional mean of returns and sum of volumes over members on an identical grid.
[[nodiscard]] BarSeries aggregate_sector(std::span<const BarSeries> members);

/// Splits members into those covering the full union grid and those with gaps.
struct GridPartition {
    std::vector<std::size_t> complete;
    std::vector<std::size_t> with_gaps;
};
[[nodiscard]] GridPartition partition_by_grid(std::span<const BarSeries> members);

/// Moments use 1/n central moments; std_dev is the n-1 sample deviation; kurtosis is non-excess.
[[nodiscard]] SummaryStats summary_stats(std::span<const double> returns);

/// `instrument_id,sector` mapping file.
[[nodiscard]] std::map<std::string, std::string> load_sector_map(const std::filesystem::path& path);

}  // namespace varnews::market
