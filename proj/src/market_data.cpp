#include "varnews/market_data.hpp"

#include "varnews/common.hpp"
#include "varnews/csv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace varnews::market {

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a > 0) == (b > 0))) ++q;
    return q;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
    const std::string t = trim(text);
    std::int64_t epoch = 0;
    if (csv::parse_int(t, epoch)) return epoch;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep = 0;
    int consumed = 0;
    if (std::sscanf(t.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &s, &consumed) != 7 ||
        (sep != 'T' && sep != ' ')) {
        throw ValidationError("unparseable timestamp '" + t + "'");
    }
    const std::string rest = t.substr(static_cast<std::size_t>(consumed));
    if (!(rest.empty() || rest == "Z" || rest == "+00:00")) {
        throw ValidationError("unsupported timestamp suffix '" + rest + "' (UTC only)");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
        throw ValidationError("timestamp field out of range '" + t + "'");
    }
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 + h * 3600 + mi * 60 + s;
}

void validate(const TickSeries& ticks) {
    const std::size_t n = ticks.timestamps.size();
    if (ticks.prices.size() != n || ticks.volumes.size() != n) {
        throw ValidationError("tick series '" + ticks.instrument_id + "': column lengths differ");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(ticks.prices[i] > 0.0) || !std::isfinite(ticks.prices[i])) {
            throw ValidationError("tick series '" + ticks.instrument_id + "': non-positive price at row " +
                                  std::to_string(i));
        }
        if (!(ticks.volumes[i] >= 0.0) || !std::isfinite(ticks.volumes[i])) {
            throw ValidationError("tick series '" + ticks.instrument_id + "': negative volume at row " +
                                  std::to_string(i));
        }
        if (i > 0 && ticks.timestamps[i] <= ticks.timestamps[i - 1]) {
            throw ValidationError("tick series '" + ticks.instrument_id + "': timestamps not strictly increasing at row " +
                                  std::to_string(i));
        }
    }
}

TickSeries parse_ticks(std::string_view csv_text, std::string instrument_id, const std::string& source_name) {
    const auto records = csv::parse(csv_text, source_name);
    if (records.empty()) throw ValidationError(source_name + ": empty file");
    const auto& header = records.front().fields;
    if (header.size() != 3 || lower(trim(header[0])) != "timestamp" || lower(trim(header[1])) != "price" ||
        lower(trim(header[2])) != "volume") {
        throw ValidationError(source_name + ":1: expected header 'timestamp,price,volume'");
    }
    TickSeries out;
    out.instrument_id = std::move(instrument_id);
    out.timestamps.reserve(records.size() - 1);
    out.prices.reserve(records.size() - 1);
    out.volumes.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        auto where = [&] { return source_name + ":" + std::to_string(rec.line) + ": "; };
        if (rec.fields.size() != 3) throw ValidationError(where() + "expected 3 fields, got " + std::to_string(rec.fields.size()));
        std::int64_t ts = 0;
        try {
            ts = parse_timestamp(rec.fields[0]);
        } catch (const ValidationError& e) {
            throw ValidationError(where() + e.what());
        }
        double price = 0, volume = 0;
        if (!csv::parse_double(rec.fields[1], price)) throw ValidationError(where() + "malformed price '" + rec.fields[1] + "'");
        if (!csv::parse_double(rec.fields[2], volume)) throw ValidationError(where() + "malformed volume '" + rec.fields[2] + "'");
        if (!(price > 0.0) || !std::isfinite(price)) throw ValidationError(where() + "non-positive price");
        if (!(volume >= 0.0) || !std::isfinite(volume)) throw ValidationError(where() + "negative volume");
        if (!out.timestamps.empty()) {
            if (ts == out.timestamps.back()) throw ValidationError(where() + "duplicate timestamp");
            if (ts < out.timestamps.back()) throw ValidationError(where() + "non-monotone timestamp");
        }
        out.timestamps.push_back(ts);
        out.prices.push_back(price);
        out.volumes.push_back(volume);
    }
    return out;
}

TickSeries load_ticks(const std::filesystem::path& path) {
    return parse_ticks(csv::read_file(path), path.stem().string(), path.string());
}

BarSeries resample(const TickSeries& ticks, std::int64_t interval_seconds) {
    validate(ticks);
    if (interval_seconds <= 0) throw ValidationError("resample: interval must be positive");
    std::int64_t spacing = 0;
    for (std::size_t i = 1; i < ticks.size(); ++i) {
        spacing = std::gcd(spacing, ticks.timestamps[i] - ticks.timestamps[i - 1]);
    }
    if (spacing > 0 && interval_seconds % spacing != 0) {
        std::ostringstream msg;
        msg << "resample: interval " << interval_seconds << "s is not a multiple of the source spacing " << spacing << "s";
        throw ValidationError(msg.str());
    }

    BarSeries out;
    out.interval_seconds = interval_seconds;
    std::vector<double> closes;
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        const std::int64_t bar_end = ceil_div(ticks.timestamps[i], interval_seconds) * interval_seconds;
        if (out.timestamps.empty() || out.timestamps.back() != bar_end) {
            out.timestamps.push_back(bar_end);
            out.volumes.push_back(0.0);
            closes.push_back(0.0);
        }
        out.volumes.back() += ticks.volumes[i];
        closes.back() = ticks.prices[i];
    }
    if (out.bars() < 2) throw ValidationError("resample: fewer than 2 bars for '" + ticks.instrument_id + "'");
    out.log_returns.resize(out.bars() - 1);
    for (std::size_t b = 1; b < out.bars(); ++b) out.log_returns[b - 1] = std::log(closes[b]) - std::log(closes[b - 1]);
    return out;
}

BarSeries resample(const BarSeries& bars, std::int64_t interval_seconds) {
    if (interval_seconds <= 0 || bars.interval_seconds <= 0 || interval_seconds % bars.interval_seconds != 0) {
        throw ValidationError("resample: target interval must be a positive multiple of the source interval");
    }
    BarSeries out;
    out.interval_seconds = interval_seconds;
    std::vector<double> cum_log_price;  // relative to the first bar's close
    double level = 0.0;
    for (std::size_t b = 0; b < bars.bars(); ++b) {
        if (b > 0) level += bars.log_returns[b - 1];
        const std::int64_t bar_end = ceil_div(bars.timestamps[b], interval_seconds) * interval_seconds;
        if (out.timestamps.empty() || out.timestamps.back() != bar_end) {
            out.timestamps.push_back(bar_end);
            out.volumes.push_back(0.0);
            cum_log_price.push_back(0.0);
        }
        out.volumes.back() += bars.volumes[b];
        cum_log_price.back() = level;
    }
    if (out.bars() < 2) throw ValidationError("resample: fewer than 2 bars");
    out.log_returns.resize(out.bars() - 1);
    for (std::size_t b = 1; b < out.bars(); ++b) out.log_returns[b - 1] = cum_log_price[b] - cum_log_price[b - 1];
    return out;
}

BarSeries aggregate_sector(std::span<const BarSeries> members) {
    if (members.empty()) throw ValidationError("aggregate_sector: empty member list");
    const BarSeries& first = members.front();
    for (const auto& m : members) {
        if (m.timestamps != first.timestamps || m.interval_seconds != first.interval_seconds ||
            m.log_returns.size() != first.log_returns.size()) {
            throw ValidationError("aggregate_sector: members do not share an identical timestamp grid");
        }
    }
    BarSeries out;
    out.interval_seconds = first.interval_seconds;
    out.timestamps = first.timestamps;
    out.volumes.assign(first.bars(), 0.0);
    out.log_returns.assign(first.log_returns.size(), 0.0);
    for (const auto& m : members) {
        for (std::size_t b = 0; b < m.bars(); ++b) out.volumes[b] += m.volumes[b];
        for (std::size_t t = 0; t < m.log_returns.size(); ++t) out.log_returns[t] += m.log_returns[t];
    }
    const auto k = static_cast<double>(members.size());
    for (auto& r : out.log_returns) r /= k;
    return out;
}

GridPartition partition_by_grid(std::span<const BarSeries> members) {
    std::set<std::int64_t> grid;
    for (const auto& m : members) grid.insert(m.timestamps.begin(), m.timestamps.end());
    const std::vector<std::int64_t> full(grid.begin(), grid.end());
    GridPartition out;
    for (std::size_t i = 0; i < members.size(); ++i) {
        (members[i].timestamps == full ? out.complete : out.with_gaps).push_back(i);
    }
    return out;
}

SummaryStats summary_stats(std::span<const double> returns) {
    if (returns.size() < 4) throw ValidationError("summary_stats: need at least 4 observations");
    SummaryStats s;
    s.n = returns.size();
    const double n = static_cast<double>(returns.size());
    s.mean = varnews::mean(returns);
    double m2 = 0, m3 = 0, m4 = 0;
    for (double r : returns) {
        const double d = r - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (!(m2 > 0.0)) throw ValidationError("summary_stats: degenerate input (zero variance)");
    s.std_dev = std::sqrt(m2 * n / (n - 1.0));
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
    const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
    s.min = *lo;
    s.max = *hi;
    s.quantile_1pct = empirical_quantile(returns, 0.01);
    s.jarque_bera = n / 6.0 * (s.skewness * s.skewness + 0.25 * (s.kurtosis - 3.0) * (s.kurtosis - 3.0));
    return s;
}

std::map<std::string, std::string> load_sector_map(const std::filesystem::path& path) {
    const auto records = csv::parse(csv::read_file(path), path.string());
    if (records.empty()) throw ValidationError(path.string() + ": empty sector map");
    const auto& header = records.front().fields;
    if (header.size() != 2 || lower(trim(header[0])) != "instrument_id" || lower(trim(header[1])) != "sector") {
        throw ValidationError(path.string() + ":1: expected header 'instrument_id,sector'");
    }
    std::map<std::string, std::string> out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != 2) {
            throw ValidationError(path.string() + ":" + std::to_string(rec.line) + ": expected 2 fields");
        }
        const std::string id = trim(rec.fields[0]);
        if (!out.emplace(id, trim(rec.fields[1])).second) {
            throw ValidationError(path.string() + ":" + std::to_string(rec.line) + ": duplicate instrument '" + id + "'");
        }
    }
    return out;
}

}  // namespace varnews::market
