#pragma once

#include "varnews/common.hpp"
#include "varnews/market_data.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace varnews::sent {

enum class SClass { Positive, Negative, Neutral };
enum class QClass { High, Low };

[[nodiscard]] std::string_view to_string(SClass c);
[[nodiscard]] std::string_view to_string(QClass c);
[[nodiscard]] SClass s_class_from_string(std::string_view s);
[[nodiscard]] QClass q_class_from_string(std::string_view s);

struct Headline {
    std::int64_t timestamp = 0;
    std::string id;  // instrument or sector
    std::string text;

    bool operator==(const Headline&) const = default;
};

/// CSV with header `timestamp,id,text`. Rows whose text has no token are rejected.
[[nodiscard]] std::vector<Headline> parse_headlines(std::string_view csv_text, const std::string& source_name);
[[nodiscard]] std::vector<Headline> load_headlines(const std::filesystem::path& path);

/// Drops repeated (timestamp, text) pairs, keeping the first, and sorts stably by timestamp.
[[nodiscard]] std::vector<Headline> deduplicate(std::span<const Headline> headlines);

struct Thresholds {
    double r_neg = 0.0;
    double r_pos = 0.0;
    double r_high = 0.0;  // on the squared return
};

/// 2.5% and 97.5% quantiles of the returns and the 2.5% quantile of their squares. Needs n >= 200
/// and a non-constant sample.
[[nodiscard]] Thresholds compute_thresholds(std::span<const double> returns);

[[nodiscard]] SClass classify_s(double r, const Thresholds& th);
[[nodiscard]] QClass classify_q(double r, const Thresholds& th);

struct LabeledHeadline {
    Headline headline;
    SClass s_class = SClass::Neutral;
    QClass q_class = QClass::Low;
    double matched_return = 0.0;
};

struct LabelResult {
    std::vector<LabeledHeadline> labeled;
    std::size_t unmatched = 0;
};

/// Matches each headline to the bar whose interval (ts[i-1], ts[i]] contains its timestamp and
/// labels it with that bar's return. Headlines outside the grid are counted in `unmatched`.
[[nodiscard]] LabelResult label_headlines(std::span<const Headline> headlines, const market::BarSeries& bars,
                                          const Thresholds& thresholds);

/// Lowercase, split on non-alphanumeric bytes, drop tokens shorter than 2 and pure numbers.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view text);

/// Occurrence statistics of one word: the nonzero per-headline counts in each class.
struct WordStats {
    std::array<std::vector<int>, 3> s_counts;  // indexed by SClass
    std::array<std::vector<int>, 2> q_counts;  // indexed by QClass
};

struct ClassSizes {
    std::array<std::size_t, 3> s{};
    std::array<std::size_t, 2> q{};
};

/// Class with the most headlines containing the word; ties give Neutral and Low.
[[nodiscard]] std::pair<SClass, QClass> modal_class(const WordStats& stats);

/// Between-class spread of mean occurrence (mean over class pairs) over pooled within-class
/// variance. 0 when the class means agree; a zero within-class variance is floored at 1e-9.
[[nodiscard]] double fisher_score_s(const WordStats& stats, const ClassSizes& sizes);
[[nodiscard]] double fisher_score_q(const WordStats& stats, const ClassSizes& sizes);

struct Corpus {
    std::map<std::string, WordStats> words;
    ClassSizes sizes;
};
[[nodiscard]] Corpus corpus_statistics(std::span<const LabeledHeadline> labeled);

struct DictionaryEntry {
    SClass s_class = SClass::Neutral;
    QClass q_class = QClass::Low;
    double fisher_s = 0.0;
    double fisher_q = 0.0;
};

struct SentimentDictionary {
    std::map<std::string, DictionaryEntry> entries;
    double f_threshold = 0.0;

    [[nodiscard]] bool is_positive(const std::string& word) const;
    [[nodiscard]] bool is_negative(const std::string& word) const;
    [[nodiscard]] bool is_high(const std::string& word) const;
    /// Retained Positive, Negative and High words.
    [[nodiscard]] std::array<std::size_t, 3> counts() const;
};

/// 75th percentile of the pooled nonzero Fisher scores (both categories); 0 when none.
[[nodiscard]] double default_threshold(const Corpus& corpus);

/// Scores every word and keeps those with fisher_s or fisher_q >= f_threshold. A word counts as
/// Positive/Negative when its modal S class is such and fisher_s passes, and High when its modal
/// Q class is High and fisher_q passes. Negative f_threshold selects the default.
[[nodiscard]] SentimentDictionary build_dictionary(std::span<const LabeledHeadline> labeled, double f_threshold);

[[nodiscard]] std::string dictionary_json(const SentimentDictionary& dict);
[[nodiscard]] SentimentDictionary dictionary_from_json(std::string_view text);

/// Covariates per return bar: bar i (i >= 1) covers (ts[i-1], ts[i]].
struct RegressorSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<double> pos, neg, high, numb, lagvol;
    std::size_t unplaced = 0;  // headlines before the first interval or after the last bar

    /// Columns NUMB, LAGVOL.
    [[nodiscard]] Matrix info_volume() const;
    /// Columns POS, NEG, HIGH.
    [[nodiscard]] Matrix sentiment() const;
};

[[nodiscard]] RegressorSeries build_regressors(std::span<const Headline> headlines, const SentimentDictionary& dict,
                                               std::span<const std::int64_t> bar_timestamps,
                                               std::span<const double> bar_volumes);

/// `timestamp,pos,neg,high,numb,lagvol`.
[[nodiscard]] std::string regressors_csv(const RegressorSeries& series);

}  // namespace varnews::sent
