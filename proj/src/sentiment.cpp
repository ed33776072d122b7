#include "varnews/sentiment.hpp"

#include "varnews/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

namespace varnews::sent {

namespace {

constexpr double kDenominatorFloor = 1e-9;

double class_mean(const std::vector<int>& nonzero, std::size_t n) {
    if (n == 0) return 0.0;
    double s = 0.0;
    for (int v : nonzero) s += v;
    return s / static_cast<double>(n);
}

// Sum over all n headlines of the class of (m - mu)^2; absent headlines contribute mu^2.
double within_ss(const std::vector<int>& nonzero, std::size_t n, double mu) {
    double ss = 0.0;
    for (int v : nonzero) ss += (v - mu) * (v - mu);
    return ss + static_cast<double>(n - nonzero.size()) * mu * mu;
}

template <std::size_t K>
double fisher(const std::array<std::vector<int>, K>& counts, const std::array<std::size_t, K>& sizes) {
    std::array<double, K> mu{};
    double within = 0.0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < K; ++i) {
        if (counts[i].size() > sizes[i]) throw ValidationError("fisher_score: more occurrences than headlines");
        mu[i] = class_mean(counts[i], sizes[i]);
        within += within_ss(counts[i], sizes[i], mu[i]);
        total += sizes[i];
    }
    if (total == 0) return 0.0;
    double between = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t k = i + 1; k < K; ++k) {
            between += (mu[i] - mu[k]) * (mu[i] - mu[k]);
            ++pairs;
        }
    }
    between /= static_cast<double>(pairs);
    if (between == 0.0) return 0.0;
    return between / std::max(within / static_cast<double>(total), kDenominatorFloor);
}

// Index of the bar whose interval (ts[i-1], ts[i]] holds `t`, or 0 when none does.
std::size_t containing_bar(std::span<const std::int64_t> ts, std::int64_t t) {
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    if (it == ts.begin() || it == ts.end()) return 0;
    return static_cast<std::size_t>(it - ts.begin());
}

}  // namespace

std::string_view to_string(SClass c) {
    switch (c) {
        case SClass::Positive: return "Positive";
        case SClass::Negative: return "Negative";
        case SClass::Neutral: return "Neutral";
    }
    return "?";
}

std::string_view to_string(QClass c) { return c == QClass::High ? "High" : "Low"; }

SClass s_class_from_string(std::string_view s) {
    if (s == "Positive") return SClass::Positive;
    if (s == "Negative") return SClass::Negative;
    if (s == "Neutral") return SClass::Neutral;
    throw ValidationError("unknown sentiment class '" + std::string(s) + "'");
}

QClass q_class_from_string(std::string_view s) {
    if (s == "High") return QClass::High;
    if (s == "Low") return QClass::Low;
    throw ValidationError("unknown intensity class '" + std::string(s) + "'");
}

std::vector<Headline> parse_headlines(std::string_view csv_text, const std::string& source_name) {
    const auto records = csv::parse(csv_text, source_name);
    if (records.empty()) throw ValidationError(source_name + ": empty headline file");
    const auto& header = records[0].fields;
    if (header.size() != 3 || header[0] != "timestamp" || header[1] != "id" || header[2] != "text") {
        throw ValidationError(source_name + ":" + std::to_string(records[0].line) + ": expected header timestamp,id,text");
    }
    std::vector<Headline> out;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string where = source_name + ":" + std::to_string(rec.line) + ": ";
        if (rec.fields.size() != 3) throw ValidationError(where + "expected 3 fields");
        Headline h;
        try {
            h.timestamp = market::parse_timestamp(rec.fields[0]);
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
        h.id = rec.fields[1];
        h.text = rec.fields[2];
        if (h.id.empty()) throw ValidationError(where + "empty id");
        if (tokenize(h.text).empty()) throw ValidationError(where + "headline has no words");
        out.push_back(std::move(h));
    }
    if (out.empty()) throw ValidationError(source_name + ": no headlines");
    return out;
}

std::vector<Headline> load_headlines(const std::filesystem::path& path) {
    return parse_headlines(csv::read_file(path), path.string());
}

std::vector<Headline> deduplicate(std::span<const Headline> headlines) {
    std::set<std::pair<std::int64_t, std::string>> seen;
    std::vector<Headline> out;
    for (const auto& h : headlines) {
        if (seen.emplace(h.timestamp, h.text).second) out.push_back(h);
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Headline& a, const Headline& b) { return a.timestamp < b.timestamp; });
    return out;
}

Thresholds compute_thresholds(std::span<const double> returns) {
    if (returns.size() < 200) {
        throw ValidationError("compute_thresholds: " + std::to_string(returns.size()) +
                              " returns, need at least 200");
    }
    Thresholds th;
    th.r_neg = empirical_quantile(returns, 0.025);
    th.r_pos = empirical_quantile(returns, 0.975);
    std::vector<double> sq(returns.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = returns[i] * returns[i];
    th.r_high = empirical_quantile(sq, 0.025);
    if (!(th.r_neg < th.r_pos)) throw ValidationError("compute_thresholds: degenerate return sample");
    return th;
}

SClass classify_s(double r, const Thresholds& th) {
    if (r <= th.r_neg) return SClass::Negative;
    if (r >= th.r_pos) return SClass::Positive;
    return SClass::Neutral;
}

QClass classify_q(double r, const Thresholds& th) { return r * r >= th.r_high ? QClass::High : QClass::Low; }

LabelResult label_headlines(std::span<const Headline> headlines, const market::BarSeries& bars,
                            const Thresholds& thresholds) {
    LabelResult out;
    for (const auto& h : headlines) {
        const std::size_t i = containing_bar(bars.timestamps, h.timestamp);
        if (i == 0) {
            ++out.unmatched;
            continue;
        }
        const double r = bars.log_returns[i - 1];
        out.labeled.push_back({h, classify_s(r, thresholds), classify_q(r, thresholds), r});
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        const bool numeric = std::all_of(cur.begin(), cur.end(), [](unsigned char c) { return std::isdigit(c); });
        if (cur.size() >= 2 && !numeric) out.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    return out;
}

std::pair<SClass, QClass> modal_class(const WordStats& stats) {
    std::array<std::size_t, 3> s{};
    for (std::size_t i = 0; i < 3; ++i) s[i] = stats.s_counts[i].size();
    const std::size_t top = *std::max_element(s.begin(), s.end());
    SClass sc = SClass::Neutral;
    if (std::count(s.begin(), s.end(), top) == 1) sc = static_cast<SClass>(std::max_element(s.begin(), s.end()) - s.begin());
    const QClass qc = stats.q_counts[0].size() > stats.q_counts[1].size() ? QClass::High : QClass::Low;
    return {sc, qc};
}

double fisher_score_s(const WordStats& stats, const ClassSizes& sizes) { return fisher(stats.s_counts, sizes.s); }
double fisher_score_q(const WordStats& stats, const ClassSizes& sizes) { return fisher(stats.q_counts, sizes.q); }

Corpus corpus_statistics(std::span<const LabeledHeadline> labeled) {
    Corpus c;
    for (const auto& lh : labeled) {
        const auto s = static_cast<std::size_t>(lh.s_class);
        const auto q = static_cast<std::size_t>(lh.q_class);
        ++c.sizes.s[s];
        ++c.sizes.q[q];
        std::map<std::string, int> counts;
        for (auto& tok : tokenize(lh.headline.text)) ++counts[tok];
        for (const auto& [word, m] : counts) {
            auto& ws = c.words[word];
            ws.s_counts[s].push_back(m);
            ws.q_counts[q].push_back(m);
        }
    }
    return c;
}

bool SentimentDictionary::is_positive(const std::string& word) const {
    const auto it = entries.find(word);
    return it != entries.end() && it->second.s_class == SClass::Positive && it->second.fisher_s >= f_threshold;
}

bool SentimentDictionary::is_negative(const std::string& word) const {
    const auto it = entries.find(word);
    return it != entries.end() && it->second.s_class == SClass::Negative && it->second.fisher_s >= f_threshold;
}

bool SentimentDictionary::is_high(const std::string& word) const {
    const auto it = entries.find(word);
    return it != entries.end() && it->second.q_class == QClass::High && it->second.fisher_q >= f_threshold;
}

std::array<std::size_t, 3> SentimentDictionary::counts() const {
    std::array<std::size_t, 3> c{};
    for (const auto& [word, e] : entries) {
        c[0] += is_positive(word);
        c[1] += is_negative(word);
        c[2] += is_high(word);
    }
    return c;
}

double default_threshold(const Corpus& corpus) {
    std::vector<double> scores;
    for (const auto& [word, ws] : corpus.words) {
        for (double f : {fisher_score_s(ws, corpus.sizes), fisher_score_q(ws, corpus.sizes)}) {
            if (f > 0.0) scores.push_back(f);
        }
    }
    return scores.empty() ? 0.0 : empirical_quantile(scores, 0.75);
}

SentimentDictionary build_dictionary(std::span<const LabeledHeadline> labeled, double f_threshold) {
    if (labeled.empty()) throw ValidationError("build_dictionary: empty corpus");
    const Corpus corpus = corpus_statistics(labeled);
    SentimentDictionary dict;
    dict.f_threshold = f_threshold < 0.0 ? default_threshold(corpus) : f_threshold;
    for (const auto& [word, ws] : corpus.words) {
        DictionaryEntry e;
        std::tie(e.s_class, e.q_class) = modal_class(ws);
        e.fisher_s = fisher_score_s(ws, corpus.sizes);
        e.fisher_q = fisher_score_q(ws, corpus.sizes);
        if (e.fisher_s >= dict.f_threshold || e.fisher_q >= dict.f_threshold) dict.entries.emplace(word, e);
    }
    return dict;
}

std::string dictionary_json(const SentimentDictionary& dict) {
    nlohmann::ordered_json j;
    j["f_threshold"] = dict.f_threshold;
    const auto c = dict.counts();
    j["counts"] = {{"positive", c[0]}, {"negative", c[1]}, {"high", c[2]}};
    auto words = nlohmann::ordered_json::object();
    for (const auto& [word, e] : dict.entries) {
        words[word] = {{"s_class", to_string(e.s_class)},
                       {"q_class", to_string(e.q_class)},
                       {"fisher_s", e.fisher_s},
                       {"fisher_q", e.fisher_q}};
    }
    j["words"] = words;
    return j.dump(2) + "\n";
}

SentimentDictionary dictionary_from_json(std::string_view text) {
    SentimentDictionary dict;
    try {
        const auto j = nlohmann::json::parse(text);
        dict.f_threshold = j.at("f_threshold").get<double>();
        for (const auto& [word, e] : j.at("words").items()) {
            DictionaryEntry entry;
            entry.s_class = s_class_from_string(e.at("s_class").get<std::string>());
            entry.q_class = q_class_from_string(e.at("q_class").get<std::string>());
            entry.fisher_s = e.at("fisher_s").get<double>();
            entry.fisher_q = e.at("fisher_q").get<double>();
            dict.entries.emplace(word, entry);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dictionary JSON: ") + e.what());
    }
    return dict;
}

Matrix RegressorSeries::info_volume() const {
    Matrix m(timestamps.size(), 2);
    m.set_column(0, numb);
    m.set_column(1, lagvol);
    return m;
}

Matrix RegressorSeries::sentiment() const {
    Matrix m(timestamps.size(), 3);
    m.set_column(0, pos);
    m.set_column(1, neg);
    m.set_column(2, high);
    return m;
}

RegressorSeries build_regressors(std::span<const Headline> headlines, const SentimentDictionary& dict,
                                 std::span<const std::int64_t> bar_timestamps, std::span<const double> bar_volumes) {
    if (bar_timestamps.size() < 2) throw ValidationError("build_regressors: need at least two bars");
    if (bar_volumes.size() != bar_timestamps.size()) {
        throw ValidationError("build_regressors: timestamps and volumes differ in length");
    }
    const std::size_t n = bar_timestamps.size() - 1;
    RegressorSeries out;
    out.timestamps.assign(bar_timestamps.begin() + 1, bar_timestamps.end());
    out.pos.assign(n, 0.0);
    out.neg.assign(n, 0.0);
    out.high.assign(n, 0.0);
    out.numb.assign(n, 0.0);
    out.lagvol.assign(bar_volumes.begin(), bar_volumes.end() - 1);
    std::unordered_map<std::string, std::array<bool, 3>> cache;
    for (const auto& h : headlines) {
        const std::size_t i = containing_bar(bar_timestamps, h.timestamp);
        if (i == 0) {
            ++out.unplaced;
            continue;
        }
        const std::size_t row = i - 1;
        for (const auto& tok : tokenize(h.text)) {
            auto it = cache.find(tok);
            if (it == cache.end()) {
                it = cache.emplace(tok, std::array<bool, 3>{dict.is_positive(tok), dict.is_negative(tok), dict.is_high(tok)})
                         .first;
            }
            out.numb[row] += 1.0;
            out.pos[row] += it->second[0];
            out.neg[row] += it->second[1];
            out.high[row] += it->second[2];
        }
    }
    return out;
}

std::string regressors_csv(const RegressorSeries& series) {
    csv::Writer w;
    w.row({"timestamp", "pos", "neg", "high", "numb", "lagvol"});
    for (std::size_t t = 0; t < series.timestamps.size(); ++t) {
        w.row({std::to_string(series.timestamps[t]), csv::format_double(series.pos[t]), csv::format_double(series.neg[t]),
               csv::format_double(series.high[t]), csv::format_double(series.numb[t]),
               csv::format_double(series.lagvol[t])});
    }
    return w.str();
}

}  // namespace varnews::sent
