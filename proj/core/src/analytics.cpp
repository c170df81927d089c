#include "worldsmith/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "worldsmith/error.hpp"

namespace worldsmith {

// ---- trace filtering -------------------------------------------------------

std::vector<InteractionEvent> filter_events(std::span<const InteractionEvent> events,
                                            std::span<const EventKind> kinds) {
    std::vector<InteractionEvent> out;
    for (const auto& e : events) {
        if (std::find(kinds.begin(), kinds.end(), e.kind) != kinds.end()) out.push_back(e);
    }
    std::stable_sort(out.begin(), out.end(), [](const InteractionEvent& a, const InteractionEvent& b) {
        if (a.session_id != b.session_id) return a.session_id < b.session_id;
        if (a.timestamp_ms != b.timestamp_ms) return a.timestamp_ms < b.timestamp_ms;
        return a.event_id < b.event_id;
    });
    return out;
}

std::vector<ActivityRun> activity_runs(std::span<const InteractionEvent> events, std::span<const EventKind> kinds) {
    std::vector<ActivityRun> runs;
    for (const auto& e : filter_events(events, kinds)) {
        if (!runs.empty() && runs.back().session_id == e.session_id && runs.back().kind == e.kind) {
            runs.back().end_ms = e.timestamp_ms;
            ++runs.back().events;
        } else {
            runs.push_back({e.session_id, e.kind, e.timestamp_ms, e.timestamp_ms, 1});
        }
    }
    return runs;
}

// ---- action transitions ----------------------------------------------------

double TransitionMatrix::ratio(EventKind from, EventKind to) const {
    const auto f = std::find(kinds.begin(), kinds.end(), from);
    const auto t = std::find(kinds.begin(), kinds.end(), to);
    if (f == kinds.end() || t == kinds.end()) fail(ErrorCode::invalid_argument, "kind not in matrix");
    return ratios[f - kinds.begin()][t - kinds.begin()];
}

std::string TransitionMatrix::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "from\\to";
    for (auto k : kinds) out << ',' << to_string(k);
    out << '\n';
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        out << to_string(kinds[i]);
        for (double v : ratios[i]) out << ',' << v;
        out << '\n';
    }
    return out.str();
}

TransitionMatrix transition_matrix(std::span<const InteractionEvent> events, std::span<const EventKind> kinds,
                                   bool collapse_runs) {
    if (kinds.empty()) fail(ErrorCode::invalid_argument, "transition matrix needs at least one kind");
    TransitionMatrix m;
    m.kinds.assign(kinds.begin(), kinds.end());
    const std::size_t n = m.kinds.size();
    m.counts.assign(n, std::vector<std::uint64_t>(n, 0));
    m.ratios.assign(n, std::vector<double>(n, 0.0));

    auto index_of = [&](EventKind k) {
        return static_cast<std::size_t>(std::find(m.kinds.begin(), m.kinds.end(), k) - m.kinds.begin());
    };

    const auto ordered = filter_events(events, kinds);
    for (std::size_t i = 1; i < ordered.size(); ++i) {
        const auto& prev = ordered[i - 1];
        const auto& cur = ordered[i];
        if (prev.session_id != cur.session_id) continue;
        if (collapse_runs && prev.kind == cur.kind) continue;
        ++m.counts[index_of(prev.kind)][index_of(cur.kind)];
    }

    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t total = 0;
        for (auto c : m.counts[i]) total += c;
        if (total == 0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            m.ratios[i][j] = static_cast<double>(m.counts[i][j]) / static_cast<double>(total);
        }
    }
    return m;
}

// ---- prompt coding ---------------------------------------------------------

namespace {

constexpr std::pair<PromptCode, std::string_view> kCodeNames[] = {
    {PromptCode::size, "Size"},           {PromptCode::positional, "Positional"},
    {PromptCode::action, "Action"},       {PromptCode::quantifier, "Quantifier"},
    {PromptCode::style, "Style"},         {PromptCode::perspective, "Perspective"},
};

// Decodes one UTF-8 code point at `i`, advancing it. Malformed bytes decode
// as themselves.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) {
        i += 1;
        return b0;
    }
    if ((b0 & 0xE0) == 0xC0 && cont(1) >= 0) {
        const char32_t cp = ((b0 & 0x1F) << 6) | cont(1);
        i += 2;
        return cp;
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) >= 0 && cont(2) >= 0) {
        const char32_t cp = ((b0 & 0x0F) << 12) | (cont(1) << 6) | cont(2);
        i += 3;
        return cp;
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) >= 0 && cont(2) >= 0 && cont(3) >= 0) {
        const char32_t cp = ((b0 & 0x07) << 18) | (cont(1) << 12) | (cont(2) << 6) | cont(3);
        i += 4;
        return cp;
    }
    i += 1;
    return b0;
}

bool is_unicode_space(char32_t c) {
    return (c >= 0x09 && c <= 0x0D) || c == 0x20 || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F ||
           c == 0x3000;
}

std::string strip_edges(std::string token) {
    auto punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
    std::size_t b = 0, e = token.size();
    while (b < e && punct(token[b])) ++b;
    while (e > b && punct(token[e - 1])) --e;
    return token.substr(b, e - b);
}

}  // namespace

std::string_view to_string(PromptCode code) noexcept {
    for (const auto& [c, n] : kCodeNames) {
        if (c == code) return n;
    }
    return "unknown";
}

PromptCode prompt_code_from_string(std::string_view name) {
    for (const auto& [c, n] : kCodeNames) {
        if (n.size() == name.size() &&
            std::equal(n.begin(), n.end(), name.begin(), [](char a, char b) {
                return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
            })) {
            return c;
        }
    }
    fail(ErrorCode::invalid_argument, "unknown prompt code '" + std::string(name) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        auto t = strip_edges(std::move(cur));
        if (!t.empty()) out.push_back(std::move(t));
        cur.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        const std::size_t start = i;
        const char32_t cp = next_code_point(text, i);
        if (is_unicode_space(cp)) {
            flush();
            continue;
        }
        for (std::size_t k = start; k < i; ++k) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[k]))));
        }
    }
    flush();
    return out;
}

const CodingLexicon& CodingLexicon::builtin() {
    static const CodingLexicon lexicon = [] {
        CodingLexicon l;
        const std::pair<PromptCode, std::vector<std::string_view>> table[] = {
            {PromptCode::size, {"large", "small", "high", "giant", "tall", "tiny", "big"}},
            {PromptCode::positional,
             {"surround", "above", "side by side", "around", "underneath", "middle", "on both sides", "bottom",
              "left", "corner", "north", "south", "next to", "in the carribbean", "contain", "in Rome", "between",
              "split by", "inland", "west", "east"}},
            {PromptCode::action,
             {"hunting", "selling", "erupting", "on fire", "sits", "running", "coming", "reach", "wear",
              "explosion", "smoking", "painting", "holding", "extending"}},
            {PromptCode::quantifier,
             {"many", "few", "dense", "some", "a lot of", "lots of", "singular", "four", "two", "several"}},
            {PromptCode::style,
             {"concept art", "map", "anime", "cyberpunk", "1950", "antique", "cartoon", "japanese", "medieval",
              "fantasy", "futuristic", "cartographic", "geographical"}},
            {PromptCode::perspective, {"2d", "top down", "horizontal", "skyline view", "view", "isometric", "bird"}},
        };
        for (const auto& [code, words] : table) {
            for (auto w : words) l.add(code, w);
        }
        return l;
    }();
    return lexicon;
}

void CodingLexicon::add(PromptCode code, std::string_view keyword) {
    auto tokens = tokenize(keyword);
    if (tokens.empty()) fail(ErrorCode::invalid_argument, "empty keyword");
    std::string normalized;
    for (const auto& t : tokens) {
        if (!normalized.empty()) normalized += ' ';
        normalized += t;
    }
    if (auto it = phrases_.find(tokens); it != phrases_.end()) {
        if (it->second != code) {
            fail(ErrorCode::conflict, "keyword '" + normalized + "' already belongs to " +
                                          std::string(to_string(it->second)));
        }
        return;
    }
    longest_ = std::max(longest_, tokens.size());
    phrases_.emplace(std::move(tokens), code);
    keywords_[code].push_back(std::move(normalized));
}

void CodingLexicon::merge(const CodingLexicon& other) {
    for (const auto& [code, words] : other.keywords_) {
        for (const auto& w : words) add(code, w);
    }
}

CodingLexicon CodingLexicon::from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::invalid_argument, "lexicon must be an object of keyword lists");
    CodingLexicon l;
    for (const auto& [name, words] : j.items()) {
        const auto code = prompt_code_from_string(name);
        if (!words.is_array()) fail(ErrorCode::invalid_argument, "keywords of " + name + " must be a list");
        for (const auto& w : words) l.add(code, w.get<std::string>());
    }
    return l;
}

nlohmann::json CodingLexicon::to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [code, words] : keywords_) out[std::string(to_string(code))] = words;
    return out;
}

std::vector<CodingLexicon::Hit> CodingLexicon::scan(std::string_view text) const {
    const auto tokens = tokenize(text);
    std::vector<Hit> hits;
    std::size_t i = 0;
    while (i < tokens.size()) {
        std::size_t matched = 0;
        for (std::size_t len = std::min(longest_, tokens.size() - i); len >= 1; --len) {
            std::vector<std::string> probe(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                           tokens.begin() + static_cast<std::ptrdiff_t>(i + len));
            if (auto it = phrases_.find(probe); it != phrases_.end()) {
                std::string kw;
                for (const auto& t : probe) {
                    if (!kw.empty()) kw += ' ';
                    kw += t;
                }
                hits.push_back({it->second, std::move(kw), i});
                matched = len;
                break;
            }
        }
        i += matched ? matched : 1;
    }
    return hits;
}

std::set<PromptCode> code_prompt(std::string_view text, const CodingLexicon& lexicon) {
    std::set<PromptCode> out;
    for (const auto& h : lexicon.scan(text)) out.insert(h.code);
    return out;
}

// ---- prompt statistics -----------------------------------------------------

std::size_t word_count(std::string_view text) { return tokenize(text).size(); }

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

}  // namespace

Summary summarize(std::vector<double> samples) {
    Summary s;
    s.count = samples.size();
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    double sum = 0.0;
    for (double v : samples) sum += v;
    s.mean = sum / static_cast<double>(samples.size());
    s.median = quantile_sorted(samples, 0.5);
    s.iqr = quantile_sorted(samples, 0.75) - quantile_sorted(samples, 0.25);
    return s;
}

std::vector<PromptText> collect_prompts(std::span<const InteractionEvent> events) {
    std::vector<PromptText> out;
    auto add = [&](PromptText::Source source, const InteractionEvent& e, const nlohmann::json& v) {
        if (!v.is_string() || v.get_ref<const std::string&>().empty()) return;
        out.push_back({source, e.session_id, e.tile_id, v.get<std::string>()});
    };
    for (const auto& e : events) {
        const auto& p = e.payload;
        if (!p.is_object()) continue;
        if (e.kind == EventKind::modify_text && p.contains("text")) {
            add(PromptText::Source::scene, e, p["text"]);
        } else if (e.kind == EventKind::modify_region) {
            if (p.contains("regions") && p["regions"].is_array()) {
                std::set<std::string> changed;
                if (p.contains("changed") && p["changed"].is_array()) {
                    for (const auto& c : p["changed"]) {
                        if (c.is_string()) changed.insert(c.get<std::string>());
                    }
                }
                for (const auto& r : p["regions"]) {
                    if (!r.is_object() || !r.contains("region_id") || !r["region_id"].is_string()) continue;
                    if (changed.count(r["region_id"].get<std::string>()) && r.contains("description")) {
                        add(PromptText::Source::region, e, r["description"]);
                    }
                }
            } else if (p.contains("description")) {
                add(PromptText::Source::region, e, p["description"]);
            }
        }
    }
    return out;
}

PromptStats prompt_stats(std::span<const InteractionEvent> events) {
    std::vector<double> scene, region;
    for (const auto& t : collect_prompts(events)) {
        const auto n = static_cast<double>(word_count(t.text));
        if (n == 0) continue;
        (t.source == PromptText::Source::scene ? scene : region).push_back(n);
    }

    std::map<std::pair<std::string, std::string>, std::set<std::string>> regions_by_tile;
    for (const auto& e : events) {
        if (e.kind != EventKind::modify_region || !e.payload.is_object()) continue;
        const auto& p = e.payload;
        auto& ids = regions_by_tile[{e.session_id, e.tile_id.value_or("")}];
        if (p.contains("regions") && p["regions"].is_array()) {
            for (const auto& r : p["regions"]) {
                if (r.is_object() && r.contains("region_id") && r["region_id"].is_string()) {
                    ids.insert(r["region_id"].get<std::string>());
                }
            }
        } else if (p.contains("region_id") && p["region_id"].is_string()) {
            ids.insert(p["region_id"].get<std::string>());
        }
    }
    std::vector<double> per_tile;
    for (const auto& [key, ids] : regions_by_tile) {
        if (!ids.empty()) per_tile.push_back(static_cast<double>(ids.size()));
    }
    return {summarize(std::move(scene)), summarize(std::move(region)), summarize(std::move(per_tile))};
}

}  // namespace worldsmith
