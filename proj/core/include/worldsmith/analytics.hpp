#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldsmith/telemetry.hpp"

namespace worldsmith {

// ---- trace filtering -------------------------------------------------------

/// Events of the given kinds, ordered by (session, timestamp, event_id).
std::vector<InteractionEvent> filter_events(std::span<const InteractionEvent> events, std::span<const EventKind> kinds);

/// Maximal stretch of consecutive same-kind events within one session, after
/// filtering to the given kinds.
struct ActivityRun {
    std::string session_id;
    EventKind kind = EventKind::modify_text;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    std::size_t events = 0;

    friend bool operator==(const ActivityRun&, const ActivityRun&) = default;
};

std::vector<ActivityRun> activity_runs(std::span<const InteractionEvent> events, std::span<const EventKind> kinds);

// ---- action transitions ----------------------------------------------------

struct TransitionMatrix {
    std::vector<EventKind> kinds;
    std::vector<std::vector<std::uint64_t>> counts;  // [from][to]
    std::vector<std::vector<double>> ratios;         // rows sum to 1, or all 0

    double ratio(EventKind from, EventKind to) const;
    /// Header row of kind names, then one row per `from` kind.
    std::string to_csv() const;
};

/// Relative transition ratios between the given action kinds.
///
/// Events are grouped by session (transitions never cross sessions) and
/// ordered by (timestamp, event_id); events of other kinds are dropped. With
/// `collapse_runs`, consecutive events of the same kind form one run and only
/// run boundaries count; otherwise every consecutive pair counts, including
/// self-transitions. Throws invalid_argument when `kinds` is empty.
TransitionMatrix transition_matrix(std::span<const InteractionEvent> events, std::span<const EventKind> kinds,
                                   bool collapse_runs = true);

// ---- prompt coding ---------------------------------------------------------

enum class PromptCode { size, positional, action, quantifier, style, perspective };

inline constexpr PromptCode all_prompt_codes[] = {PromptCode::size,       PromptCode::positional,
                                                  PromptCode::action,     PromptCode::quantifier,
                                                  PromptCode::style,      PromptCode::perspective};

std::string_view to_string(PromptCode code) noexcept;
PromptCode prompt_code_from_string(std::string_view name);

/// Lowercases ASCII, splits on Unicode whitespace and strips punctuation from
/// both ends of every token. Tokens that end up empty are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Keyword lists per code. Keywords are stored lowercase and tokenized; a
/// keyword may belong to one code only.
class CodingLexicon {
public:
    CodingLexicon() = default;

    /// The six codes with their published example keyword lists.
    static const CodingLexicon& builtin();
    /// {"Size": ["large", ...], ...}
    static CodingLexicon from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

    /// Throws conflict if the keyword already belongs to another code and
    /// invalid_argument if it has no tokens.
    void add(PromptCode code, std::string_view keyword);
    /// Adds every entry of `other`.
    void merge(const CodingLexicon& other);

    const std::map<PromptCode, std::vector<std::string>>& keywords() const noexcept { return keywords_; }

    struct Hit {
        PromptCode code;
        std::string keyword;
        std::size_t token_index;
    };
    /// Longest-match scan over tokenize(text).
    std::vector<Hit> scan(std::string_view text) const;

private:
    std::map<PromptCode, std::vector<std::string>> keywords_;
    std::map<std::vector<std::string>, PromptCode> phrases_;
    std::size_t longest_ = 0;
};

std::set<PromptCode> code_prompt(std::string_view text, const CodingLexicon& lexicon = CodingLexicon::builtin());

// ---- prompt statistics -----------------------------------------------------

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double iqr = 0.0;  // Q3 - Q1, linear interpolation between order statistics
};

Summary summarize(std::vector<double> samples);

struct PromptStats {
    Summary scene;             // words per scene description
    Summary region;            // words per region description
    Summary regions_per_tile;  // distinct regions per (session, tile)
};

struct PromptText {
    enum class Source { scene, region };
    Source source = Source::scene;
    std::string session_id;
    std::optional<std::string> tile_id;
    std::string text;
};

/// Prompt texts the user committed, in event order: `text` of modify_text
/// payloads and the descriptions of the regions a modify_region event
/// changed. Empty texts are skipped.
std::vector<PromptText> collect_prompts(std::span<const InteractionEvent> events);

/// Scene samples: non-empty `text` of modify_text payloads. Region samples:
/// non-empty descriptions of the regions a modify_region event changed
/// (payload `changed` ids resolved against payload `regions`, or a flat
/// payload `description`).
PromptStats prompt_stats(std::span<const InteractionEvent> events);

std::size_t word_count(std::string_view text);

}  // namespace worldsmith
