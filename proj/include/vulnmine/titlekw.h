#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vulnmine::titlekw {

// Cleaning rules for issue/PR titles. All lists are data; the defaults carry
// the examples the method was described with.
struct TitleRules {
    // A leading "module:" prefix is stripped only when the colon falls within
    // this many whitespace-separated tokens.
    std::size_t module_prefix_window = 3;
    // Globs matched case-insensitively against whitespace tokens ("SEC-*").
    std::vector<std::string> special_token_patterns { "SEC-*" };
    // Noun-like adjective phrases removed from the token stream.
    std::vector<std::string> noun_phrases { "possibility of", "use of" };
    std::map<std::string, std::string> synonyms {
        { "tx", "transaction" },
        { "txs", "transaction" },
        { "txns", "transaction" },
    };
};

TitleRules title_rules_from_json(const nlohmann::json& j);
nlohmann::json title_rules_to_json(const TitleRules& rules);

struct Removal {
    std::string rule;
    std::string text;

    bool operator==(const Removal&) const = default;
};

struct CleanedTitle {
    std::vector<std::string> tokens;
    std::vector<Removal> removals;
};

// Lowercase runs of ASCII letters; digits, punctuation and any non-ASCII
// bytes separate tokens.
std::vector<std::string> tokenize_words(std::string_view text);

CleanedTitle clean_title(std::string_view raw, const TitleRules& rules);

struct PosSeed {
    std::vector<std::string> verbs;
    std::vector<std::string> prepositions;
};

// Ten most frequent verbs and prepositions from the vulnerability-title
// vocabulary, followed by a small extension list.
PosSeed default_pos_seed();
PosSeed pos_seed_from_json(const nlohmann::json& j);

struct RankedWord {
    std::string word;
    std::size_t frequency = 0;
    std::size_t rank = 0; // 1-based, strictly increasing along the list

    bool operator==(const RankedWord&) const = default;
};

class PosVocabulary {
public:
    PosVocabulary() = default;
    PosVocabulary(std::vector<RankedWord> verbs, std::vector<RankedWord> prepositions);

    const std::vector<RankedWord>& verbs() const { return m_verbs; }
    const std::vector<RankedWord>& prepositions() const { return m_prepositions; }

    std::optional<std::size_t> verb_rank(std::string_view word) const;
    std::optional<std::size_t> preposition_rank(std::string_view word) const;

private:
    std::vector<RankedWord> m_verbs;
    std::vector<RankedWord> m_prepositions;
    std::map<std::string, std::size_t, std::less<>> m_verb_rank;
    std::map<std::string, std::size_t, std::less<>> m_prep_rank;
};

// Counts seed-word occurrences over the cleaned titles and ranks them by
// descending frequency (ties keep seed order); unseen words rank last.
PosVocabulary build_pos_vocabulary(const std::vector<std::vector<std::string>>& cleaned_titles, const PosSeed& seed);

nlohmann::json pos_vocabulary_to_json(const PosVocabulary& vocab);

struct Targets {
    std::optional<std::size_t> verb;
    std::optional<std::size_t> preposition;

    bool operator==(const Targets&) const = default;
};

Targets select_targets(const std::vector<std::string>& tokens, const PosVocabulary& vocab);

enum class RuleFired { VerbAndPreposition, VerbOnly, PrepositionOnly, NoTarget };

std::string_view to_string(RuleFired rule);

struct TypeKeywords {
    std::vector<std::string> keywords;
    std::optional<std::string> target_verb;
    std::optional<std::string> target_preposition;
    RuleFired rule_fired = RuleFired::NoTarget;
    // Half-open slice of the cleaned tokens the keywords were taken from.
    std::size_t begin = 0;
    std::size_t end = 0;
};

TypeKeywords extract_type_keywords(const std::vector<std::string>& tokens, const Targets& targets);

} // namespace vulnmine::titlekw
