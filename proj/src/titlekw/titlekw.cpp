#include <vulnmine/error.h>
#include <vulnmine/io.h>
#include <vulnmine/text.h>
#include <vulnmine/titlekw.h>

#include <algorithm>
#include <set>

namespace vulnmine::titlekw {

using nlohmann::json;

TitleRules title_rules_from_json(const json& j)
{
    TitleRules rules;
    try {
        if (j.contains("module_prefix_window"))
            rules.module_prefix_window = j.at("module_prefix_window").get<std::size_t>();
        if (j.contains("special_token_patterns"))
            rules.special_token_patterns = j.at("special_token_patterns").get<std::vector<std::string>>();
        if (j.contains("noun_phrases"))
            rules.noun_phrases = j.at("noun_phrases").get<std::vector<std::string>>();
        if (j.contains("synonyms"))
            rules.synonyms = j.at("synonyms").get<std::map<std::string, std::string>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("title rules: ") + e.what());
    }
    return rules;
}

json title_rules_to_json(const TitleRules& rules)
{
    return {
        { "module_prefix_window", rules.module_prefix_window },
        { "special_token_patterns", rules.special_token_patterns },
        { "noun_phrases", rules.noun_phrases },
        { "synonyms", rules.synonyms },
    };
}

std::vector<std::string> tokenize_words(std::string_view s)
{
    std::vector<std::string> tokens;
    std::string current;
    for (char c : s) {
        auto uc = static_cast<unsigned char>(c);
        if (uc < 0x80 && std::isalpha(uc)) {
            current += static_cast<char>(std::tolower(uc));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty())
        tokens.push_back(std::move(current));
    return tokens;
}

namespace {

std::string strip_module_prefix(std::string raw, std::size_t window, std::vector<Removal>& removals)
{
    auto colon = raw.find(':');
    if (colon == std::string::npos)
        return raw;
    // Index of the whitespace token holding the colon.
    std::size_t token_index = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < colon; ++i) {
        if (text::is_space(raw[i])) {
            if (in_token)
                ++token_index;
            in_token = false;
        } else {
            in_token = true;
        }
    }
    if (token_index >= window)
        return raw;
    removals.push_back({ "module_prefix", std::string(text::trim(std::string_view(raw).substr(0, colon + 1))) });
    return raw.substr(colon + 1);
}

std::string strip_brackets(const std::string& raw, std::vector<Removal>& removals)
{
    std::string out;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (raw[i] == '[') {
            auto close = raw.find(']', i + 1);
            if (close != std::string::npos) {
                removals.push_back({ "bracket_tag", raw.substr(i, close - i + 1) });
                out += ' ';
                i = close + 1;
                continue;
            }
        }
        out += raw[i++];
    }
    return out;
}

std::string strip_special_tokens(const std::string& raw, const std::vector<std::string>& patterns,
                                 std::vector<Removal>& removals)
{
    std::vector<std::string> kept;
    for (auto& token : text::split_whitespace(raw)) {
        auto lowered = text::to_lower(token);
        bool special = std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
            return io::glob_match(text::to_lower(p), lowered);
        });
        if (special)
            removals.push_back({ "special_token", token });
        else
            kept.push_back(std::move(token));
    }
    return text::join(kept, " ");
}

void remove_phrases(std::vector<std::string>& tokens, const std::vector<std::string>& phrases,
                    std::vector<Removal>& removals)
{
    std::vector<std::vector<std::string>> phrase_tokens;
    for (const auto& p : phrases) {
        auto t = tokenize_words(p);
        if (!t.empty())
            phrase_tokens.push_back(std::move(t));
    }
    // Repeat until no phrase occurs, so that a removal that joins two halves of
    // a phrase is also caught.
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& phrase : phrase_tokens) {
            auto it = std::search(tokens.begin(), tokens.end(), phrase.begin(), phrase.end());
            if (it != tokens.end()) {
                removals.push_back({ "noun_phrase", text::join(phrase, " ") });
                tokens.erase(it, it + static_cast<std::ptrdiff_t>(phrase.size()));
                changed = true;
            }
        }
    }
}

} // namespace

CleanedTitle clean_title(std::string_view raw, const TitleRules& rules)
{
    CleanedTitle out;
    auto s = strip_module_prefix(std::string(raw), rules.module_prefix_window, out.removals);
    s = strip_brackets(s, out.removals);
    s = strip_special_tokens(s, rules.special_token_patterns, out.removals);

    for (auto& token : tokenize_words(s)) {
        if (token.size() < 2)
            out.removals.push_back({ "short_token", token });
        else
            out.tokens.push_back(std::move(token));
    }
    remove_phrases(out.tokens, rules.noun_phrases, out.removals);
    for (auto& token : out.tokens) {
        auto it = rules.synonyms.find(token);
        if (it != rules.synonyms.end())
            token = it->second;
    }
    return out;
}

PosSeed default_pos_seed()
{
    PosSeed seed;
    seed.verbs = { "add", "remove", "fix", "make", "fixed", "set", "avoid", "improve", "handling", "added",
                   // extension beyond the published top ten
                   "prevent", "read" };
    seed.prepositions = { "in", "for", "on", "of", "with", "from", "by", "before", "if", "after",
                          // extension beyond the published top ten
                          "during", "into", "when", "without", "via" };
    return seed;
}

PosSeed pos_seed_from_json(const json& j)
{
    PosSeed seed;
    try {
        seed.verbs = j.at("verbs").get<std::vector<std::string>>();
        seed.prepositions = j.at("prepositions").get<std::vector<std::string>>();
        if (j.contains("extension_verbs")) {
            for (auto& w : j.at("extension_verbs").get<std::vector<std::string>>())
                seed.verbs.push_back(std::move(w));
        }
        if (j.contains("extension_prepositions")) {
            for (auto& w : j.at("extension_prepositions").get<std::vector<std::string>>())
                seed.prepositions.push_back(std::move(w));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("vocabulary seed: ") + e.what());
    }
    return seed;
}

PosVocabulary::PosVocabulary(std::vector<RankedWord> verbs, std::vector<RankedWord> prepositions)
    : m_verbs(std::move(verbs))
    , m_prepositions(std::move(prepositions))
{
    for (const auto& w : m_verbs)
        m_verb_rank.emplace(w.word, w.rank);
    for (const auto& w : m_prepositions) {
        if (m_verb_rank.contains(w.word))
            throw ConfigError("vocabulary: \"" + w.word + "\" listed as both verb and preposition");
        m_prep_rank.emplace(w.word, w.rank);
    }
}

std::optional<std::size_t> PosVocabulary::verb_rank(std::string_view word) const
{
    auto it = m_verb_rank.find(word);
    if (it == m_verb_rank.end())
        return std::nullopt;
    return it->second;
}

std::optional<std::size_t> PosVocabulary::preposition_rank(std::string_view word) const
{
    auto it = m_prep_rank.find(word);
    if (it == m_prep_rank.end())
        return std::nullopt;
    return it->second;
}

namespace {

std::vector<RankedWord> rank_words(const std::vector<std::string>& seed, const std::map<std::string, std::size_t>& freq)
{
    std::vector<RankedWord> words;
    std::set<std::string> seen;
    for (const auto& w : seed) {
        auto lowered = text::to_lower(w);
        if (!seen.insert(lowered).second)
            continue;
        auto it = freq.find(lowered);
        words.push_back({ lowered, it == freq.end() ? 0 : it->second, 0 });
    }
    // stable: equal frequencies keep seed order, unseen (0) words go last
    std::stable_sort(words.begin(), words.end(),
                     [](const RankedWord& a, const RankedWord& b) { return a.frequency > b.frequency; });
    for (std::size_t i = 0; i < words.size(); ++i)
        words[i].rank = i + 1;
    return words;
}

} // namespace

PosVocabulary build_pos_vocabulary(const std::vector<std::vector<std::string>>& cleaned_titles, const PosSeed& seed)
{
    std::map<std::string, std::size_t> freq;
    for (const auto& title : cleaned_titles) {
        for (const auto& token : title)
            ++freq[token];
    }
    return PosVocabulary(rank_words(seed.verbs, freq), rank_words(seed.prepositions, freq));
}

json pos_vocabulary_to_json(const PosVocabulary& vocab)
{
    auto list = [](const std::vector<RankedWord>& words) {
        json out = json::array();
        for (const auto& w : words)
            out.push_back({ { "word", w.word }, { "frequency", w.frequency }, { "rank", w.rank } });
        return out;
    };
    return { { "verbs", list(vocab.verbs()) }, { "prepositions", list(vocab.prepositions()) } };
}

Targets select_targets(const std::vector<std::string>& tokens, const PosVocabulary& vocab)
{
    Targets targets;
    const std::size_t n = tokens.size();

    std::optional<std::size_t> verb;
    std::size_t best_rank = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (auto rank = vocab.verb_rank(tokens[i]); rank && (!verb || *rank < best_rank)) {
            verb = i;
            best_rank = *rank;
        }
    }

    if (verb) {
        for (std::size_t i = *verb + 2; i < n; ++i) {
            if (vocab.preposition_rank(tokens[i])) {
                targets.verb = verb;
                targets.preposition = i;
                return targets;
            }
        }
        // A verb with nothing after it cannot bound any keywords.
        if (*verb + 1 < n) {
            targets.verb = verb;
            return targets;
        }
    }

    for (std::size_t i = 1; i < n; ++i) {
        if (vocab.preposition_rank(tokens[i])) {
            targets.preposition = i;
            return targets;
        }
    }
    return targets;
}

std::string_view to_string(RuleFired rule)
{
    switch (rule) {
    case RuleFired::VerbAndPreposition:
        return "verb_and_preposition";
    case RuleFired::VerbOnly:
        return "verb_only";
    case RuleFired::PrepositionOnly:
        return "preposition_only";
    case RuleFired::NoTarget:
        return "no_target";
    }
    return "unknown";
}

TypeKeywords extract_type_keywords(const std::vector<std::string>& tokens, const Targets& targets)
{
    TypeKeywords out;
    if (targets.verb)
        out.target_verb = tokens.at(*targets.verb);
    if (targets.preposition)
        out.target_preposition = tokens.at(*targets.preposition);

    if (targets.verb && targets.preposition) {
        out.rule_fired = RuleFired::VerbAndPreposition;
        out.begin = *targets.verb + 1;
        out.end = *targets.preposition;
    } else if (targets.verb) {
        out.rule_fired = RuleFired::VerbOnly;
        out.begin = *targets.verb + 1;
        out.end = tokens.size();
    } else if (targets.preposition) {
        out.rule_fired = RuleFired::PrepositionOnly;
        out.begin = 0;
        out.end = *targets.preposition;
    } else {
        out.rule_fired = RuleFired::NoTarget;
        out.begin = 0;
        out.end = tokens.size();
    }
    out.keywords.assign(tokens.begin() + static_cast<std::ptrdiff_t>(out.begin),
                        tokens.begin() + static_cast<std::ptrdiff_t>(out.end));
    return out;
}

} // namespace vulnmine::titlekw
