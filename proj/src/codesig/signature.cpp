#include "vulnmine/codesig.h"

#include <algorithm>
#include <array>
#include <set>

#include <spdlog/spdlog.h>

#include "vulnmine/edit_distance.h"
#include "vulnmine/text.h"

namespace vulnmine::codesig {

namespace {

enum class TokenKind { Ident, Number, Text, Op, Open, Close };

struct Token {
    TokenKind kind;
    std::string text;

    bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
    bool is_op(std::string_view t) const { return is(TokenKind::Op, t); }
    bool is_ident(std::string_view t) const { return is(TokenKind::Ident, t); }
};

using Tokens = std::vector<Token>;

constexpr std::array kMultiCharOps = { "<<=", ">>=", "...", "->", "::", ":=", "==", "!=", "<=", ">=", "&&", "||",
                                       "++",  "--",  "+=",  "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
                                       "<-" };

Tokens lex(std::string_view s)
{
    Tokens out;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (text::is_space(c)) {
            ++i;
            continue;
        }
        if (text::is_ident_start(c)) {
            std::size_t j = i;
            while (j < s.size() && text::is_ident_char(s[j]))
                ++j;
            out.push_back({ TokenKind::Ident, std::string(s.substr(i, j - i)) });
            i = j;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))
            || (c == '.' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
            std::size_t j = i;
            while (j < s.size() && (text::is_ident_char(s[j]) || s[j] == '.'))
                ++j;
            out.push_back({ TokenKind::Number, std::string(s.substr(i, j - i)) });
            i = j;
            continue;
        }
        if (c == '"' || c == '\'' || c == '`') {
            std::size_t j = i + 1;
            while (j < s.size() && s[j] != c) {
                if (s[j] == '\\' && c != '`')
                    ++j;
                ++j;
            }
            j = std::min(j + 1, s.size());
            out.push_back({ TokenKind::Text, std::string(s.substr(i, j - i)) });
            i = j;
            continue;
        }
        if (c == '(' || c == '[' || c == '{') {
            out.push_back({ TokenKind::Open, std::string(1, c) });
            ++i;
            continue;
        }
        if (c == ')' || c == ']' || c == '}') {
            out.push_back({ TokenKind::Close, std::string(1, c) });
            ++i;
            continue;
        }
        std::string op(1, c);
        for (std::string_view candidate : kMultiCharOps) {
            if (s.substr(i, candidate.size()) == candidate) {
                op = candidate;
                break;
            }
        }
        out.push_back({ TokenKind::Op, op });
        i += op.size();
    }
    return out;
}

// Half-open token range.
struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;
    bool empty() const { return begin >= end; }
};

// Index of the bracket closing the one at `open`, or `end` when unbalanced.
std::size_t matching_close(const Tokens& t, std::size_t open, std::size_t end)
{
    int depth = 0;
    for (std::size_t i = open; i < end; ++i) {
        if (t[i].kind == TokenKind::Open)
            ++depth;
        else if (t[i].kind == TokenKind::Close && --depth == 0)
            return i;
    }
    return end;
}

const std::set<std::string, std::less<>> kNonCallWords = { "if",   "for",  "while", "switch", "catch",
                                                           "return", "throw", "defer", "func", "else",
                                                           "case", "do",   "try",   "go",   "select",
                                                           "range", "elif" };
const std::set<std::string, std::less<>> kEmptyStatementWords = { "break", "continue", "goto",  "case", "default",
                                                                  "do",    "try",      "catch", "switch", "select",
                                                                  "else",  "fallthrough" };
const std::set<std::string, std::less<>> kNilWords = { "nil", "null", "NULL", "nullptr", "None", "none" };
const std::set<std::string, std::less<>> kBoolWords = { "true", "false", "True", "False", "TRUE", "FALSE" };
const std::set<std::string, std::less<>> kAssignOps = { "=",  ":=", "+=", "-=", "*=",  "/=", "%=",
                                                        "&=", "|=", "^=", "<<=", ">>=" };

// Candidate abstraction classes, higher wins.
enum Rank { RankNum = 0, RankTxt, RankBol, RankNil, RankSize, RankErr, RankCall };

struct Candidate {
    Rank rank;
    int depth;
    std::size_t position;
    std::string token;
};

class Abstractor {
public:
    explicit Abstractor(const CodesigConfig& config)
        : m_config(config)
    {
    }

    // Walks the range with call arguments masked and records every operand
    // that maps to an abstraction.
    std::vector<Candidate> candidates(const Tokens& t, Range r) const
    {
        std::vector<Candidate> out;
        int depth = 0;
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const Token& tok = t[i];
            if (tok.kind == TokenKind::Ident && i + 1 < r.end && t[i + 1].is(TokenKind::Open, "(")
                && !kNonCallWords.count(tok.text)) {
                out.push_back(call_candidate(tok.text, depth, i));
                i = matching_close(t, i + 1, r.end);
                continue;
            }
            switch (tok.kind) {
            case TokenKind::Open:
                ++depth;
                break;
            case TokenKind::Close:
                --depth;
                break;
            case TokenKind::Ident:
                if (kNilWords.count(tok.text))
                    out.push_back({ RankNil, depth, i, "NIL" });
                else if (kBoolWords.count(tok.text))
                    out.push_back({ RankBol, depth, i, "BOL" });
                break;
            case TokenKind::Text:
                out.push_back({ RankTxt, depth, i, "TXT" });
                break;
            case TokenKind::Number:
                if (m_config.drop_numeric)
                    spdlog::trace("signature: numeric operand {} dropped", tok.text);
                else
                    out.push_back({ RankNum, depth, i, "NUM" });
                break;
            case TokenKind::Op:
                break;
            }
        }
        return out;
    }

    // Most specific operand: highest rank, then shallowest, then last.
    std::optional<std::string> most_specific(const Tokens& t, Range r) const
    {
        auto c = candidates(t, r);
        if (c.empty())
            return std::nullopt;
        auto best = c.front();
        for (const auto& x : c) {
            if (x.rank > best.rank || (x.rank == best.rank && x.depth <= best.depth))
                best = x;
        }
        return best.token;
    }

    // Last call among the shallowest calls of the range.
    std::optional<std::string> last_call(const Tokens& t, Range r) const
    {
        std::optional<Candidate> best;
        for (const auto& c : candidates(t, r)) {
            if (c.rank < RankSize)
                continue;
            if (!best || c.depth <= best->depth)
                best = c;
        }
        if (!best)
            return std::nullopt;
        return best->token;
    }

private:
    Candidate call_candidate(const std::string& name, int depth, std::size_t position) const
    {
        auto size = m_config.size_functions.find(name);
        if (size != m_config.size_functions.end())
            return { RankSize, depth, position, size->second };
        if (std::find(m_config.error_functions.begin(), m_config.error_functions.end(), name)
            != m_config.error_functions.end())
            return { RankErr, depth, position, "ERR" };
        return { RankCall, depth, position, name + "()" };
    }

    const CodesigConfig& m_config;
};

bool is_logical(const Token& t)
{
    return t.is_op("||") || t.is_op("&&");
}

class LineSigner {
public:
    explicit LineSigner(const CodesigConfig& config)
        : m_abstractor(config)
    {
    }

    void sign(const Tokens& t, Range r, Signature& out) const
    {
        while (!r.empty() && (t[r.begin].is(TokenKind::Close, "}") || t[r.begin].is_ident("else")))
            ++r.begin;
        while (!r.empty() && (t[r.end - 1].is_op(";") || t[r.end - 1].is(TokenKind::Open, "{")))
            --r.end;
        if (r.empty())
            return;

        const Token& first = t[r.begin];
        if (first.is_op("#"))
            return;
        if (first.kind == TokenKind::Ident) {
            if (first.text == "if" || first.text == "while" || first.text == "for") {
                sign_control(t, r, out);
                return;
            }
            if (first.text == "return" || first.text == "throw" || first.text == "defer") {
                out.push_back(first.text);
                if (auto a = m_abstractor.most_specific(t, { r.begin + 1, r.end }))
                    out.push_back(*a);
                return;
            }
            if (kEmptyStatementWords.count(first.text))
                return;
        }

        if (auto call = m_abstractor.last_call(t, r)) {
            out.push_back(*call);
            return;
        }
        sign_variable(t, r, out);
    }

private:
    void sign_control(const Tokens& t, Range r, Signature& out) const
    {
        out.push_back(t[r.begin].text);
        std::size_t start = r.begin + 1;
        Range condition { start, r.end };
        Range rest { r.end, r.end };
        if (start < r.end && t[start].is(TokenKind::Open, "(")) {
            std::size_t close = matching_close(t, start, r.end);
            bool parenthesized = close + 1 >= r.end || t[close + 1].kind == TokenKind::Ident
                || t[close + 1].is(TokenKind::Open, "{");
            if (close < r.end && parenthesized) {
                condition = { start + 1, close };
                rest = { close + 1, r.end };
            }
        }
        if (rest.empty() && condition.end == r.end) {
            // Braced body on the same line: "if x { return y }".
            int depth = 0;
            for (std::size_t i = condition.begin; i < condition.end; ++i) {
                if (t[i].is(TokenKind::Open, "{") && depth == 0 && i > condition.begin
                    && matching_close(t, i, r.end) == r.end - 1) {
                    rest = { i + 1, r.end - 1 };
                    condition.end = i;
                    break;
                }
                if (t[i].kind == TokenKind::Open)
                    ++depth;
                else if (t[i].kind == TokenKind::Close)
                    --depth;
            }
        }
        sign_condition(t, condition, out);
        if (!rest.empty()) {
            if (rest.begin < rest.end && t[rest.begin].is(TokenKind::Open, "{")) {
                std::size_t close = matching_close(t, rest.begin, rest.end);
                rest = { rest.begin + 1, close };
            }
            sign(t, rest, out);
        }
    }

    void sign_condition(const Tokens& t, Range r, Signature& out) const
    {
        int depth = 0;
        std::size_t atom_start = r.begin;
        std::optional<std::string> pending_op;
        bool segment_has_output = false;
        auto emit_atom = [&](std::size_t end) {
            auto a = m_abstractor.most_specific(t, { atom_start, end });
            if (a) {
                if (segment_has_output && pending_op)
                    out.push_back(*pending_op);
                out.push_back(*a);
                segment_has_output = true;
            }
        };
        for (std::size_t i = r.begin; i < r.end; ++i) {
            const Token& tok = t[i];
            if (tok.kind == TokenKind::Open) {
                ++depth;
            } else if (tok.kind == TokenKind::Close) {
                --depth;
            } else if (depth == 0 && is_logical(tok)) {
                emit_atom(i);
                pending_op = tok.text;
                atom_start = i + 1;
            } else if (depth == 0 && tok.is_op(";")) {
                emit_atom(i);
                pending_op.reset();
                segment_has_output = false;
                atom_start = i + 1;
            }
        }
        emit_atom(r.end);
    }

    void sign_variable(const Tokens& t, Range r, Signature& out) const
    {
        std::size_t lhs_end = r.end;
        int depth = 0;
        for (std::size_t i = r.begin; i < r.end; ++i) {
            if (t[i].kind == TokenKind::Open)
                ++depth;
            else if (t[i].kind == TokenKind::Close)
                --depth;
            else if (depth == 0 && t[i].kind == TokenKind::Op && kAssignOps.count(t[i].text)) {
                lhs_end = i;
                break;
            }
        }
        std::optional<std::size_t> variable;
        depth = 0;
        for (std::size_t i = r.begin; i < lhs_end; ++i) {
            if (t[i].kind == TokenKind::Open)
                ++depth;
            else if (t[i].kind == TokenKind::Close)
                --depth;
            else if (depth == 0 && t[i].kind == TokenKind::Ident)
                variable = i;
        }
        if (!variable)
            return;
        std::string token = "VAR";
        std::size_t i = *variable + 1;
        while (i < lhs_end && t[i].is(TokenKind::Open, "[")) {
            token += "[]";
            i = matching_close(t, i, lhs_end) + 1;
        }
        out.push_back(token);
    }

    Abstractor m_abstractor;
};

} // namespace

Signature line_signature(std::string_view line, const CodesigConfig& config)
{
    Tokens tokens = lex(line);
    Signature out;
    LineSigner(config).sign(tokens, { 0, tokens.size() }, out);
    return out;
}

FragmentSignature fragment_signature(const CodeFragment& fragment, const std::vector<LinePair>& pairs,
                                     const CodesigConfig& config)
{
    FragmentSignature out;
    auto append = [&](const Signature& s) { out.tokens.insert(out.tokens.end(), s.begin(), s.end()); };
    for (const auto& p : pairs) {
        Signature del = p.deleted ? line_signature(fragment.deleted.at(*p.deleted).text, config) : Signature {};
        Signature add = p.added ? line_signature(fragment.added.at(*p.added).text, config) : Signature {};
        if (!del.empty() && !add.empty() && del != add) {
            append(del);
            out.tokens.emplace_back(kPairSeparator);
            append(add);
        } else {
            append(del.empty() ? add : del);
        }
    }
    out.empty = out.tokens.empty();
    return out;
}

std::string join_signature(const Signature& s)
{
    return text::join(s, " ");
}

double normalized_levenshtein(const Signature& a, const Signature& b)
{
    return normalized_edit_distance(a, b);
}

cluster::DistanceMatrix signature_distance_matrix(const std::vector<std::string>& ids,
                                                  const std::vector<Signature>& signatures, std::size_t jobs)
{
    return cluster::pairwise_distance_matrix(
        ids, [&](std::size_t i, std::size_t j) { return normalized_levenshtein(signatures.at(i), signatures.at(j)); },
        jobs);
}

std::vector<FragmentRecord> analyze_commit(const corpus::CommitRecord& commit, const CodesigConfig& config)
{
    std::vector<FragmentRecord> out;
    for (std::size_t h = 0; h < commit.hunks.size(); ++h) {
        auto cleaned = clean_hunk(commit.hunks[h], config);
        if (!cleaned)
            continue;
        auto prefix = commit.id + "#" + std::to_string(h + 1);
        for (auto& fragment : split_fragments(*cleaned, commit.id, prefix)) {
            auto pairs = pair_changed_lines(fragment, config.pair_threshold);
            auto signature = fragment_signature(fragment, pairs, config);
            out.push_back({ std::move(fragment), std::move(pairs), std::move(signature) });
        }
    }
    return out;
}

nlohmann::json fragment_record_to_json(const FragmentRecord& r)
{
    auto lines = [](const std::vector<FragmentLine>& side) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& l : side)
            a.push_back({ { "origin", l.origin }, { "text", l.text } });
        return a;
    };
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : r.pairs) {
        pairs.push_back({ { "deleted", p.deleted ? nlohmann::json(*p.deleted) : nlohmann::json(nullptr) },
                          { "added", p.added ? nlohmann::json(*p.added) : nlohmann::json(nullptr) },
                          { "similarity", p.similarity } });
    }
    return { { "id", r.fragment.id },
             { "commit", r.fragment.commit_id },
             { "file", r.fragment.file_path },
             { "deleted", lines(r.fragment.deleted) },
             { "added", lines(r.fragment.added) },
             { "pairs", pairs },
             { "signature", r.signature.tokens },
             { "signature_text", join_signature(r.signature.tokens) },
             { "empty", r.signature.empty } };
}

} // namespace vulnmine::codesig
