#include <vulnmine/patscan.h>

#include <algorithm>
#include <regex>
#include <set>

#include <vulnmine/error.h>
#include <vulnmine/text.h>

namespace vulnmine::scan {

namespace {

// Two views of one source file, both the length of the input with newlines
// kept: `code` drops comments, `mask` also blanks literal contents and
// preprocessor lines so that only structural punctuation remains.
struct Views {
    std::string code;
    std::string mask;
};

bool raw_string_start(std::string_view s, std::size_t i)
{
    // R"delim( preceded by nothing, a non-identifier char or an encoding prefix.
    if (i == 0 || s[i - 1] != 'R')
        return false;
    std::size_t p = i - 1;
    std::size_t start = p;
    while (start > 0 && text::is_ident_char(s[start - 1]))
        --start;
    auto prefix = s.substr(start, p - start);
    return prefix.empty() || prefix == "u8" || prefix == "u" || prefix == "U" || prefix == "L";
}

bool char_literal_start(std::string_view s, std::size_t i)
{
    // A quote right after a digit is a C++14 digit separator.
    if (i == 0)
        return true;
    char prev = s[i - 1];
    if (!text::is_ident_char(prev))
        return true;
    std::size_t start = i;
    while (start > 0 && text::is_ident_char(s[start - 1]))
        --start;
    auto prefix = s.substr(start, i - start);
    return prefix == "u8" || prefix == "u" || prefix == "U" || prefix == "L";
}

Views make_views(std::string_view s, SourceLanguage lang)
{
    Views v { std::string(s), std::string(s) };
    auto blank = [&](std::size_t from, std::size_t to, bool code_too) {
        for (std::size_t k = from; k < to && k < s.size(); ++k) {
            if (s[k] == '\n')
                continue;
            v.mask[k] = ' ';
            if (code_too)
                v.code[k] = ' ';
        }
    };
    bool line_start = true;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == '\n') {
            line_start = true;
            ++i;
            continue;
        }
        if (lang == SourceLanguage::CFamily && line_start && c == '#') {
            auto j = i;
            while (j < s.size() && s[j] != '\n')
                ++j;
            while (j < s.size() && j > i && s[j - 1] == '\\' && j + 1 < s.size()) {
                ++j;
                while (j < s.size() && s[j] != '\n')
                    ++j;
            }
            // Comments inside directives are left in `code`; directives sign empty.
            blank(i, j, false);
            i = j;
            continue;
        }
        if (!text::is_space(c))
            line_start = false;
        if (c == '/' && i + 1 < s.size() && s[i + 1] == '/') {
            auto j = s.find('\n', i);
            if (j == std::string_view::npos)
                j = s.size();
            blank(i, j, true);
            i = j;
            continue;
        }
        if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
            auto j = s.find("*/", i + 2);
            j = j == std::string_view::npos ? s.size() : j + 2;
            blank(i, j, true);
            i = j;
            continue;
        }
        if (lang == SourceLanguage::Go && c == '`') {
            auto j = s.find('`', i + 1);
            j = j == std::string_view::npos ? s.size() : j + 1;
            blank(i + 1, j - 1, false);
            i = j;
            continue;
        }
        if (lang == SourceLanguage::CFamily && c == '"' && raw_string_start(s, i)) {
            auto open = s.find('(', i + 1);
            if (open != std::string_view::npos) {
                std::string close = ")" + std::string(s.substr(i + 1, open - i - 1)) + "\"";
                auto j = s.find(close, open);
                j = j == std::string_view::npos ? s.size() : j + close.size();
                blank(i + 1, j - 1, false);
                i = j;
                continue;
            }
        }
        if (c == '"' || (c == '\'' && char_literal_start(s, i))) {
            auto j = i + 1;
            while (j < s.size() && s[j] != c && s[j] != '\n') {
                if (s[j] == '\\')
                    ++j;
                ++j;
            }
            auto end = std::min(j, s.size());
            blank(i + 1, end, false);
            i = end < s.size() && s[end] == c ? end + 1 : end;
            continue;
        }
        ++i;
    }
    return v;
}

class LineIndex {
public:
    explicit LineIndex(std::string_view s)
    {
        m_starts.push_back(0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '\n')
                m_starts.push_back(i + 1);
        }
    }

    std::size_t line_of(std::size_t pos) const
    {
        return static_cast<std::size_t>(std::upper_bound(m_starts.begin(), m_starts.end(), pos) - m_starts.begin());
    }

private:
    std::vector<std::size_t> m_starts;
};

std::string collapse(std::string_view s)
{
    std::string out;
    for (char c : s) {
        if (text::is_space(c)) {
            if (!out.empty() && out.back() != ' ')
                out += ' ';
        } else {
            out += c;
        }
    }
    while (!out.empty() && out.back() == ' ')
        out.pop_back();
    return out;
}

enum class BlockKind { Function, Container, Other };

struct Classified {
    BlockKind kind = BlockKind::Other;
    std::string name;
};

const std::regex& access_label()
{
    static const std::regex re(R"(^(?:(?:public|private|protected|signals|slots|Q_SLOTS|Q_SIGNALS)\s*:(?!:)\s*)+)");
    return re;
}

Classified classify_cfamily(std::string header)
{
    header = std::regex_replace(collapse(header), access_label(), "");
    if (header.empty())
        return {};
    static const std::regex container(R"(^(?:namespace\b.*|extern\s*"[^"]*"|(?:template\s*<.*>\s*)?(?:class|struct|union)\b[^()]*)$)");
    if (std::regex_match(header, container))
        return { BlockKind::Container, {} };

    static const std::regex name_re(
        R"(((?:~?[A-Za-z_]\w*\s*(?:<[^<>()]*>)?\s*::\s*)*(?:operator\s*(?:\(\)|[^\s(]+)|~?[A-Za-z_]\w*))\s*\()");
    static const std::set<std::string> keywords = { "if", "for", "while", "switch", "catch", "return", "sizeof",
                                                    "decltype", "alignas", "static_assert", "defined", "do", "else",
                                                    "alignof", "typeid", "new", "delete", "throw" };
    static const std::regex tail_re(
        R"(^\s*(?:(?:const|volatile|override|final|mutable|try|noexcept(?:\s*\([^()]*\))?|throw\s*\([^()]*\)|&&?|[A-Z_][A-Z0-9_]*(?:\s*\([^()]*\))?)\s*)*(?:->[^{;=]*)?(?::(?!:).*)?$)");

    // The first name( whose parameter list is followed only by qualifiers,
    // attribute macros, a trailing return type or an initializer list.
    for (std::sregex_iterator it(header.begin(), header.end(), name_re), end; it != end; ++it) {
        const auto& m = *it;
        auto name_pos = static_cast<std::size_t>(m.position(1));
        if (header.substr(0, name_pos).find('=') != std::string::npos)
            return {};
        // "Foo<T>::bar" is reported as "Foo::bar".
        std::string name;
        int angle = 0;
        for (char c : m.str(1)) {
            if (c == '<' && name.rfind("operator", 0) != 0)
                ++angle;
            else if (c == '>' && angle > 0)
                --angle;
            else if (angle == 0 && !text::is_space(c))
                name += c;
        }
        auto last = name.rfind("::");
        auto base = last == std::string::npos ? name : name.substr(last + 2);
        if (keywords.count(base))
            continue;

        std::size_t open = static_cast<std::size_t>(m.position(0) + m.length(0)) - 1;
        int depth = 0;
        std::size_t close = std::string::npos;
        for (std::size_t k = open; k < header.size(); ++k) {
            if (header[k] == '(')
                ++depth;
            else if (header[k] == ')' && --depth == 0) {
                close = k;
                break;
            }
        }
        if (close == std::string::npos)
            return {};
        if (std::regex_match(header.substr(close + 1), tail_re))
            return { BlockKind::Function, name };
    }
    return {};
}

Classified classify_go(const std::string& header)
{
    auto h = collapse(header);
    static const std::regex func_re(R"(^func\s*(?:\(\s*(?:\w+\s+)?\*?\s*([\w.]+)(?:\[[^\]]*\])?\s*\)\s*)?([A-Za-z_]\w*)\s*(?:\[[^\]]*\])?\s*\()");
    std::smatch m;
    if (!std::regex_search(h, m, func_re))
        return {};
    std::string name = m[1].matched ? m.str(1) + "." + m.str(2) : m.str(2);
    return { BlockKind::Function, name };
}

bool ends_with_word(std::string_view header, std::string_view word)
{
    auto t = text::trim(header);
    if (t.size() < word.size() || t.substr(t.size() - word.size()) != word)
        return false;
    return t.size() == word.size() || !text::is_ident_char(t[t.size() - word.size() - 1]);
}

class Extractor {
public:
    Extractor(std::string_view source, SourceLanguage lang)
        : m_source(source)
        , m_lang(lang)
        , m_views(make_views(source, lang))
        , m_lines(source)
    {
    }

    std::vector<SourceFunction> run()
    {
        auto end = parse_block(0, false);
        (void)end;
        return std::move(m_out);
    }

private:
    std::size_t match_brace(std::size_t open) const
    {
        int depth = 0;
        const auto& mask = m_views.mask;
        for (std::size_t k = open; k < mask.size(); ++k) {
            if (mask[k] == '{')
                ++depth;
            else if (mask[k] == '}' && --depth == 0)
                return k;
        }
        throw InvalidArgument("unbalanced braces: '{' on line " + std::to_string(m_lines.line_of(open)) +
                              " is never closed");
    }

    // Returns the position of the closing brace of a container, or the end of
    // input at the top level.
    std::size_t parse_block(std::size_t pos, bool nested)
    {
        const auto& mask = m_views.mask;
        std::size_t header_start = pos;
        int parens = 0;
        for (std::size_t i = pos; i < mask.size(); ++i) {
            char c = mask[i];
            if (c == '(') {
                ++parens;
            } else if (c == ')') {
                parens = std::max(0, parens - 1);
            } else if (c == ';') {
                header_start = i + 1;
                parens = 0;
            } else if (c == '\n' && m_lang == SourceLanguage::Go && parens == 0) {
                header_start = i + 1;
            } else if (c == '}') {
                if (!nested)
                    throw InvalidArgument("unbalanced braces: unexpected '}' on line " +
                                          std::to_string(m_lines.line_of(i)));
                return i;
            } else if (c == '{') {
                auto header = mask.substr(header_start, i - header_start);
                auto close = match_brace(i);
                // Braces inside a parameter list or after a Go type keyword belong
                // to the header.
                if (parens > 0 || (m_lang == SourceLanguage::Go &&
                                   (ends_with_word(header, "interface") || ends_with_word(header, "struct")))) {
                    i = close;
                    continue;
                }
                auto cls = m_lang == SourceLanguage::Go ? classify_go(header) : classify_cfamily(header);
                if (cls.kind == BlockKind::Function) {
                    record(cls.name, header_start, i, close);
                } else if (cls.kind == BlockKind::Container) {
                    close = parse_block(i + 1, true);
                }
                i = close;
                header_start = close + 1;
                parens = 0;
            }
        }
        if (nested)
            throw InvalidArgument("unbalanced braces: block not closed before end of file");
        return mask.size();
    }

    void record(const std::string& name, std::size_t header_start, std::size_t open, std::size_t close)
    {
        const auto& mask = m_views.mask;
        auto first = header_start;
        while (first < open && text::is_space(mask[first]))
            ++first;
        if (m_lang == SourceLanguage::CFamily) {
            std::match_results<std::string::const_iterator> label;
            if (std::regex_search(mask.cbegin() + static_cast<std::ptrdiff_t>(first),
                                  mask.cbegin() + static_cast<std::ptrdiff_t>(open), label, access_label(),
                                  std::regex_constants::match_continuous))
                first += static_cast<std::size_t>(label.length(0));
        }
        SourceFunction f;
        f.name = name;
        f.begin_line = m_lines.line_of(first);
        f.end_line = m_lines.line_of(close);
        f.body_line = m_lines.line_of(open);
        f.body = text::split_lines(std::string_view(m_views.code).substr(open + 1, close - open - 1));
        m_out.push_back(std::move(f));
    }

    std::string_view m_source;
    SourceLanguage m_lang;
    Views m_views;
    LineIndex m_lines;
    std::vector<SourceFunction> m_out;
};

} // namespace

std::vector<SourceFunction> extract_functions(std::string_view source, SourceLanguage language)
{
    return Extractor(source, language).run();
}

} // namespace vulnmine::scan
