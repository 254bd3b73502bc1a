#include "vulnmine/codesig.h"

#include "vulnmine/edit_distance.h"
#include "vulnmine/error.h"
#include "vulnmine/paths.h"
#include "vulnmine/text.h"

namespace vulnmine::codesig {

using nlohmann::json;

const LanguageConfig* CodesigConfig::language_for(std::string_view path) const
{
    for (const auto& lang : languages) {
        if (paths::has_suffix_in(path, lang.suffixes))
            return &lang;
    }
    return nullptr;
}

CodesigConfig default_codesig_config()
{
    CodesigConfig c;
    c.languages = {
        { "c-family",
          { ".c", ".cc", ".cpp", ".cxx", ".h", ".hh", ".hpp", ".java" },
          { "//" },
          "/*",
          "*/",
          { "#include", "#import", "import " },
          false,
          false },
        { "go", { ".go" }, { "//" }, "/*", "*/", { "import " }, true, true },
        { "python", { ".py" }, { "#" }, "", "", { "import ", "from " }, false, false },
        { "shell", { ".sh" }, { "#" }, "", "", {}, false, false },
    };
    c.test_path_markers = { "/test/", "/tests/", "/testdata/", "/qa/", "_test.", "/test_" };
    c.size_functions = { { "len", "LEN" }, { "length", "LEN" }, { "size", "SIZE" }, { "sizeof", "SIZE" } };
    c.error_functions = { "Errorf", "error", "perror", "strerror" };
    return c;
}

namespace {

LanguageConfig language_from_json(const json& j)
{
    LanguageConfig lang;
    lang.name = j.at("name").get<std::string>();
    lang.suffixes = j.at("suffixes").get<std::vector<std::string>>();
    lang.line_comments = j.value("line_comments", std::vector<std::string> {});
    lang.block_open = j.value("block_open", std::string {});
    lang.block_close = j.value("block_close", std::string {});
    lang.import_prefixes = j.value("import_prefixes", std::vector<std::string> {});
    lang.import_blocks = j.value("import_blocks", false);
    lang.raw_strings = j.value("raw_strings", false);
    if (lang.block_open.empty() != lang.block_close.empty())
        throw ConfigError("language " + lang.name + ": block comment needs both delimiters");
    return lang;
}

} // namespace

CodesigConfig codesig_config_from_json(const json& j)
{
    CodesigConfig c = default_codesig_config();
    try {
        if (j.contains("languages")) {
            c.languages.clear();
            for (const auto& l : j.at("languages"))
                c.languages.push_back(language_from_json(l));
        }
        if (j.contains("test_path_markers"))
            c.test_path_markers = j.at("test_path_markers").get<std::vector<std::string>>();
        if (j.contains("size_functions"))
            c.size_functions = j.at("size_functions").get<std::map<std::string, std::string>>();
        if (j.contains("error_functions"))
            c.error_functions = j.at("error_functions").get<std::vector<std::string>>();
        c.pair_threshold = j.value("pair_threshold", c.pair_threshold);
        c.drop_numeric = j.value("drop_numeric", c.drop_numeric);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("codesig config: ") + e.what());
    }
    for (const auto& [name, token] : c.size_functions) {
        if (token != "LEN" && token != "SIZE")
            throw ConfigError("codesig config: size function " + name + " must map to LEN or SIZE");
    }
    if (!(c.pair_threshold >= 0.0 && c.pair_threshold <= 1.0))
        throw ConfigError("codesig config: pair_threshold must lie in [0, 1]");
    return c;
}

json codesig_config_to_json(const CodesigConfig& c)
{
    json languages = json::array();
    for (const auto& l : c.languages) {
        languages.push_back({ { "name", l.name },
                              { "suffixes", l.suffixes },
                              { "line_comments", l.line_comments },
                              { "block_open", l.block_open },
                              { "block_close", l.block_close },
                              { "import_prefixes", l.import_prefixes },
                              { "import_blocks", l.import_blocks },
                              { "raw_strings", l.raw_strings } });
    }
    return { { "languages", languages },
             { "test_path_markers", c.test_path_markers },
             { "size_functions", c.size_functions },
             { "error_functions", c.error_functions },
             { "pair_threshold", c.pair_threshold },
             { "drop_numeric", c.drop_numeric } };
}

namespace {

// Lexical state of one side (old or new) of the file as the hunk is read.
struct SideState {
    bool in_block_comment = false;
    bool in_import_block = false;
};

bool starts_at(std::string_view s, std::size_t i, std::string_view what)
{
    return !what.empty() && s.substr(i, what.size()) == what;
}

std::string strip_comments(std::string_view line, const LanguageConfig& lang, SideState& state)
{
    std::string out;
    std::size_t i = 0;
    while (i < line.size()) {
        if (state.in_block_comment) {
            auto close = line.find(lang.block_close, i);
            if (close == std::string_view::npos)
                return out;
            state.in_block_comment = false;
            i = close + lang.block_close.size();
            out += ' ';
            continue;
        }
        char c = line[i];
        if (c == '"' || c == '\'' || (lang.raw_strings && c == '`')) {
            std::size_t j = i + 1;
            while (j < line.size() && line[j] != c) {
                if (line[j] == '\\' && c != '`')
                    ++j;
                ++j;
            }
            j = std::min(j + 1, line.size());
            out.append(line.substr(i, j - i));
            i = j;
            continue;
        }
        if (starts_at(line, i, lang.block_open)) {
            state.in_block_comment = true;
            i += lang.block_open.size();
            continue;
        }
        bool line_comment = false;
        for (const auto& marker : lang.line_comments) {
            if (starts_at(line, i, marker)) {
                line_comment = true;
                break;
            }
        }
        if (line_comment)
            break;
        out += c;
        ++i;
    }
    return out;
}

bool punctuation_only(std::string_view s)
{
    for (char c : s) {
        if (!text::is_space(c) && std::string_view("{}()[];,").find(c) == std::string_view::npos)
            return false;
    }
    return true;
}

// Classifies a stripped line as an import and updates the block state.
bool is_import(std::string_view trimmed, const LanguageConfig& lang, SideState& state)
{
    if (state.in_import_block) {
        if (!trimmed.empty() && trimmed.front() == ')')
            state.in_import_block = false;
        return true;
    }
    if (lang.import_blocks && trimmed.starts_with("import") && text::trim(trimmed.substr(6)).starts_with("(")) {
        state.in_import_block = trimmed.find(')') == std::string_view::npos;
        return true;
    }
    for (const auto& prefix : lang.import_prefixes) {
        if (trimmed.starts_with(prefix))
            return true;
    }
    return false;
}

} // namespace

std::optional<CleanHunk> clean_hunk(const corpus::Hunk& hunk, const CodesigConfig& config)
{
    const LanguageConfig* lang = config.language_for(hunk.file_path);
    if (!lang || paths::contains_marker(hunk.file_path, config.test_path_markers))
        return std::nullopt;

    CleanHunk out { hunk.file_path, hunk.header, {} };
    SideState old_side;
    SideState new_side;
    for (std::size_t i = 0; i < hunk.lines.size(); ++i) {
        const auto& line = hunk.lines[i];
        const std::size_t origin = i + 1;
        if (line.kind == corpus::LineKind::Context) {
            // Context lines exist on both sides; each side keeps its own state.
            std::string old_text = strip_comments(line.text, *lang, old_side);
            is_import(text::trim(old_text), *lang, old_side);
            std::string new_text = strip_comments(line.text, *lang, new_side);
            is_import(text::trim(new_text), *lang, new_side);
            out.lines.push_back({ line.kind, new_text, origin });
            continue;
        }
        SideState& state = line.kind == corpus::LineKind::Deleted ? old_side : new_side;
        std::string stripped = strip_comments(line.text, *lang, state);
        auto trimmed = text::trim(stripped);
        if (is_import(trimmed, *lang, state) || trimmed.empty() || punctuation_only(trimmed))
            continue;
        out.lines.push_back({ line.kind, stripped, origin });
    }
    return out;
}

std::vector<CodeFragment> split_fragments(const CleanHunk& hunk, std::string_view commit_id,
                                          std::string_view id_prefix)
{
    std::vector<CodeFragment> fragments;
    std::optional<CodeFragment> current;
    auto flush = [&] {
        if (current) {
            current->id = std::string(id_prefix) + "." + std::to_string(fragments.size() + 1);
            fragments.push_back(std::move(*current));
            current.reset();
        }
    };
    for (const auto& line : hunk.lines) {
        if (line.kind == corpus::LineKind::Context) {
            flush();
            continue;
        }
        if (!current)
            current = CodeFragment { {}, std::string(commit_id), hunk.file_path, {}, {} };
        auto& side = line.kind == corpus::LineKind::Deleted ? current->deleted : current->added;
        side.push_back({ std::string(text::trim(line.text)), line.origin });
    }
    flush();
    return fragments;
}

double line_similarity(std::string_view a, std::string_view b)
{
    a = text::trim(a);
    b = text::trim(b);
    return 1.0 - normalized_edit_distance(a, b);
}

std::vector<LinePair> pair_changed_lines(const CodeFragment& fragment, double threshold)
{
    std::vector<LinePair> matched;
    std::vector<bool> added_used(fragment.added.size(), false);
    std::vector<bool> deleted_used(fragment.deleted.size(), false);
    for (std::size_t d = 0; d < fragment.deleted.size(); ++d) {
        std::optional<std::size_t> best;
        double best_sim = -1.0;
        for (std::size_t a = 0; a < fragment.added.size(); ++a) {
            if (added_used[a])
                continue;
            double sim = line_similarity(fragment.deleted[d].text, fragment.added[a].text);
            if (sim > best_sim) {
                best_sim = sim;
                best = a;
            }
        }
        if (best && best_sim >= threshold) {
            added_used[*best] = true;
            deleted_used[d] = true;
            matched.push_back({ d, *best, best_sim });
        }
    }
    for (std::size_t d = 0; d < fragment.deleted.size(); ++d) {
        if (!deleted_used[d])
            matched.push_back({ d, std::nullopt, 0.0 });
    }
    for (std::size_t a = 0; a < fragment.added.size(); ++a) {
        if (!added_used[a])
            matched.push_back({ std::nullopt, a, 0.0 });
    }
    return matched;
}

} // namespace vulnmine::codesig
