#include <vulnmine/diff.h>
#include <vulnmine/error.h>
#include <vulnmine/text.h>

namespace vulnmine::corpus {

namespace {

std::string strip_path_prefix(std::string_view path)
{
    path = text::trim(path);
    // Drop a trailing tab-separated timestamp as written by diff -u.
    if (auto tab = path.find('\t'); tab != std::string_view::npos)
        path = path.substr(0, tab);
    if (path.starts_with("a/") || path.starts_with("b/"))
        path.remove_prefix(2);
    return std::string(path);
}

} // namespace

std::vector<Hunk> parse_unified_diff(std::string_view content)
{
    std::vector<Hunk> hunks;
    std::string old_path;
    std::string new_path;
    Hunk* current = nullptr;

    auto lines = text::split_lines(content);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto& line = lines[n];
        if (line.starts_with("diff ") || line.starts_with("index ")) {
            current = nullptr;
            continue;
        }
        if (line.starts_with("--- ") && (n + 1 < lines.size() && lines[n + 1].starts_with("+++ "))) {
            old_path = strip_path_prefix(std::string_view(line).substr(4));
            new_path = strip_path_prefix(std::string_view(lines[n + 1]).substr(4));
            ++n;
            current = nullptr;
            continue;
        }
        if (line.starts_with("@@")) {
            Hunk hunk;
            hunk.file_path = new_path == "/dev/null" ? old_path : new_path;
            hunk.header = line;
            hunks.push_back(std::move(hunk));
            current = &hunks.back();
            continue;
        }
        if (!current)
            continue;
        if (line.starts_with("\\"))
            continue; // "\ No newline at end of file"
        if (line.empty()) {
            current->lines.push_back({ LineKind::Context, "" });
            continue;
        }
        switch (line.front()) {
        case '+':
            current->lines.push_back({ LineKind::Added, line.substr(1) });
            break;
        case '-':
            current->lines.push_back({ LineKind::Deleted, line.substr(1) });
            break;
        case ' ':
            current->lines.push_back({ LineKind::Context, line.substr(1) });
            break;
        default:
            throw LoadError("diff line " + std::to_string(n + 1) + ": unexpected marker '" + line.substr(0, 1) + "'");
        }
    }
    return hunks;
}

std::string render_unified_diff(const std::vector<Hunk>& hunks)
{
    std::string out;
    const std::string* last_path = nullptr;
    for (const auto& hunk : hunks) {
        if (!last_path || *last_path != hunk.file_path) {
            out += "--- a/" + hunk.file_path + "\n+++ b/" + hunk.file_path + "\n";
            last_path = &hunk.file_path;
        }
        out += hunk.header + "\n";
        for (const auto& line : hunk.lines) {
            char marker = line.kind == LineKind::Added ? '+' : line.kind == LineKind::Deleted ? '-' : ' ';
            out += marker;
            out += line.text;
            out += '\n';
        }
    }
    return out;
}

} // namespace vulnmine::corpus
