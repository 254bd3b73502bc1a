#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <vulnmine/corpus.h>

namespace vulnmine::corpus {

// Parses git-style unified diff text into hunks. File paths come from the
// "+++ b/..." header (or "--- a/..." for deletions); the hunk header keeps the
// full "@@ ... @@ context" line.
std::vector<Hunk> parse_unified_diff(std::string_view text);

std::string render_unified_diff(const std::vector<Hunk>& hunks);

} // namespace vulnmine::corpus
