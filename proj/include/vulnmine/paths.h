#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <vulnmine/text.h>

namespace vulnmine::paths {

// Lowercased extension including the dot ("src/a.CPP" -> ".cpp"); empty if none.
inline std::string suffix_of(std::string_view path)
{
    auto slash = path.rfind('/');
    auto base = slash == std::string_view::npos ? path : path.substr(slash + 1);
    auto dot = base.rfind('.');
    if (dot == std::string_view::npos || dot == 0)
        return {};
    return text::to_lower(base.substr(dot));
}

inline bool has_suffix_in(std::string_view path, const std::vector<std::string>& suffixes)
{
    auto s = suffix_of(path);
    for (const auto& candidate : suffixes) {
        if (text::to_lower(candidate) == s)
            return true;
    }
    return false;
}

// Markers are matched as substrings of "/" + path, so "/test/" also catches a
// top-level "test/" directory without matching "latest/".
inline bool contains_marker(std::string_view path, const std::vector<std::string>& markers)
{
    std::string rooted = "/" + std::string(path);
    for (const auto& m : markers) {
        if (!m.empty() && rooted.find(m) != std::string::npos)
            return true;
    }
    return false;
}

} // namespace vulnmine::paths
