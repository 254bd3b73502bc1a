#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

namespace vulnmine {

// Unit-cost Levenshtein distance over any two random-access sequences whose
// elements compare with ==. Two-row dynamic programming.
template<typename SeqA, typename SeqB>
std::size_t levenshtein(const SeqA& a, const SeqB& b)
{
    const std::size_t n = std::size(a);
    const std::size_t m = std::size(b);
    if (n == 0)
        return m;
    if (m == 0)
        return n;

    std::vector<std::size_t> prev(m + 1);
    std::vector<std::size_t> cur(m + 1);
    std::iota(prev.begin(), prev.end(), std::size_t { 0 });
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t substitution = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({ prev[j] + 1, cur[j - 1] + 1, substitution });
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

// Edit distance divided by the longer length; 0 when both are empty.
template<typename SeqA, typename SeqB>
double normalized_edit_distance(const SeqA& a, const SeqB& b)
{
    const std::size_t longest = std::max(std::size(a), std::size(b));
    if (longest == 0)
        return 0.0;
    return static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

} // namespace vulnmine
