#include "vulnmine/textcluster.h"

#include <charconv>
#include <cmath>

#include "vulnmine/error.h"
#include "vulnmine/io.h"
#include "vulnmine/text.h"

namespace vulnmine::cluster {

void EmbeddingTable::add(std::string word, std::vector<double> vector)
{
    if (vector.size() != m_dimension)
        throw InvalidArgument("embedding for \"" + word + "\" has dimension " + std::to_string(vector.size())
                              + ", expected " + std::to_string(m_dimension));
    if (m_index.find(word) != m_index.end())
        throw InvalidArgument("duplicate embedding for word \"" + word + "\"");
    m_index.emplace(std::move(word), m_values.size() / std::max<std::size_t>(m_dimension, 1));
    m_values.insert(m_values.end(), vector.begin(), vector.end());
}

std::optional<std::span<const double>> EmbeddingTable::lookup(std::string_view word) const
{
    auto it = m_index.find(word);
    if (it == m_index.end())
        return std::nullopt;
    return std::span<const double>(m_values.data() + it->second * m_dimension, m_dimension);
}

namespace {

template<typename T>
bool parse_number(std::string_view s, T& out)
{
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void fail_at(std::size_t line_no, const std::string& what)
{
    throw LoadError("embeddings line " + std::to_string(line_no) + ": " + what);
}

} // namespace

EmbeddingTable parse_embeddings(std::string_view content)
{
    auto lines = text::split_lines(content);
    std::size_t first = 0;
    while (first < lines.size() && text::trim(lines[first]).empty())
        ++first;
    if (first == lines.size())
        throw LoadError("embeddings: missing \"count dim\" header");

    auto header = text::split_whitespace(lines[first]);
    std::size_t count = 0;
    std::size_t dim = 0;
    if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) || dim == 0)
        fail_at(first + 1, "malformed header, expected \"count dim\"");

    EmbeddingTable table(dim);
    for (std::size_t i = first + 1; i < lines.size(); ++i) {
        auto fields = text::split_whitespace(lines[i]);
        if (fields.empty())
            continue;
        if (fields.size() != dim + 1)
            fail_at(i + 1, "expected " + std::to_string(dim) + " components for \"" + std::string(fields[0])
                               + "\", found " + std::to_string(fields.size() - 1));
        std::vector<double> v(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            if (!parse_number(fields[k + 1], v[k]) || !std::isfinite(v[k]))
                fail_at(i + 1, "invalid component \"" + std::string(fields[k + 1]) + "\"");
        }
        std::string word(fields[0]);
        if (table.contains(word))
            fail_at(i + 1, "duplicate word \"" + word + "\"");
        table.add(std::move(word), std::move(v));
    }
    if (table.size() != count)
        throw LoadError("embeddings: header declares " + std::to_string(count) + " words, found "
                        + std::to_string(table.size()));
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path)
{
    try {
        return parse_embeddings(io::read_file(path));
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

} // namespace vulnmine::cluster
