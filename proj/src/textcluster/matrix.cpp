#include "vulnmine/textcluster.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "vulnmine/error.h"

namespace vulnmine::cluster {

DistanceMatrix::DistanceMatrix(std::vector<std::string> ids)
    : m_ids(std::move(ids))
    , m_values(m_ids.size() * m_ids.size(), 0.0)
{
}

DistanceMatrix::DistanceMatrix(std::vector<std::string> ids, std::vector<double> values)
    : m_ids(std::move(ids))
    , m_values(std::move(values))
{
    const std::size_t n = m_ids.size();
    if (m_values.size() != n * n)
        throw InvalidArgument("distance matrix needs " + std::to_string(n * n) + " values, got "
                              + std::to_string(m_values.size()));
    for (std::size_t i = 0; i < n; ++i) {
        if (m_values[i * n + i] != 0.0)
            throw InvalidArgument("distance matrix diagonal at " + m_ids[i] + " is not zero");
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = m_values[i * n + j];
            if (!std::isfinite(d) || d < 0.0)
                throw InvalidArgument("distance (" + m_ids[i] + ", " + m_ids[j] + ") is negative or not finite");
            if (d != m_values[j * n + i])
                throw InvalidArgument("distance matrix is not symmetric at (" + m_ids[i] + ", " + m_ids[j] + ")");
        }
    }
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double d)
{
    if (!std::isfinite(d) || d < 0.0)
        throw InvalidArgument("distance (" + m_ids[i] + ", " + m_ids[j] + ") is negative or not finite");
    if (i == j && d != 0.0)
        throw InvalidArgument("distance matrix diagonal must be zero");
    m_values[i * size() + j] = d;
    m_values[j * size() + i] = d;
}

double DistanceMatrix::max() const
{
    double best = 0.0;
    for (double v : m_values)
        best = std::max(best, v);
    return best;
}

DistanceMatrix pairwise_distance_matrix(std::vector<std::string> ids,
                                        const std::function<double(std::size_t, std::size_t)>& metric,
                                        std::size_t jobs)
{
    DistanceMatrix d(std::move(ids));
    const std::size_t n = d.size();
    if (n < 2)
        return d;

    // Each worker owns whole rows, so writes never overlap.
    std::atomic<std::size_t> next_row{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::size_t error_row = n;

    auto worker = [&] {
        for (;;) {
            std::size_t i = next_row.fetch_add(1);
            if (i >= n)
                return;
            for (std::size_t j = i + 1; j < n; ++j) {
                try {
                    double v = metric(i, j);
                    d.set(i, j, v);
                } catch (const std::exception& e) {
                    std::lock_guard lock(error_mutex);
                    if (i < error_row) {
                        error_row = i;
                        first_error = std::make_exception_ptr(Error("distance between " + d.ids()[i] + " and "
                                                                    + d.ids()[j] + " failed: " + e.what()));
                    }
                    return;
                }
            }
        }
    };

    jobs = std::clamp<std::size_t>(jobs, 1, n);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < jobs; ++t)
            threads.emplace_back(worker);
        for (auto& t : threads)
            t.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);
    return d;
}

nlohmann::json distance_matrix_to_json(const DistanceMatrix& d)
{
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < d.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < d.size(); ++j)
            row.push_back(d(i, j));
        rows.push_back(std::move(row));
    }
    return {{"ids", d.ids()}, {"distances", std::move(rows)}};
}

DistanceMatrix distance_matrix_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("ids") || !j.contains("distances"))
        throw LoadError("distance matrix: expected object with \"ids\" and \"distances\"");
    auto ids = j.at("ids").get<std::vector<std::string>>();
    const auto& rows = j.at("distances");
    if (!rows.is_array() || rows.size() != ids.size())
        throw LoadError("distance matrix: row count does not match ids");
    std::vector<double> values;
    values.reserve(ids.size() * ids.size());
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != ids.size())
            throw LoadError("distance matrix: row length does not match ids");
        for (const auto& v : row)
            values.push_back(v.get<double>());
    }
    try {
        return DistanceMatrix(std::move(ids), std::move(values));
    } catch (const InvalidArgument& e) {
        throw LoadError(std::string("distance matrix: ") + e.what());
    }
}

SimilarityMatrix similarity_from_distance(const DistanceMatrix& d, bool normalize)
{
    double scale = 1.0;
    if (normalize && d.max() > 0.0)
        scale = d.max();
    SimilarityMatrix s;
    s.n = d.size();
    s.values.resize(s.n * s.n);
    for (std::size_t i = 0; i < s.n * s.n; ++i)
        s.values[i] = 1.0 - d.values()[i] / scale;
    return s;
}

} // namespace vulnmine::cluster
