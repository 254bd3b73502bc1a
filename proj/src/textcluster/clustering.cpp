#include "vulnmine/textcluster.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "vulnmine/error.h"

namespace vulnmine::cluster {

std::size_t ClusterAssignment::cluster_count() const
{
    return std::set<int>(labels.begin(), labels.end()).size();
}

std::vector<int> canonical_labels(const std::vector<int>& labels)
{
    std::map<int, int> renumber;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int label : labels) {
        auto [it, inserted] = renumber.emplace(label, static_cast<int>(renumber.size()));
        out.push_back(it->second);
    }
    return out;
}

ClusterAssignment agglomerative_cluster(const DistanceMatrix& d, std::size_t k)
{
    const std::size_t n = d.size();
    if (k < 1 || k > n)
        throw InvalidArgument("cluster count " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");

    // Clusters live at the index of their smallest member; merging b into a
    // (a < b) keeps that property.
    std::vector<double> dist = d.values();
    std::vector<std::size_t> weight(n, 1);
    std::vector<bool> active(n, true);
    std::vector<std::size_t> owner(n);
    for (std::size_t i = 0; i < n; ++i)
        owner[i] = i;

    for (std::size_t remaining = n; remaining > k; --remaining) {
        std::size_t best_a = n;
        std::size_t best_b = n;
        double best = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (!active[a])
                continue;
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!active[b])
                    continue;
                double v = dist[a * n + b];
                // Pairs are scanned in (a, b) order, so a near-equal later pair never wins.
                if (best_a == n || v < best - 1e-12 * std::max(1.0, std::fabs(best))) {
                    best = v;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        const double wa = static_cast<double>(weight[best_a]);
        const double wb = static_cast<double>(weight[best_b]);
        for (std::size_t c = 0; c < n; ++c) {
            if (!active[c] || c == best_a || c == best_b)
                continue;
            double merged = (wa * dist[best_a * n + c] + wb * dist[best_b * n + c]) / (wa + wb);
            dist[best_a * n + c] = merged;
            dist[c * n + best_a] = merged;
        }
        weight[best_a] += weight[best_b];
        active[best_b] = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (owner[i] == best_b)
                owner[i] = best_a;
        }
    }

    ClusterAssignment out;
    std::vector<int> raw(owner.begin(), owner.end());
    out.labels = canonical_labels(raw);
    out.algorithm = "agglomerative";
    out.params = {{"k", k}, {"linkage", "average"}};
    return out;
}

void APParams::validate() const
{
    if (!(damping >= 0.5 && damping < 1.0))
        throw InvalidArgument("damping must lie in [0.5, 1.0)");
    if (convergence_window == 0 || max_iterations <= convergence_window)
        throw InvalidArgument("affinity propagation needs max_iterations > convergence_window > 0");
    if (preference && !std::isfinite(*preference))
        throw InvalidArgument("preference must be finite");
}

namespace {

double median_off_diagonal(const SimilarityMatrix& s)
{
    std::vector<double> values;
    for (std::size_t i = 0; i < s.n; ++i) {
        for (std::size_t j = 0; j < s.n; ++j) {
            if (i != j)
                values.push_back(s(i, j));
        }
    }
    if (values.empty())
        return 0.0;
    std::sort(values.begin(), values.end());
    std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1)
        return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

nlohmann::json ap_params_json(const APParams& p, double preference)
{
    return {{"damping", p.damping},
            {"preference", p.preference ? nlohmann::json(*p.preference) : nlohmann::json("median")},
            {"preference_value", preference},
            {"max_iterations", p.max_iterations},
            {"convergence_window", p.convergence_window}};
}

ClusterAssignment finish_assignment(std::vector<int> raw, std::map<int, std::size_t> raw_exemplars)
{
    ClusterAssignment out;
    out.labels = canonical_labels(raw);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto it = raw_exemplars.find(raw[i]);
        if (it != raw_exemplars.end())
            out.exemplars[out.labels[i]] = it->second;
    }
    return out;
}

} // namespace

ClusterAssignment affinity_propagation(const SimilarityMatrix& input, const APParams& params)
{
    params.validate();
    const std::size_t n = input.n;
    if (n == 0 || input.values.size() != n * n)
        throw InvalidArgument("affinity propagation needs a non-empty square similarity matrix");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(input(i, j)))
                throw InvalidArgument("similarity matrix has non-finite entries");
        }
    }

    const double preference = params.preference.value_or(median_off_diagonal(input));

    auto tag = [&](ClusterAssignment a, bool converged, std::size_t iterations) {
        a.algorithm = "affinity_propagation";
        a.params = ap_params_json(params, preference);
        a.converged = converged;
        a.iterations = iterations;
        return a;
    };

    if (n == 1)
        return tag(finish_assignment({0}, {{0, 0}}), true, 0);

    // Identical off-diagonal similarities carry no structure to propagate.
    bool uniform = true;
    for (std::size_t i = 0; i < n && uniform; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j && input(i, j) != input(0, 1)) {
                uniform = false;
                break;
            }
        }
    }
    if (uniform) {
        std::vector<int> raw(n);
        std::map<int, std::size_t> exemplars;
        if (preference > input(0, 1)) {
            for (std::size_t i = 0; i < n; ++i) {
                raw[i] = static_cast<int>(i);
                exemplars[static_cast<int>(i)] = i;
            }
        } else {
            exemplars[0] = 0;
        }
        return tag(finish_assignment(raw, exemplars), true, 0);
    }

    std::vector<double> s = input.values;
    for (std::size_t i = 0; i < n; ++i)
        s[i * n + i] = preference;

    // A perturbation decreasing with the candidate index breaks exact symmetry
    // in favour of lower-indexed exemplars.
    double scale = 0.0;
    for (double v : s)
        scale = std::max(scale, std::fabs(v));
    if (scale == 0.0)
        scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k)
            s[i * n + k] -= 1e-9 * scale * static_cast<double>(k) / static_cast<double>(n);
    }

    const double lambda = params.damping;
    std::vector<double> r(n * n, 0.0);
    std::vector<double> a(n * n, 0.0);
    std::vector<bool> exemplar(n, false);
    std::vector<bool> previous(n, false);
    std::size_t stable = 0;
    bool converged = false;
    std::size_t iteration = 0;

    while (iteration < params.max_iterations) {
        ++iteration;
        for (std::size_t i = 0; i < n; ++i) {
            double first = -std::numeric_limits<double>::infinity();
            double second = first;
            std::size_t arg = 0;
            for (std::size_t k = 0; k < n; ++k) {
                double v = a[i * n + k] + s[i * n + k];
                if (v > first) {
                    second = first;
                    first = v;
                    arg = k;
                } else if (v > second) {
                    second = v;
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                double fresh = s[i * n + k] - (k == arg ? second : first);
                r[i * n + k] = lambda * r[i * n + k] + (1.0 - lambda) * fresh;
            }
        }
        for (std::size_t k = 0; k < n; ++k) {
            double positive_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i != k)
                    positive_sum += std::max(0.0, r[i * n + k]);
            }
            for (std::size_t i = 0; i < n; ++i) {
                double fresh = i == k ? positive_sum
                                      : std::min(0.0, r[k * n + k] + positive_sum - std::max(0.0, r[i * n + k]));
                a[i * n + k] = lambda * a[i * n + k] + (1.0 - lambda) * fresh;
            }
        }

        bool any = false;
        for (std::size_t k = 0; k < n; ++k) {
            exemplar[k] = a[k * n + k] + r[k * n + k] > 0.0;
            any = any || exemplar[k];
        }
        stable = exemplar == previous ? stable + 1 : 1;
        previous = exemplar;
        if (any && stable >= params.convergence_window) {
            converged = true;
            break;
        }
    }

    std::vector<std::size_t> exemplars;
    for (std::size_t k = 0; k < n; ++k) {
        if (exemplar[k])
            exemplars.push_back(k);
    }
    if (exemplars.empty()) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < n; ++k) {
            if (a[k * n + k] + r[k * n + k] > a[best * n + best] + r[best * n + best])
                best = k;
        }
        exemplars.push_back(best);
        converged = false;
    }

    std::vector<int> raw(n);
    std::map<int, std::size_t> raw_exemplars;
    for (std::size_t e : exemplars)
        raw_exemplars[static_cast<int>(e)] = e;
    for (std::size_t i = 0; i < n; ++i) {
        if (exemplar[i] && raw_exemplars.count(static_cast<int>(i))) {
            raw[i] = static_cast<int>(i);
            continue;
        }
        std::size_t best = exemplars.front();
        double best_value = a[i * n + best] + input(i, best);
        for (std::size_t e : exemplars) {
            double v = a[i * n + e] + input(i, e);
            if (v > best_value) {
                best_value = v;
                best = e;
            }
        }
        raw[i] = static_cast<int>(best);
    }
    return tag(finish_assignment(raw, raw_exemplars), converged, iteration);
}

double silhouette_score(const DistanceMatrix& d, const std::vector<int>& labels)
{
    const std::size_t n = d.size();
    if (labels.size() != n)
        throw InvalidArgument("silhouette needs one label per item");
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i)
        members[labels[i]].push_back(i);
    if (members.size() < 2)
        throw InvalidArgument("silhouette is undefined for fewer than two clusters");

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& own = members[labels[i]];
        if (own.size() == 1)
            continue;
        double intra = 0.0;
        for (std::size_t j : own)
            intra += d(i, j);
        intra /= static_cast<double>(own.size() - 1);
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& [label, other] : members) {
            if (label == labels[i])
                continue;
            double sum = 0.0;
            for (std::size_t j : other)
                sum += d(i, j);
            nearest = std::min(nearest, sum / static_cast<double>(other.size()));
        }
        double denom = std::max(intra, nearest);
        if (denom > 0.0)
            total += (nearest - intra) / denom;
    }
    return total / static_cast<double>(n);
}

std::string_view to_string(Algorithm algorithm)
{
    return algorithm == Algorithm::Agglomerative ? "agglomerative" : "affinity_propagation";
}

std::vector<double> default_cluster_grid(std::size_t n)
{
    std::vector<double> grid;
    for (std::size_t k = 25; k <= 225 && k <= n; k += 2)
        grid.push_back(static_cast<double>(k));
    return grid;
}

std::vector<double> default_damping_grid()
{
    std::vector<double> grid;
    for (int step = 50; step <= 99; ++step)
        grid.push_back(step / 100.0);
    return grid;
}

SweepResult sweep_clustering(const DistanceMatrix& d, Algorithm algorithm, const std::vector<double>& grid,
                             const APParams& ap_base, bool normalize_similarity)
{
    if (grid.empty())
        throw InvalidArgument("sweep grid is empty");

    SweepResult result;
    result.algorithm = algorithm;
    bool found = false;
    std::optional<SimilarityMatrix> similarity;
    if (algorithm == Algorithm::AffinityPropagation)
        similarity = similarity_from_distance(d, normalize_similarity);

    for (double parameter : grid) {
        SweepRow row;
        row.parameter = parameter;
        ClusterAssignment assignment;
        try {
            if (algorithm == Algorithm::Agglomerative) {
                if (parameter != std::floor(parameter) || parameter < 2.0
                    || parameter > static_cast<double>(d.size()))
                    throw InvalidArgument("cluster count outside [2, n]");
                assignment = agglomerative_cluster(d, static_cast<std::size_t>(parameter));
            } else {
                APParams p = ap_base;
                p.damping = parameter;
                assignment = affinity_propagation(*similarity, p);
                if (!assignment.converged)
                    row.note = "not converged";
            }
            row.clusters = assignment.cluster_count();
            if (row.clusters < 2)
                throw InvalidArgument("single cluster");
            row.score = silhouette_score(d, assignment.labels);
        } catch (const InvalidArgument& e) {
            row.note = e.what();
            row.score.reset();
        }
        if (row.score
            && (!found || *row.score > result.best_score
                || (*row.score == result.best_score && parameter < result.best_parameter))) {
            found = true;
            result.best = std::move(assignment);
            result.best_score = *row.score;
            result.best_parameter = parameter;
        }
        result.table.push_back(std::move(row));
    }
    if (!found)
        throw InvalidArgument("no sweep setting produced a valid clustering for " + std::to_string(d.size())
                              + " items");
    return result;
}

nlohmann::json assignment_to_json(const ClusterAssignment& a, const std::vector<std::string>& ids)
{
    if (ids.size() != a.labels.size())
        throw InvalidArgument("assignment and id list differ in length");
    std::map<int, std::vector<std::string>> members;
    for (std::size_t i = 0; i < ids.size(); ++i)
        members[a.labels[i]].push_back(ids[i]);
    nlohmann::json clusters = nlohmann::json::array();
    for (const auto& [label, list] : members) {
        nlohmann::json c = {{"cluster", label}, {"size", list.size()}, {"members", list}};
        auto it = a.exemplars.find(label);
        if (it != a.exemplars.end())
            c["exemplar"] = ids[it->second];
        clusters.push_back(std::move(c));
    }
    return {{"algorithm", a.algorithm},
            {"params", a.params},
            {"converged", a.converged},
            {"iterations", a.iterations},
            {"cluster_count", members.size()},
            {"clusters", std::move(clusters)}};
}

} // namespace vulnmine::cluster
