#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vulnmine::cluster {

class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dimension = 0)
        : m_dimension(dimension)
    {
    }

    std::size_t dimension() const { return m_dimension; }
    std::size_t size() const { return m_index.size(); }

    // Throws InvalidArgument on a dimension mismatch or duplicate word.
    void add(std::string word, std::vector<double> vector);

    // Empty optional for a missing word; a present word may still be all zeros.
    std::optional<std::span<const double>> lookup(std::string_view word) const;
    bool contains(std::string_view word) const { return m_index.find(word) != m_index.end(); }

private:
    std::size_t m_dimension;
    std::map<std::string, std::size_t, std::less<>> m_index;
    std::vector<double> m_values;
};

// word2vec text format: "count dim" header, then "word v1 ... vdim" per line.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::string_view content);

double euclidean(std::span<const double> a, std::span<const double> b);

// Exact minimum-cost transport between two discrete distributions (each summing
// to one) under the given row-major supply x demand cost matrix.
double solve_transport(std::span<const double> supply, std::span<const double> demand, std::span<const double> cost);

struct WmdResult {
    double distance = 0.0;
    // Set when one side had no in-vocabulary token; distance is 1 - Jaccard.
    bool fallback = false;
};

WmdResult wmd_distance(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       const EmbeddingTable& embeddings);

class DistanceMatrix {
public:
    DistanceMatrix() = default;
    explicit DistanceMatrix(std::vector<std::string> ids);
    // Row-major n x n values; throws InvalidArgument unless symmetric,
    // non-negative, finite and zero on the diagonal.
    DistanceMatrix(std::vector<std::string> ids, std::vector<double> values);

    std::size_t size() const { return m_ids.size(); }
    const std::vector<std::string>& ids() const { return m_ids; }
    const std::vector<double>& values() const { return m_values; }

    double operator()(std::size_t i, std::size_t j) const { return m_values[i * size() + j]; }
    void set(std::size_t i, std::size_t j, double d);

    double max() const;

private:
    std::vector<std::string> m_ids;
    std::vector<double> m_values;
};

// Fills the upper triangle with metric(i, j) (optionally on `jobs` threads)
// and mirrors it. A throwing metric is reported with the offending pair.
DistanceMatrix pairwise_distance_matrix(std::vector<std::string> ids,
                                        const std::function<double(std::size_t, std::size_t)>& metric,
                                        std::size_t jobs = 1);

nlohmann::json distance_matrix_to_json(const DistanceMatrix& d);
DistanceMatrix distance_matrix_from_json(const nlohmann::json& j);

struct ClusterAssignment {
    // Cluster ids are numbered 0.. in order of first appearance over items.
    std::vector<int> labels;
    // cluster id -> exemplar item (affinity propagation only)
    std::map<int, std::size_t> exemplars;
    std::string algorithm;
    nlohmann::json params = nlohmann::json::object();
    bool converged = true;
    std::size_t iterations = 0;

    std::size_t cluster_count() const;
};

// Relabels so cluster ids appear in increasing order of first occurrence.
std::vector<int> canonical_labels(const std::vector<int>& labels);

// Average-linkage (UPGMA) agglomeration down to k clusters. Equal merge
// distances resolve to the pair with the smallest (i, j) representative
// indices, where a cluster is represented by its smallest member.
ClusterAssignment agglomerative_cluster(const DistanceMatrix& d, std::size_t k);

struct APParams {
    double damping = 0.5;
    // Empty means the median of the off-diagonal similarities.
    std::optional<double> preference;
    std::size_t max_iterations = 200;
    std::size_t convergence_window = 15;

    void validate() const;
};

// Square similarity matrix, row-major.
struct SimilarityMatrix {
    std::size_t n = 0;
    std::vector<double> values;

    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

// s = 1 - d / scale, where scale is the largest distance when `normalize`
// is set (and positive) and 1 otherwise.
SimilarityMatrix similarity_from_distance(const DistanceMatrix& d, bool normalize);

ClusterAssignment affinity_propagation(const SimilarityMatrix& s, const APParams& params);

// Mean silhouette over all items; singleton clusters contribute 0.
double silhouette_score(const DistanceMatrix& d, const std::vector<int>& labels);

enum class Algorithm { Agglomerative, AffinityPropagation };

std::string_view to_string(Algorithm algorithm);

struct SweepRow {
    double parameter = 0.0;
    std::optional<double> score;
    std::size_t clusters = 0;
    std::string note;
};

struct SweepResult {
    Algorithm algorithm = Algorithm::Agglomerative;
    ClusterAssignment best;
    double best_parameter = 0.0;
    double best_score = 0.0;
    std::vector<SweepRow> table;
};

// Cluster counts 25, 27, ..., 225 restricted to those not above n.
std::vector<double> default_cluster_grid(std::size_t n);
// Damping 0.50, 0.51, ..., 0.99.
std::vector<double> default_damping_grid();

// Runs every grid setting, scores it by silhouette and keeps the best (ties go
// to the smaller parameter). Settings that cannot be scored are listed in the
// table with a note; if none can be scored the sweep throws.
SweepResult sweep_clustering(const DistanceMatrix& d, Algorithm algorithm, const std::vector<double>& grid,
                             const APParams& ap_base = {}, bool normalize_similarity = true);

nlohmann::json assignment_to_json(const ClusterAssignment& a, const std::vector<std::string>& ids);

} // namespace vulnmine::cluster
