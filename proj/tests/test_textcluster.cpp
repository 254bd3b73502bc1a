#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.h"
#include "support.h"
#include "vulnmine/error.h"
#include "vulnmine/textcluster.h"

using namespace vulnmine;
using namespace vulnmine::cluster;
using testsupport::fixture;
using testsupport::Gen;
using Tokens = std::vector<std::string>;

namespace {

std::vector<std::string> make_ids(std::size_t n)
{
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i)
        ids.push_back("i" + std::to_string(i));
    return ids;
}

DistanceMatrix from_rows(const oracle::Matrix& rows)
{
    std::vector<double> values;
    for (const auto& r : rows)
        values.insert(values.end(), r.begin(), r.end());
    return DistanceMatrix(make_ids(rows.size()), values);
}

oracle::Matrix random_points_matrix(Gen& gen, std::size_t n)
{
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < n; ++i)
        pts.emplace_back(gen.real(0, 10), gen.real(0, 10));
    oracle::Matrix d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            d[i][j] = std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
    }
    return d;
}

// Two well separated triples on a line.
oracle::Matrix two_triples()
{
    std::vector<double> x = { 0.0, 0.1, 0.2, 10.0, 10.1, 10.3 };
    oracle::Matrix d(6, std::vector<double>(6));
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j)
            d[i][j] = std::fabs(x[i] - x[j]);
    }
    return d;
}

SimilarityMatrix two_groups_similarity(std::size_t per_group, double within, double between)
{
    SimilarityMatrix s;
    s.n = 2 * per_group;
    s.values.assign(s.n * s.n, between);
    for (std::size_t i = 0; i < s.n; ++i) {
        for (std::size_t j = 0; j < s.n; ++j) {
            if (i / per_group == j / per_group)
                s.values[i * s.n + j] = i == j ? 0.0 : within;
        }
    }
    return s;
}

EmbeddingTable random_table(Gen& gen, const Tokens& words, std::size_t dim)
{
    EmbeddingTable t(dim);
    for (const auto& w : words) {
        std::vector<double> v(dim);
        for (auto& x : v)
            x = gen.real(-1, 1);
        t.add(w, v);
    }
    return t;
}

} // namespace

TEST_CASE("load_embeddings reads the fixture")
{
    auto t = load_embeddings(fixture("embeddings/small.txt"));
    CHECK(t.size() == 3);
    CHECK(t.dimension() == 2);
    CHECK(t.lookup("segfault").value()[0] == doctest::Approx(0.9));
    CHECK_FALSE(t.lookup("missing").has_value());
}

TEST_CASE("load_embeddings reports bad rows")
{
    try {
        load_embeddings(fixture("embeddings/missing_component.txt"));
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    try {
        load_embeddings(fixture("embeddings/duplicate_word.txt"));
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(std::string(e.what()).find("\"crash\"") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_embeddings("2 2\na 1 1\n"), LoadError);
    CHECK_THROWS_AS(parse_embeddings("x\n"), LoadError);
}

TEST_CASE("a zero vector is distinct from a missing word")
{
    auto t = parse_embeddings("1 2\nzero 0 0\n");
    REQUIRE(t.lookup("zero").has_value());
    CHECK(t.lookup("zero")->size() == 2);
}

TEST_CASE("wmd examples")
{
    auto t = load_embeddings(fixture("embeddings/small.txt"));
    CHECK(wmd_distance({ "crash", "docs" }, { "crash", "docs" }, t).distance == 0.0);
    auto single = wmd_distance({ "crash" }, { "docs" }, t);
    CHECK(single.distance == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK_FALSE(single.fallback);

    auto two_one = wmd_distance({ "crash", "segfault" }, { "docs" }, t);
    double expected = 0.5 * (std::sqrt(2.0) + std::hypot(0.9, 0.9));
    CHECK(two_one.distance == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("wmd falls back to Jaccard when a side is out of vocabulary")
{
    auto t = load_embeddings(fixture("embeddings/small.txt"));
    auto r = wmd_distance({ "unknown", "crash" }, { "nothing", "crash" }, t);
    CHECK_FALSE(r.fallback);
    r = wmd_distance({ "unknown", "other" }, { "unknown", "crash" }, t);
    CHECK(r.fallback);
    CHECK(r.distance == doctest::Approx(1.0 - 1.0 / 3.0));
    CHECK(wmd_distance({}, {}, t).distance == 0.0);
}

TEST_CASE("wmd matches basis enumeration and is symmetric")
{
    Gen gen(5150);
    const Tokens vocab = { "a", "b", "c", "d", "e", "f" };
    for (int round = 0; round < 100; ++round) {
        auto table = random_table(gen, vocab, 3);
        Tokens x;
        Tokens y;
        for (int k = gen.range(1, 5); k > 0; --k)
            x.push_back(gen.pick(Tokens { "a", "b", "c" }));
        for (int k = gen.range(1, 5); k > 0; --k)
            y.push_back(gen.pick(Tokens { "d", "e", "f", "a" }));

        // Independent bag weights.
        std::map<std::string, double> wx;
        std::map<std::string, double> wy;
        for (auto& w : x)
            wx[w] += 1.0 / static_cast<double>(x.size());
        for (auto& w : y)
            wy[w] += 1.0 / static_cast<double>(y.size());
        std::vector<double> supply;
        std::vector<double> demand;
        oracle::Matrix cost;
        for (auto& [wi, pi] : wx) {
            supply.push_back(pi);
            cost.emplace_back();
            for (auto& [wj, pj] : wy) {
                auto u = *table.lookup(wi);
                auto v = *table.lookup(wj);
                double sq = 0.0;
                for (std::size_t k = 0; k < 3; ++k)
                    sq += (u[k] - v[k]) * (u[k] - v[k]);
                cost.back().push_back(std::sqrt(sq));
            }
        }
        for (auto& [wj, pj] : wy)
            demand.push_back(pj);

        double got = wmd_distance(x, y, table).distance;
        CHECK(got == doctest::Approx(oracle::transport_by_bases(supply, demand, cost)).epsilon(1e-9));
        CHECK(got == wmd_distance(y, x, table).distance);
        CHECK(wmd_distance(x, x, table).distance == 0.0);
    }
}

TEST_CASE("solve_transport rejects malformed input")
{
    std::vector<double> one = { 1.0 };
    std::vector<double> half = { 0.5 };
    std::vector<double> cost = { 1.0 };
    CHECK_THROWS_AS(solve_transport(one, half, cost), InvalidArgument);
    CHECK_THROWS_AS(solve_transport(one, one, std::vector<double> {}), InvalidArgument);
}

TEST_CASE("pairwise_distance_matrix fills symmetrically")
{
    auto zero = pairwise_distance_matrix(make_ids(4), [](std::size_t, std::size_t) { return 0.0; });
    CHECK(zero.max() == 0.0);

    auto two = pairwise_distance_matrix(make_ids(2), [](std::size_t, std::size_t) { return 0.25; });
    CHECK(two(0, 1) == 0.25);
    CHECK(two(1, 0) == 0.25);
    CHECK(two(0, 0) == 0.0);

    std::vector<double> x = { 0.5, 2.0, -1.0, 3.25, 7.0 };
    auto metric = [&](std::size_t i, std::size_t j) { return std::fabs(x[i] - x[j]); };
    for (std::size_t jobs : { 1u, 3u }) {
        auto d = pairwise_distance_matrix(make_ids(5), metric, jobs);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j)
                CHECK(d(i, j) == std::fabs(x[i] - x[j]));
        }
    }
}

TEST_CASE("pairwise_distance_matrix names a failing pair")
{
    try {
        pairwise_distance_matrix(make_ids(3), [](std::size_t i, std::size_t j) -> double {
            if (i == 1 && j == 2)
                throw std::runtime_error("boom");
            return 1.0;
        });
        FAIL("expected Error");
    } catch (const Error& e) {
        std::string msg = e.what();
        CHECK(msg.find("i1") != std::string::npos);
        CHECK(msg.find("i2") != std::string::npos);
    }
}

TEST_CASE("distance matrix invariants are enforced")
{
    CHECK_THROWS_AS(DistanceMatrix(make_ids(2), { 0, 1, 2, 0 }), InvalidArgument);
    CHECK_THROWS_AS(DistanceMatrix(make_ids(2), { 1, 1, 1, 0 }), InvalidArgument);
    CHECK_THROWS_AS(DistanceMatrix(make_ids(2), { 0, -1, -1, 0 }), InvalidArgument);
    auto d = from_rows(two_triples());
    CHECK(distance_matrix_from_json(distance_matrix_to_json(d)).values() == d.values());
}

TEST_CASE("agglomerative edge cases and the two-triples fixture")
{
    auto d = from_rows(two_triples());
    CHECK(agglomerative_cluster(d, 6).labels == std::vector<int> { 0, 1, 2, 3, 4, 5 });
    CHECK(agglomerative_cluster(d, 1).labels == std::vector<int>(6, 0));
    CHECK(agglomerative_cluster(d, 2).labels == std::vector<int> { 0, 0, 0, 1, 1, 1 });
    CHECK_THROWS_AS(agglomerative_cluster(d, 0), InvalidArgument);
    CHECK_THROWS_AS(agglomerative_cluster(d, 7), InvalidArgument);
}

TEST_CASE("agglomerative equals the naive reference")
{
    Gen gen(8);
    for (int round = 0; round < 50; ++round) {
        std::size_t n = static_cast<std::size_t>(gen.range(2, 8));
        auto rows = random_points_matrix(gen, n);
        auto d = from_rows(rows);
        for (std::size_t k = 1; k <= n; ++k)
            CHECK(agglomerative_cluster(d, k).labels == oracle::naive_average_linkage(rows, k));
    }
    // Equal distances everywhere resolve by smallest index pair.
    oracle::Matrix flat(5, std::vector<double>(5, 1.0));
    for (std::size_t i = 0; i < 5; ++i)
        flat[i][i] = 0.0;
    for (std::size_t k = 1; k <= 5; ++k)
        CHECK(agglomerative_cluster(from_rows(flat), k).labels == oracle::naive_average_linkage(flat, k));
}

TEST_CASE("silhouette examples")
{
    oracle::Matrix perfect = { { 0, 0, 1, 1 }, { 0, 0, 1, 1 }, { 1, 1, 0, 0 }, { 1, 1, 0, 0 } };
    CHECK(silhouette_score(from_rows(perfect), { 0, 0, 1, 1 }) == 1.0);
    auto d = from_rows(two_triples());
    CHECK(silhouette_score(d, { 0, 1, 2, 3, 4, 5 }) == 0.0);
    CHECK_THROWS_AS(silhouette_score(d, std::vector<int>(6, 0)), InvalidArgument);
    CHECK(silhouette_score(d, { 0, 0, 0, 1, 1, 1 })
          == doctest::Approx(oracle::silhouette(two_triples(), { 0, 0, 0, 1, 1, 1 })).epsilon(1e-12));
}

TEST_CASE("silhouette matches the formula and ignores labels and order")
{
    Gen gen(10);
    for (int round = 0; round < 50; ++round) {
        const std::size_t n = 10;
        auto rows = random_points_matrix(gen, n);
        std::vector<int> labels(n);
        for (auto& l : labels)
            l = gen.range(0, 3);
        labels[0] = 0;
        labels[1] = 1;
        auto d = from_rows(rows);
        double score = silhouette_score(d, labels);
        CHECK(std::fabs(score - oracle::silhouette(rows, labels)) <= 1e-12);

        std::vector<int> relabeled = labels;
        for (auto& l : relabeled)
            l = 7 - l * 2;
        CHECK(std::fabs(silhouette_score(d, relabeled) - score) <= 1e-12);

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[gen.index(i + 1)]);
        oracle::Matrix permuted(n, std::vector<double>(n));
        std::vector<int> permuted_labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            permuted_labels[i] = labels[perm[i]];
            for (std::size_t j = 0; j < n; ++j)
                permuted[i][j] = rows[perm[i]][perm[j]];
        }
        CHECK(std::fabs(silhouette_score(from_rows(permuted), permuted_labels) - score) <= 1e-12);
    }
}

TEST_CASE("affinity propagation degenerate inputs")
{
    SimilarityMatrix same;
    same.n = 3;
    same.values.assign(9, 1.0);
    auto r = affinity_propagation(same, APParams {});
    CHECK(r.labels == std::vector<int> { 0, 0, 0 });
    CHECK(r.exemplars == std::map<int, std::size_t> { { 0, 0 } });

    SimilarityMatrix one;
    one.n = 1;
    one.values = { 0.0 };
    r = affinity_propagation(one, APParams {});
    CHECK(r.labels == std::vector<int> { 0 });
    CHECK(r.exemplars.at(0) == 0);
    CHECK(r.converged);
}

TEST_CASE("affinity propagation parameter validation")
{
    SimilarityMatrix s = two_groups_similarity(2, 0.9, 0.1);
    APParams p;
    p.damping = 1.0;
    CHECK_THROWS_AS(affinity_propagation(s, p), InvalidArgument);
    p.damping = 0.4;
    CHECK_THROWS_AS(affinity_propagation(s, p), InvalidArgument);
    p = APParams {};
    p.max_iterations = 10;
    p.convergence_window = 10;
    CHECK_THROWS_AS(affinity_propagation(s, p), InvalidArgument);
}

TEST_CASE("affinity propagation finds the provably optimal two groups")
{
    auto s = two_groups_similarity(5, 0.9, 0.1);
    APParams p;
    p.damping = 0.78;
    auto first = affinity_propagation(s, p);
    CHECK(first.converged);
    CHECK(first.iterations <= 200);
    CHECK(first.labels == std::vector<int> { 0, 0, 0, 0, 0, 1, 1, 1, 1, 1 });

    oracle::Matrix rows(10, std::vector<double>(10));
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j)
            rows[i][j] = s(i, j);
    }
    auto best = oracle::best_exemplar_set(rows, 0.1);
    REQUIRE(best.size() == 2);
    CHECK(best[0] / 5 != best[1] / 5);

    for (const auto& [cluster, item] : first.exemplars)
        CHECK(first.labels[item] == cluster);
    for (int run = 0; run < 10; ++run) {
        auto again = affinity_propagation(s, p);
        CHECK(again.labels == first.labels);
        CHECK(again.exemplars == first.exemplars);
        CHECK(again.iterations == first.iterations);
    }
}

TEST_CASE("affinity propagation on noisy groups agrees with exhaustive search")
{
    Gen gen(2718);
    for (int round = 0; round < 20; ++round) {
        const std::size_t n = 8;
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = (i < 4 ? 0.0 : 5.0) + gen.real(0, 1);
        SimilarityMatrix s;
        s.n = n;
        s.values.resize(n * n);
        oracle::Matrix rows(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                s.values[i * n + j] = -std::fabs(x[i] - x[j]);
                rows[i][j] = s.values[i * n + j];
            }
        }
        APParams p;
        // High damping can freeze the exemplar set before messages settle, so
        // this property runs at the default damping with a long window.
        p.preference = -3.0;
        p.max_iterations = 1000;
        p.convergence_window = 50;
        auto got = affinity_propagation(s, p);
        auto best = oracle::best_exemplar_set(rows, -3.0);
        CHECK(got.cluster_count() == best.size());
    }
}

TEST_CASE("sweeps pick the best setting")
{
    auto d = from_rows(two_triples());
    auto r = sweep_clustering(d, Algorithm::Agglomerative, { 2, 3 });
    CHECK(r.best_parameter == 2.0);
    REQUIRE(r.table.size() == 2);
    CHECK(*r.table[0].score > *r.table[1].score);
    CHECK(r.best_score == doctest::Approx(oracle::silhouette(two_triples(), { 0, 0, 0, 1, 1, 1 })));

    auto single = sweep_clustering(d, Algorithm::Agglomerative, { 4 });
    CHECK(single.best_parameter == 4.0);

    CHECK_THROWS_AS(sweep_clustering(d, Algorithm::Agglomerative, { 1, 9 }), InvalidArgument);
    CHECK_THROWS_AS(sweep_clustering(d, Algorithm::Agglomerative, {}), InvalidArgument);

    auto ap = sweep_clustering(d, Algorithm::AffinityPropagation, { 0.5, 0.78 });
    CHECK(ap.best.cluster_count() == 2);
    CHECK(ap.best_parameter == 0.5);
}

TEST_CASE("default grids")
{
    auto k = default_cluster_grid(1000);
    CHECK(k.size() == 101);
    CHECK(k.front() == 25);
    CHECK(k.back() == 225);
    CHECK(default_cluster_grid(30) == std::vector<double> { 25, 27, 29 });
    auto l = default_damping_grid();
    CHECK(l.size() == 50);
    CHECK(l.front() == 0.5);
    CHECK(l.back() == 0.99);
}
