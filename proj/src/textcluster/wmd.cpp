#include "vulnmine/textcluster.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "vulnmine/error.h"

namespace vulnmine::cluster {

double euclidean(std::span<const double> a, std::span<const double> b)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double diff = a[i] - b[i];
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

namespace {

// Successive shortest paths on the bipartite transport network. Residual
// capacities are reals; quantities below kMassEps count as zero.
constexpr double kMassEps = 1e-14;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
    std::size_t to;
    double capacity;
    double cost;
    std::size_t reverse;
};

class FlowNetwork {
public:
    explicit FlowNetwork(std::size_t nodes)
        : m_graph(nodes)
    {
    }

    void add_edge(std::size_t from, std::size_t to, double capacity, double cost)
    {
        m_graph[from].push_back({to, capacity, cost, m_graph[to].size()});
        m_graph[to].push_back({from, 0.0, -cost, m_graph[from].size() - 1});
    }

    // Pushes up to `demand` units from source to sink at minimum cost.
    double min_cost_flow(std::size_t source, std::size_t sink, double demand)
    {
        const std::size_t n = m_graph.size();
        double total_cost = 0.0;
        double remaining = demand;
        std::size_t guard = 0;
        const std::size_t guard_limit = 64 * n * n + 1024;
        while (remaining > kMassEps) {
            if (++guard > guard_limit)
                throw Error("transport solver did not terminate");
            // Bellman-Ford (SPFA order not needed at this size).
            std::vector<double> dist(n, kInf);
            std::vector<std::size_t> prev_node(n, n);
            std::vector<std::size_t> prev_edge(n, 0);
            dist[source] = 0.0;
            for (std::size_t round = 0; round + 1 < n; ++round) {
                bool changed = false;
                for (std::size_t u = 0; u < n; ++u) {
                    if (dist[u] == kInf)
                        continue;
                    for (std::size_t e = 0; e < m_graph[u].size(); ++e) {
                        const Edge& edge = m_graph[u][e];
                        if (edge.capacity <= kMassEps)
                            continue;
                        double candidate = dist[u] + edge.cost;
                        if (candidate < dist[edge.to] - 1e-15) {
                            dist[edge.to] = candidate;
                            prev_node[edge.to] = u;
                            prev_edge[edge.to] = e;
                            changed = true;
                        }
                    }
                }
                if (!changed)
                    break;
            }
            if (dist[sink] == kInf)
                throw Error("transport problem is infeasible");

            double push = remaining;
            for (std::size_t v = sink; v != source; v = prev_node[v])
                push = std::min(push, m_graph[prev_node[v]][prev_edge[v]].capacity);
            for (std::size_t v = sink; v != source; v = prev_node[v]) {
                Edge& edge = m_graph[prev_node[v]][prev_edge[v]];
                edge.capacity -= push;
                m_graph[v][edge.reverse].capacity += push;
            }
            total_cost += push * dist[sink];
            remaining -= push;
        }
        return total_cost;
    }

private:
    std::vector<std::vector<Edge>> m_graph;
};

} // namespace

double solve_transport(std::span<const double> supply, std::span<const double> demand, std::span<const double> cost)
{
    const std::size_t n = supply.size();
    const std::size_t m = demand.size();
    if (n == 0 || m == 0)
        throw InvalidArgument("transport problem needs non-empty supply and demand");
    if (cost.size() != n * m)
        throw InvalidArgument("transport cost matrix has wrong size");

    double total_supply = 0.0;
    double total_demand = 0.0;
    for (double s : supply)
        total_supply += s;
    for (double d : demand)
        total_demand += d;
    if (std::fabs(total_supply - total_demand) > 1e-9)
        throw InvalidArgument("transport problem is unbalanced");

    // Nodes: 0 source, 1..n supply, n+1..n+m demand, n+m+1 sink.
    const std::size_t source = 0;
    const std::size_t sink = n + m + 1;
    FlowNetwork net(n + m + 2);
    for (std::size_t i = 0; i < n; ++i)
        net.add_edge(source, 1 + i, supply[i], 0.0);
    for (std::size_t j = 0; j < m; ++j)
        net.add_edge(1 + n + j, sink, demand[j], 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j)
            net.add_edge(1 + i, 1 + n + j, kInf, cost[i * m + j]);
    }
    return net.min_cost_flow(source, sink, std::min(total_supply, total_demand));
}

namespace {

struct Bag {
    std::vector<std::string> words;
    std::vector<double> weights;
};

Bag in_vocabulary_bag(const std::vector<std::string>& tokens, const EmbeddingTable& embeddings)
{
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;
    for (const auto& t : tokens) {
        if (!embeddings.contains(t))
            continue;
        ++counts[t];
        ++total;
    }
    Bag bag;
    for (const auto& [word, count] : counts) {
        bag.words.push_back(word);
        bag.weights.push_back(static_cast<double>(count) / static_cast<double>(total));
    }
    return bag;
}

double jaccard_distance(const std::vector<std::string>& a, const std::vector<std::string>& b)
{
    std::set<std::string> sa(a.begin(), a.end());
    std::set<std::string> sb(b.begin(), b.end());
    if (sa.empty() && sb.empty())
        return 0.0;
    std::size_t common = 0;
    for (const auto& w : sa)
        common += sb.count(w);
    std::size_t uni = sa.size() + sb.size() - common;
    return 1.0 - static_cast<double>(common) / static_cast<double>(uni);
}

} // namespace

WmdResult wmd_distance(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       const EmbeddingTable& embeddings)
{
    Bag ba = in_vocabulary_bag(a, embeddings);
    Bag bb = in_vocabulary_bag(b, embeddings);
    if (ba.words.empty() || bb.words.empty()) {
        if (a.empty() && b.empty())
            return {0.0, false};
        return {jaccard_distance(a, b), true};
    }
    if (ba.words == bb.words && ba.weights == bb.weights)
        return {0.0, false};
    // Solving in a canonical orientation keeps the result bit-for-bit symmetric.
    if (std::tie(bb.words, bb.weights) < std::tie(ba.words, ba.weights))
        std::swap(ba, bb);

    std::vector<double> cost(ba.words.size() * bb.words.size());
    for (std::size_t i = 0; i < ba.words.size(); ++i) {
        auto vi = *embeddings.lookup(ba.words[i]);
        for (std::size_t j = 0; j < bb.words.size(); ++j)
            cost[i * bb.words.size() + j] = euclidean(vi, *embeddings.lookup(bb.words[j]));
    }
    double d = solve_transport(ba.weights, bb.weights, cost);
    return {std::max(0.0, d), false};
}

} // namespace vulnmine::cluster
