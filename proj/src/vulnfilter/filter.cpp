#include <vulnmine/vulnfilter.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include <vulnmine/error.h>
#include <vulnmine/paths.h>
#include <vulnmine/text.h>
#include <vulnmine/titlekw.h>

namespace vulnmine::filter {

using corpus::CommitKey;
using corpus::CommitRecord;
using corpus::IssueRecord;
using nlohmann::json;

namespace {

std::vector<std::string> string_list(const json& j, std::string_view key)
{
    if (!j.contains(key))
        return {};
    const auto& v = j.at(std::string(key));
    if (!v.is_array())
        throw ConfigError("filter config: \"" + std::string(key) + "\" must be an array of strings");
    std::vector<std::string> out;
    for (const auto& s : v) {
        if (!s.is_string())
            throw ConfigError("filter config: \"" + std::string(key) + "\" must be an array of strings");
        out.push_back(s.get<std::string>());
    }
    return out;
}

std::vector<KeywordGroup> group_list(const json& j, std::string_view key)
{
    if (!j.contains(key))
        return {};
    const auto& v = j.at(std::string(key));
    if (!v.is_array())
        throw ConfigError("filter config: \"" + std::string(key) + "\" must be an array of keyword groups");
    std::vector<KeywordGroup> out;
    for (const auto& g : v) {
        if (!g.is_array())
            throw ConfigError("filter config: each \"" + std::string(key) + "\" group must be an array of strings");
        KeywordGroup group;
        for (const auto& w : g) {
            if (!w.is_string())
                throw ConfigError("filter config: each \"" + std::string(key) + "\" group must be an array of strings");
            group.push_back(w.get<std::string>());
        }
        out.push_back(std::move(group));
    }
    return out;
}

bool has_label(const IssueRecord& issue, const std::vector<std::string>& labels)
{
    for (const auto& have : issue.labels) {
        for (const auto& want : labels) {
            if (text::iequals(have, want))
                return true;
        }
    }
    return false;
}

// "SEC-*" and "SEC-" both match any title starting with "SEC-".
bool has_title_prefix(const IssueRecord& issue, const std::vector<std::string>& prefixes)
{
    auto title = text::trim(issue.title);
    for (auto p : prefixes) {
        if (!p.empty() && p.back() == '*')
            p.pop_back();
        if (!p.empty() && title.substr(0, p.size()) == p)
            return true;
    }
    return false;
}

std::vector<std::string> issue_tokens(const IssueRecord& issue)
{
    return titlekw::tokenize_words(issue.title + "\n" + issue.body);
}

bool matches_any(const std::vector<std::string>& tokens, const std::vector<KeywordCluster>& clusters,
                 Polarity polarity)
{
    for (const auto& c : clusters) {
        if (c.polarity != polarity)
            continue;
        for (const auto& m : c.members) {
            if (contains_phrase(tokens, m))
                return true;
        }
    }
    return false;
}

template <typename Pred>
IdSet select(const Corpus& corpus, const IdSet& pool, Pred pred)
{
    IdSet out;
    for (const auto& key : pool) {
        const auto* issue = corpus.find_issue(key);
        if (issue && pred(*issue))
            out.insert(key);
    }
    return out;
}

const std::vector<std::string>& suffixes_for(const FilterConfig& config, const std::string& project)
{
    auto it = config.source_suffixes.find(project);
    if (it == config.source_suffixes.end())
        throw ConfigError("filter config: no source_suffixes entry for project \"" + project + "\"");
    return it->second;
}

class UnionFind {
public:
    explicit UnionFind(std::size_t n)
        : m_parent(n)
    {
        std::iota(m_parent.begin(), m_parent.end(), std::size_t { 0 });
    }

    std::size_t find(std::size_t x)
    {
        while (m_parent[x] != x) {
            m_parent[x] = m_parent[m_parent[x]];
            x = m_parent[x];
        }
        return x;
    }

    // The smaller root survives so the result does not depend on merge order.
    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return;
        if (b < a)
            std::swap(a, b);
        m_parent[b] = a;
    }

private:
    std::vector<std::size_t> m_parent;
};

double cosine(std::span<const double> a, std::span<const double> b)
{
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

json key_list(const std::vector<IssueKey>& keys)
{
    json out = json::array();
    for (const auto& k : keys)
        out.push_back(k.str());
    return out;
}

json key_list(const IdSet& keys)
{
    return key_list(std::vector<IssueKey>(keys.begin(), keys.end()));
}

} // namespace

void FilterConfig::validate() const
{
    for (const auto& inc : include_labels) {
        for (const auto& exc : exclude_labels) {
            if (text::iequals(inc, exc))
                throw ConfigError("filter config: label \"" + inc + "\" is both an include and an exclude label");
        }
    }
    std::set<std::string> include_words;
    for (const auto& g : include_keywords) {
        if (g.empty())
            throw ConfigError("filter config: empty include_keywords group");
        include_words.insert(g.begin(), g.end());
    }
    for (const auto& g : exclude_keywords) {
        if (g.empty())
            throw ConfigError("filter config: empty exclude_keywords group");
        for (const auto& w : g) {
            if (include_words.count(w))
                throw ConfigError("filter config: keyword \"" + w + "\" is both an include and an exclude keyword");
        }
    }
    for (const auto& [project, suffixes] : source_suffixes) {
        if (suffixes.empty())
            throw ConfigError("filter config: empty source_suffixes for project \"" + project + "\"");
    }
    if (min_word_frequency < 1)
        throw ConfigError("filter config: min_word_frequency must be >= 1");
    if (!(similarity_threshold >= -1.0 && similarity_threshold <= 1.0))
        throw ConfigError("filter config: similarity_threshold must lie in [-1, 1]");
}

FilterConfig default_filter_config()
{
    FilterConfig c;
    c.source_suffixes = {
        { "bitcoin", { ".cpp", ".h", ".py", ".sh", ".cc", ".c", ".java" } },
        { "ethereum", { ".go", ".c", ".h", ".s", ".sol", ".js" } },
        { "monero", { ".cpp", ".h", ".c", ".cc", ".hpp", ".inl", ".py", ".sh" } },
        { "stellar", { ".cpp", ".h", ".c", ".hpp", ".py", ".sh", ".rs" } },
    };
    c.test_path_markers = { "/test/", "/tests/", "/testdata/", "/qa/", "_test.", "/test_" };
    c.include_labels = { "Privacy", "obsolete:vuln" };
    c.title_prefix_markers = { "SEC-" };
    c.exclude_labels = { "Refactoring", "Docs", "type:feature" };
    c.include_keywords = {
        { "vulnerability", "vulnerable", "vuln", "exploit", "attack", "attacker" },
        { "dos", "denial" },
        { "crash", "segfault", "panic", "abort" },
        { "overflow", "underflow" },
        { "double-spend", "doublespend" },
        { "security", "cve" },
    };
    c.exclude_keywords = {
        { "typo", "typos", "spelling" },
        { "doc", "docs", "documentation", "readme" },
        { "refactor", "refactoring", "cleanup" },
        { "translation", "translations" },
    };
    return c;
}

FilterConfig filter_config_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("filter config: expected a JSON object");
    FilterConfig c;
    if (j.contains("source_suffixes")) {
        const auto& m = j.at("source_suffixes");
        if (!m.is_object())
            throw ConfigError("filter config: \"source_suffixes\" must map project to suffix list");
        for (const auto& [project, list] : m.items())
            c.source_suffixes[project] = string_list(json { { "s", list } }, "s");
    }
    c.test_path_markers = string_list(j, "test_path_markers");
    c.include_labels = string_list(j, "include_labels");
    c.title_prefix_markers = string_list(j, "title_prefix_markers");
    c.exclude_labels = string_list(j, "exclude_labels");
    c.include_keywords = group_list(j, "include_keywords");
    c.exclude_keywords = group_list(j, "exclude_keywords");
    try {
        if (j.contains("min_word_frequency")) {
            auto f = j.at("min_word_frequency").get<std::int64_t>();
            if (f < 1)
                throw ConfigError("filter config: min_word_frequency must be >= 1");
            c.min_word_frequency = static_cast<std::size_t>(f);
        }
        if (j.contains("similarity_threshold"))
            c.similarity_threshold = j.at("similarity_threshold").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("filter config: ") + e.what());
    }
    c.validate();
    return c;
}

json filter_config_to_json(const FilterConfig& c)
{
    json j;
    j["source_suffixes"] = c.source_suffixes;
    j["test_path_markers"] = c.test_path_markers;
    j["include_labels"] = c.include_labels;
    j["title_prefix_markers"] = c.title_prefix_markers;
    j["exclude_labels"] = c.exclude_labels;
    j["include_keywords"] = c.include_keywords;
    j["exclude_keywords"] = c.exclude_keywords;
    j["min_word_frequency"] = c.min_word_frequency;
    j["similarity_threshold"] = c.similarity_threshold;
    return j;
}

std::string_view to_string(Polarity polarity)
{
    switch (polarity) {
    case Polarity::Vulnerability:
        return "vulnerability";
    case Polarity::NonVulnerability:
        return "non-vulnerability";
    case Polarity::Unreviewed:
        return "unreviewed";
    }
    return "unreviewed";
}

Polarity polarity_from_string(std::string_view s)
{
    if (s == "vulnerability")
        return Polarity::Vulnerability;
    if (s == "non-vulnerability")
        return Polarity::NonVulnerability;
    if (s == "unreviewed")
        return Polarity::Unreviewed;
    throw ConfigError("keyword clusters: unknown polarity \"" + std::string(s) + "\"");
}

void validate_clusters(const std::vector<KeywordCluster>& clusters)
{
    std::map<std::string, std::string> owner;
    for (const auto& c : clusters) {
        if (c.members.empty())
            throw ConfigError("keyword clusters: cluster \"" + c.representative + "\" has no members");
        for (const auto& m : c.members) {
            auto [it, inserted] = owner.emplace(text::to_lower(m), c.representative);
            if (!inserted)
                throw ConfigError("keyword clusters: word \"" + m + "\" appears in clusters \"" + it->second +
                                  "\" and \"" + c.representative + "\"");
        }
    }
}

std::vector<KeywordCluster> clusters_from_config(const FilterConfig& config)
{
    std::vector<KeywordCluster> out;
    auto add = [&](const std::vector<KeywordGroup>& groups, Polarity polarity) {
        for (const auto& g : groups) {
            if (!g.empty())
                out.push_back({ g.front(), g, polarity });
        }
    };
    add(config.include_keywords, Polarity::Vulnerability);
    add(config.exclude_keywords, Polarity::NonVulnerability);
    validate_clusters(out);
    return out;
}

std::vector<KeywordCluster> build_keyword_clusters(const Corpus& corpus, const cluster::EmbeddingTable& embeddings,
                                                   const FilterConfig& config)
{
    std::map<std::string, std::size_t> freq;
    for (const auto& issue : corpus.issues()) {
        for (auto& t : issue_tokens(issue))
            ++freq[std::move(t)];
    }
    std::vector<std::string> words;
    std::vector<std::size_t> counts;
    for (const auto& [w, n] : freq) {
        if (n >= config.min_word_frequency) {
            words.push_back(w);
            counts.push_back(n);
        }
    }
    if (words.empty())
        return {};

    std::vector<std::optional<std::span<const double>>> vecs;
    vecs.reserve(words.size());
    std::size_t covered = 0;
    for (const auto& w : words) {
        vecs.push_back(embeddings.lookup(w));
        if (vecs.back())
            ++covered;
    }
    if (covered == 0)
        throw ConfigError("keyword clustering: none of the " + std::to_string(words.size()) +
                          " frequent words has an embedding; use an embedding file that covers the corpus vocabulary");
    spdlog::debug("keyword clustering: {} words, {} with embeddings", words.size(), covered);

    UnionFind uf(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (!vecs[i])
            continue;
        for (std::size_t k = i + 1; k < words.size(); ++k) {
            if (vecs[k] && cosine(*vecs[i], *vecs[k]) >= config.similarity_threshold)
                uf.unite(i, k);
        }
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < words.size(); ++i)
        groups[uf.find(i)].push_back(i);

    struct Pending {
        std::size_t total = 0;
        KeywordCluster cluster;
    };
    std::vector<Pending> pending;
    for (auto& [root, idx] : groups) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
        Pending p;
        for (auto i : idx) {
            p.total += counts[i];
            p.cluster.members.push_back(words[i]);
        }
        p.cluster.representative = p.cluster.members.front();
        pending.push_back(std::move(p));
    }
    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
        if (a.total != b.total)
            return a.total > b.total;
        return a.cluster.representative < b.cluster.representative;
    });
    std::vector<KeywordCluster> out;
    out.reserve(pending.size());
    for (auto& p : pending)
        out.push_back(std::move(p.cluster));
    return out;
}

json clusters_to_json(const std::vector<KeywordCluster>& clusters)
{
    json arr = json::array();
    for (const auto& c : clusters) {
        arr.push_back({ { "representative", c.representative },
                        { "members", c.members },
                        { "polarity", std::string(to_string(c.polarity)) } });
    }
    return { { "schema_version", corpus::kSchemaVersion }, { "clusters", arr } };
}

std::vector<KeywordCluster> clusters_from_json(const json& j)
{
    const json* arr = &j;
    if (j.is_object()) {
        if (!j.contains("clusters"))
            throw ConfigError("keyword clusters: missing \"clusters\" array");
        arr = &j.at("clusters");
    }
    if (!arr->is_array())
        throw ConfigError("keyword clusters: expected an array of clusters");
    std::vector<KeywordCluster> out;
    try {
        for (const auto& c : *arr) {
            KeywordCluster k;
            k.members = c.at("members").get<std::vector<std::string>>();
            k.representative = c.contains("representative") ? c.at("representative").get<std::string>()
                                                            : (k.members.empty() ? "" : k.members.front());
            k.polarity = polarity_from_string(c.value("polarity", std::string("unreviewed")));
            out.push_back(std::move(k));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("keyword clusters: ") + e.what());
    }
    validate_clusters(out);
    return out;
}

IdSet all_issues(const Corpus& corpus)
{
    IdSet out;
    for (const auto& issue : corpus.issues())
        out.insert({ issue.project, issue.id });
    return out;
}

bool is_test_only_commit(const CommitRecord& commit, const std::vector<std::string>& markers)
{
    return std::all_of(commit.files.begin(), commit.files.end(),
                       [&](const std::string& f) { return paths::contains_marker(f, markers); });
}

bool contains_phrase(const std::vector<std::string>& text_tokens, std::string_view phrase)
{
    auto needle = titlekw::tokenize_words(phrase);
    if (needle.empty())
        return false;
    return std::search(text_tokens.begin(), text_tokens.end(), needle.begin(), needle.end()) != text_tokens.end();
}

IdSet stage_commit_filter(const Corpus& corpus, const LinkTable& links, const IdSet& pool)
{
    return select(corpus, pool,
                  [&](const IssueRecord& issue) { return !links.is_linked({ issue.project, issue.id }); });
}

IdSet stage_source_file_filter(const Corpus& corpus, const LinkTable& links, const FilterConfig& config,
                               const IdSet& pool)
{
    return select(corpus, pool, [&](const IssueRecord& issue) {
        const auto& suffixes = suffixes_for(config, issue.project);
        for (const auto& id : links.commits_of({ issue.project, issue.id })) {
            const auto* commit = corpus.find_commit(CommitKey { issue.project, id });
            if (!commit)
                continue;
            for (const auto& f : commit->files) {
                if (paths::has_suffix_in(f, suffixes))
                    return false;
            }
        }
        return true;
    });
}

IdSet stage_test_only_filter(const Corpus& corpus, const LinkTable& links, const FilterConfig& config,
                             const IdSet& pool)
{
    return select(corpus, pool, [&](const IssueRecord& issue) {
        auto ids = links.commits_of({ issue.project, issue.id });
        bool any = false;
        for (const auto& id : ids) {
            const auto* commit = corpus.find_commit(CommitKey { issue.project, id });
            if (!commit)
                continue;
            any = true;
            if (!is_test_only_commit(*commit, config.test_path_markers))
                return false;
        }
        return any;
    });
}

IdSet stage_label_include(const Corpus& corpus, const FilterConfig& config, const IdSet& pool)
{
    return select(corpus, pool, [&](const IssueRecord& issue) {
        return has_label(issue, config.include_labels) || has_title_prefix(issue, config.title_prefix_markers);
    });
}

IdSet stage_label_exclude(const Corpus& corpus, const FilterConfig& config, const IdSet& pool)
{
    return select(corpus, pool, [&](const IssueRecord& issue) { return has_label(issue, config.exclude_labels); });
}

IdSet stage_keyword_include(const Corpus& corpus, const std::vector<KeywordCluster>& clusters, const IdSet& pool)
{
    return select(corpus, pool, [&](const IssueRecord& issue) {
        return matches_any(issue_tokens(issue), clusters, Polarity::Vulnerability);
    });
}

IdSet stage_keyword_exclude(const Corpus& corpus, const std::vector<KeywordCluster>& clusters, const IdSet& pool)
{
    return select(corpus, pool, [&](const IssueRecord& issue) {
        auto tokens = issue_tokens(issue);
        return matches_any(tokens, clusters, Polarity::NonVulnerability) &&
               !matches_any(tokens, clusters, Polarity::Vulnerability);
    });
}

FilterReport run_pipeline(const Corpus& corpus, const LinkTable& links, const FilterConfig& config,
                          const std::vector<KeywordCluster>& clusters)
{
    config.validate();
    validate_clusters(clusters);

    FilterReport report;
    IdSet pool = all_issues(corpus);
    report.corpus_size = pool.size();

    auto apply = [&](std::string stage, StageAction action, const IdSet& hit) {
        for (const auto& k : hit)
            pool.erase(k);
        (action == StageAction::Include ? report.included : report.discarded).insert(hit.begin(), hit.end());
        StageRow row;
        row.stage = std::move(stage);
        row.action = action;
        row.count = hit.size();
        row.delta = -static_cast<std::ptrdiff_t>(hit.size());
        row.remaining = pool.size();
        row.members.assign(hit.begin(), hit.end());
        spdlog::debug("filter {}: {} {} -> {} remaining", row.stage,
                      action == StageAction::Include ? "included" : "excluded", row.count, row.remaining);
        report.rows.push_back(std::move(row));
    };

    apply("S0", StageAction::Exclude, stage_commit_filter(corpus, links, pool));
    apply("S1", StageAction::Exclude, stage_source_file_filter(corpus, links, config, pool));
    apply("S2", StageAction::Exclude, stage_test_only_filter(corpus, links, config, pool));
    apply("S3a", StageAction::Include, stage_label_include(corpus, config, pool));
    apply("S3b", StageAction::Exclude, stage_label_exclude(corpus, config, pool));
    apply("S4a", StageAction::Include, stage_keyword_include(corpus, clusters, pool));
    apply("S4b", StageAction::Exclude, stage_keyword_exclude(corpus, clusters, pool));
    report.undecided = pool;
    return report;
}

json report_to_json(const FilterReport& report)
{
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({ { "stage", r.stage },
                         { "action", r.action == StageAction::Include ? "include" : "exclude" },
                         { "count", r.count },
                         { "delta", r.delta },
                         { "remaining", r.remaining },
                         { "members", key_list(r.members) } });
    }
    return { { "corpus_size", report.corpus_size },
             { "stages", rows },
             { "included", key_list(report.included) },
             { "discarded", key_list(report.discarded) },
             { "undecided", key_list(report.undecided) } };
}

std::string report_to_csv(const FilterReport& report)
{
    std::ostringstream out;
    out << "stage,action,count,delta,remaining\n";
    out << "start,,,," << report.corpus_size << "\n";
    for (const auto& r : report.rows) {
        out << r.stage << "," << (r.action == StageAction::Include ? "include" : "exclude") << "," << r.count << ","
            << r.delta << "," << r.remaining << "\n";
    }
    return out.str();
}

} // namespace vulnmine::filter
