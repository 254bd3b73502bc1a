#include "commands.h"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include <vulnmine/error.h>
#include <vulnmine/io.h>
#include <vulnmine/patscan.h>

namespace vulnmine::cli {

namespace fs = std::filesystem;
using corpus::IssueKey;
using nlohmann::json;

namespace {

json header(const Context& ctx, std::string_view command)
{
    return { { "tool", "vulnmine" },
             { "version", VULNMINE_VERSION },
             { "command", command },
             { "config_digest", ctx.config.digest } };
}

void write_json(const Context& ctx, const std::string& name, std::string_view command, json payload)
{
    json doc = { { "header", header(ctx, command) } };
    for (auto& [k, v] : payload.items())
        doc[k] = std::move(v);
    io::write_atomic(ctx.out_dir / name, doc.dump(2) + "\n");
}

// Text artifacts open with one "#" line carrying the same header fields.
void write_text(const Context& ctx, const std::string& name, std::string_view command, const std::string& body)
{
    std::string line = "# tool=vulnmine version=" VULNMINE_VERSION " command=" + std::string(command) +
                       " config_digest=" + ctx.config.digest + "\n";
    io::write_atomic(ctx.out_dir / name, line + body);
}

json read_artifact(const Context& ctx, const std::string& name, const std::string& producer)
{
    auto path = ctx.out_dir / name;
    std::error_code ec;
    if (!fs::exists(path, ec))
        throw MissingArtifact("missing artifact " + path.string() + "; run `vulnmine " + producer + "` first");
    auto doc = io::read_json(path);
    auto digest = doc.value("/header/config_digest"_json_pointer, std::string());
    if (digest != ctx.config.digest)
        spdlog::warn("{} was produced under a different configuration (digest {})", name, digest);
    return doc;
}

const fs::path& require(const std::optional<fs::path>& p, const std::string& what)
{
    if (!p)
        throw ConfigError("config: this command needs \"" + what + "\"");
    return *p;
}

corpus::Corpus read_corpus(const Context& ctx)
{
    auto doc = read_artifact(ctx, "corpus.json", "ingest");
    return corpus::corpus_from_json(doc.at("issues"), doc.at("commits"));
}

corpus::LinkTable read_links(const Context& ctx)
{
    return corpus::link_table_from_json(read_artifact(ctx, "links.json", "ingest").at("links"));
}

IssueKey parse_key(const std::string& s)
{
    auto hash = s.rfind('#');
    if (hash == std::string::npos || hash == 0)
        throw LoadError("candidate key \"" + s + "\" is not project#number");
    try {
        return { s.substr(0, hash), std::stoll(s.substr(hash + 1)) };
    } catch (const std::exception&) {
        throw LoadError("candidate key \"" + s + "\" is not project#number");
    }
}

std::set<IssueKey> read_candidates(const Context& ctx)
{
    std::set<IssueKey> out;
    auto doc = read_artifact(ctx, "candidates.json", "filter");
    for (const auto& k : doc.at("candidates"))
        out.insert(parse_key(k.get<std::string>()));
    return out;
}

std::string fixed(double v, int digits = 4)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::vector<double> grid_for(const ClusterSettings& s, cluster::Algorithm algorithm, std::size_t n)
{
    if (algorithm == cluster::Algorithm::AffinityPropagation)
        return s.damping_grid.empty() ? cluster::default_damping_grid() : s.damping_grid;
    if (!s.cluster_grid.empty())
        return s.cluster_grid;
    auto grid = cluster::default_cluster_grid(n);
    // Below the default range every scoreable count 2..n-1 is tried.
    if (grid.empty()) {
        for (std::size_t k = 2; k < n; ++k)
            grid.push_back(static_cast<double>(k));
    }
    return grid;
}

struct Sweeps {
    json doc = json::array();
    std::string summary;
};

Sweeps run_sweeps(const cluster::DistanceMatrix& d, const ClusterSettings& s)
{
    Sweeps out;
    for (auto algorithm : s.algorithms) {
        auto grid = grid_for(s, algorithm, d.size());
        auto r = cluster::sweep_clustering(d, algorithm, grid, s.ap, s.normalize_similarity);
        json table = json::array();
        for (const auto& row : r.table) {
            table.push_back({ { "parameter", row.parameter },
                              { "silhouette", row.score ? json(*row.score) : json(nullptr) },
                              { "clusters", row.clusters },
                              { "note", row.note } });
        }
        out.doc.push_back({ { "algorithm", std::string(cluster::to_string(algorithm)) },
                            { "best_parameter", r.best_parameter },
                            { "best_silhouette", r.best_score },
                            { "table", std::move(table) },
                            { "assignment", cluster::assignment_to_json(r.best, d.ids()) } });
        if (!out.summary.empty())
            out.summary += ", ";
        out.summary += std::string(cluster::to_string(algorithm)) + " " +
                       std::to_string(r.best.cluster_count()) + " clusters (silhouette " + fixed(r.best_score) + ")";
    }
    return out;
}

} // namespace

int cmd_ingest(const Context& ctx)
{
    const auto& cfg = ctx.config;
    auto loaded = corpus::load_corpus(require(cfg.issues, "corpus.issues"), require(cfg.commits, "corpus.commits"));
    auto dedupe = corpus::dedupe_commits(loaded);
    auto links = corpus::link_issues_to_commits(dedupe.corpus);

    write_json(ctx, "corpus.json", "ingest",
               { { "issues", corpus::issues_to_json(dedupe.corpus) },
                 { "commits", corpus::commits_to_json(dedupe.corpus) } });
    write_json(ctx, "links.json", "ingest", { { "links", corpus::link_table_to_json(links) } });
    json removed = json::array();
    for (const auto& r : dedupe.removed)
        removed.push_back({ { "project", r.project }, { "kept", r.kept }, { "removed", r.removed } });
    json empty = json::array();
    for (const auto& k : dedupe.empty_commits)
        empty.push_back({ { "project", k.project }, { "commit", k.id } });
    write_json(ctx, "dedupe.json", "ingest", { { "removed", removed }, { "empty_commits", empty } });

    auto counts = dedupe.corpus.counts();
    ctx.out << "ingest: " << counts.issues << " issues, " << counts.commits << " commits (" << dedupe.removed.size()
            << " duplicates removed), " << links.links.size() << " linked issues\n";
    return kExitOk;
}

int cmd_filter(const Context& ctx)
{
    const auto& cfg = ctx.config;
    auto corpus = read_corpus(ctx);
    auto links = read_links(ctx);
    std::vector<filter::KeywordCluster> clusters;
    if (cfg.keyword_source == KeywordSource::Embeddings)
        clusters = filter::build_keyword_clusters(corpus, cluster::load_embeddings(*cfg.embeddings), cfg.filter);
    else
        clusters = filter::clusters_from_config(cfg.filter);
    auto report = filter::run_pipeline(corpus, links, cfg.filter, clusters);

    json candidates = json::array();
    for (const auto& k : report.included)
        candidates.push_back(k.str());
    write_json(ctx, "keyword_clusters.json", "filter", { { "clusters", filter::clusters_to_json(clusters) } });
    write_json(ctx, "filter_report.json", "filter", { { "report", filter::report_to_json(report) } });
    write_text(ctx, "filter_ledger.csv", "filter", filter::report_to_csv(report));
    write_json(ctx, "candidates.json", "filter", { { "candidates", candidates } });

    ctx.out << "filter: " << report.corpus_size << " issues, " << report.included.size() << " included, "
            << report.discarded.size() << " discarded, " << report.undecided.size() << " undecided\n";
    return kExitOk;
}

int cmd_modules(const Context& ctx)
{
    const auto& cfg = ctx.config;
    auto candidates = read_candidates(ctx);
    auto corpus = read_corpus(ctx);
    auto links = read_links(ctx);
    auto counts = modules::aggregate_module_counts(candidates, links, corpus, cfg.module_rules, cfg.architecture,
                                                   cfg.overrides);
    write_json(ctx, "modules.json", "modules", { { "modules", modules::module_counts_to_json(counts, cfg.architecture) } });
    write_text(ctx, "modules.csv", "modules", modules::module_counts_to_csv(counts, cfg.architecture));

    ctx.out << "modules: " << counts.issues << " candidate issues, " << counts.module_total() << " module hits, "
            << counts.unmapped.size() << " unmapped paths, " << counts.flagged.size() << " flagged files\n";
    return kExitOk;
}

int cmd_types(const Context& ctx)
{
    const auto& cfg = ctx.config;
    auto candidates = read_candidates(ctx);
    auto corpus = read_corpus(ctx);

    std::vector<const corpus::IssueRecord*> issues;
    std::vector<std::vector<std::string>> cleaned;
    std::vector<std::vector<titlekw::Removal>> removals;
    for (const auto& key : candidates) {
        const auto* issue = corpus.find_issue(key);
        if (!issue)
            throw LoadError("candidate " + key.str() + " is not in corpus.json");
        auto c = titlekw::clean_title(issue->title, cfg.title_rules);
        issues.push_back(issue);
        cleaned.push_back(std::move(c.tokens));
        removals.push_back(std::move(c.removals));
    }
    auto vocab = titlekw::build_pos_vocabulary(cleaned, cfg.pos_seed);

    json rows = json::array();
    std::size_t with_keywords = 0;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        auto kw = titlekw::extract_type_keywords(cleaned[i], titlekw::select_targets(cleaned[i], vocab));
        with_keywords += !kw.keywords.empty();
        json rem = json::array();
        for (const auto& r : removals[i])
            rem.push_back({ { "rule", r.rule }, { "text", r.text } });
        rows.push_back({ { "issue", IssueKey { issues[i]->project, issues[i]->id }.str() },
                         { "title", issues[i]->title },
                         { "cleaned", cleaned[i] },
                         { "removals", rem },
                         { "keywords", kw.keywords },
                         { "target_verb", kw.target_verb ? json(*kw.target_verb) : json(nullptr) },
                         { "target_preposition", kw.target_preposition ? json(*kw.target_preposition) : json(nullptr) },
                         { "rule", std::string(titlekw::to_string(kw.rule_fired)) } });
    }
    write_json(ctx, "types.json", "types", { { "rows", rows }, { "vocabulary", titlekw::pos_vocabulary_to_json(vocab) } });

    ctx.out << "types: " << issues.size() << " titles, " << with_keywords << " with type keywords\n";
    return kExitOk;
}

int cmd_signatures(const Context& ctx)
{
    const auto& cfg = ctx.config;
    auto candidates = read_candidates(ctx);
    auto corpus = read_corpus(ctx);
    auto links = read_links(ctx);

    // Each linked commit is analysed once; fragments list every issue that links it.
    std::map<corpus::CommitKey, std::vector<std::string>> commits;
    for (const auto& key : candidates) {
        for (const auto& id : links.commits_of(key))
            commits[{ key.project, id }].push_back(key.str());
    }
    json fragments = json::array();
    std::size_t empty = 0;
    std::size_t missing = 0;
    for (const auto& [ck, issues] : commits) {
        const auto* commit = corpus.find_commit(ck);
        if (!commit) {
            ++missing;
            continue;
        }
        for (const auto& r : codesig::analyze_commit(*commit, cfg.codesig)) {
            auto j = codesig::fragment_record_to_json(r);
            j["project"] = ck.project;
            j["issues"] = issues;
            empty += r.signature.empty;
            fragments.push_back(std::move(j));
        }
    }
    write_json(ctx, "signatures.json", "signatures", { { "fragments", fragments } });

    ctx.out << "signatures: " << fragments.size() << " fragments from " << commits.size() - missing << " commits ("
            << empty << " with empty signatures)\n";
    return kExitOk;
}

int cmd_cluster_text(const Context& ctx)
{
    const auto& cfg = ctx.config;
    auto types = read_artifact(ctx, "types.json", "types");
    auto embeddings = cluster::load_embeddings(require(cfg.embeddings, "embeddings"));

    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> docs;
    for (const auto& row : types.at("rows")) {
        auto kw = row.at("keywords").get<std::vector<std::string>>();
        if (kw.empty())
            continue;
        ids.push_back(row.at("issue").get<std::string>());
        docs.push_back(std::move(kw));
    }
    if (ids.size() < 3)
        throw InvalidArgument("cluster --text: need at least 3 titles with type keywords, have " +
                              std::to_string(ids.size()));
    std::vector<std::vector<char>> fallback(ids.size(), std::vector<char>(ids.size(), 0));
    auto d = cluster::pairwise_distance_matrix(
        ids,
        [&](std::size_t i, std::size_t j) {
            auto r = cluster::wmd_distance(docs[i], docs[j], embeddings);
            fallback[i][j] = r.fallback;
            return r.distance;
        },
        ctx.jobs);
    std::size_t fallbacks = 0;
    for (const auto& row : fallback)
        fallbacks += static_cast<std::size_t>(std::count(row.begin(), row.end(), 1));

    auto sweeps = run_sweeps(d, cfg.text_clustering);
    json items = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i)
        items.push_back({ { "id", ids[i] }, { "keywords", docs[i] } });
    write_json(ctx, "text_clusters.json", "cluster --text",
               { { "items", items },
                 { "jaccard_fallback_pairs", fallbacks },
                 { "distance", cluster::distance_matrix_to_json(d) },
                 { "sweeps", sweeps.doc } });

    ctx.out << "cluster --text: " << ids.size() << " titles; " << sweeps.summary << "\n";
    return kExitOk;
}

int cmd_cluster_code(const Context& ctx)
{
    const auto& cfg = ctx.config;
    auto sigs = read_artifact(ctx, "signatures.json", "signatures");

    std::vector<std::string> ids;
    std::vector<codesig::Signature> signatures;
    for (const auto& f : sigs.at("fragments")) {
        auto tokens = f.at("signature").get<codesig::Signature>();
        if (tokens.empty())
            continue;
        ids.push_back(f.at("id").get<std::string>());
        signatures.push_back(std::move(tokens));
    }
    if (ids.size() < 3)
        throw InvalidArgument("cluster --code: need at least 3 non-empty signatures, have " +
                              std::to_string(ids.size()));
    auto d = codesig::signature_distance_matrix(ids, signatures, ctx.jobs);

    auto sweeps = run_sweeps(d, cfg.code_clustering);
    json items = json::array();
    for (std::size_t i = 0; i < ids.size(); ++i)
        items.push_back({ { "id", ids[i] }, { "signature", codesig::join_signature(signatures[i]) } });
    write_json(ctx, "code_clusters.json", "cluster --code",
               { { "items", items }, { "distance", cluster::distance_matrix_to_json(d) }, { "sweeps", sweeps.doc } });

    ctx.out << "cluster --code: " << ids.size() << " signatures; " << sweeps.summary << "\n";
    return kExitOk;
}

int cmd_scan(const Context& ctx, const fs::path& target, const std::optional<fs::path>& patterns_override)
{
    const auto& cfg = ctx.config;
    auto patterns_path = patterns_override ? *patterns_override : require(cfg.patterns, "patterns");
    auto patterns = scan::load_patterns(patterns_path);
    scan::ScanConfig sc;
    sc.codesig = cfg.codesig;
    sc.jobs = ctx.jobs;
    auto report = scan::scan_repo(target, patterns, sc);

    auto j = scan::findings_to_json(report);
    j["target"] = target.generic_string();
    j["patterns"] = patterns.size();
    write_json(ctx, "scan_findings.json", "scan", j);
    write_text(ctx, "scan_findings.txt", "scan", scan::findings_to_table(report));

    std::map<scan::Verdict, std::size_t> by;
    for (const auto& f : report.findings)
        ++by[f.verdict];
    ctx.out << "scan: " << report.files_scanned << " files, " << report.findings.size() << " findings ("
            << by[scan::Verdict::Vulnerable] << " vulnerable, " << by[scan::Verdict::Patched] << " patched, "
            << by[scan::Verdict::AnchorOnly] << " anchor-only), " << report.warnings.size() << " warnings\n";
    return report.any_vulnerable() ? kExitVulnerable : kExitOk;
}

} // namespace vulnmine::cli
