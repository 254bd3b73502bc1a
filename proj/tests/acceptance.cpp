// Acceptance gate: one [PASS]/[FAIL] line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "oracles.h"
#include "support.h"
#include "vulnmine/cli.h"
#include "vulnmine/codesig.h"
#include "vulnmine/corpus.h"
#include "vulnmine/diff.h"
#include "vulnmine/io.h"
#include "vulnmine/patscan.h"
#include "vulnmine/textcluster.h"
#include "vulnmine/titlekw.h"
#include "vulnmine/vulnfilter.h"

using namespace vulnmine;
using nlohmann::json;
using testsupport::fixture;
using testsupport::Gen;

namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kTitleBudget = 1.0;
constexpr double kHunkBudget = 1.0;
constexpr double kPairThreshold = 0.5;
constexpr double kWmdTolerance = 1e-9;
constexpr double kWmdBudget = 10.0;
constexpr double kSilhouetteTolerance = 1e-12;
constexpr double kApDamping = 0.78;
constexpr std::size_t kApIterations = 200;
constexpr double kScanBudget = 5.0;

struct Check {
    bool ok = true;
    std::ostringstream why;

    void expect(bool cond, const std::string& what)
    {
        if (!cond && ok)
            why << what;
        ok = ok && cond;
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

cluster::DistanceMatrix from_rows(const oracle::Matrix& rows)
{
    std::vector<std::string> ids;
    std::vector<double> values;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ids.push_back("i" + std::to_string(i));
        values.insert(values.end(), rows[i].begin(), rows[i].end());
    }
    return cluster::DistanceMatrix(ids, values);
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

std::vector<codesig::FragmentRecord> analyze_diff(const std::string& name)
{
    corpus::CommitRecord commit;
    commit.id = name;
    commit.hunks = corpus::parse_unified_diff(io::read_file(fixture("hunks/" + name)));
    for (const auto& h : commit.hunks)
        commit.files.push_back(h.file_path);
    return codesig::analyze_commit(commit, codesig::default_codesig_config());
}

std::vector<std::string> texts(const std::vector<codesig::FragmentLine>& lines)
{
    std::vector<std::string> out;
    for (const auto& l : lines)
        out.push_back(l.text);
    return out;
}

Check title_keywords()
{
    Check c;
    auto start = Clock::now();
    auto rows = io::read_json(fixture("titles/examples.json"));
    std::vector<std::vector<std::string>> cleaned;
    for (const auto& row : rows)
        cleaned.push_back(titlekw::clean_title(row.at("raw").get<std::string>(), titlekw::TitleRules {}).tokens);
    auto vocab = titlekw::build_pos_vocabulary(cleaned, titlekw::default_pos_seed());
    std::size_t exact = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto kw = titlekw::extract_type_keywords(cleaned[i], titlekw::select_targets(cleaned[i], vocab));
        bool same = cleaned[i] == rows[i].at("cleaned").get<std::vector<std::string>>() &&
                    kw.keywords == rows[i].at("keywords").get<std::vector<std::string>>();
        exact += same;
        c.expect(same, rows[i].at("id").get<std::string>() + " differs; ");
    }
    double t = seconds_since(start);
    c.expect(rows.size() == 5, "expected five titles; ");
    c.expect(t < kTitleBudget, "over time budget; ");
    c.why << exact << "/" << rows.size() << " exact, " << t << "s";
    return c;
}

Check hunk_signatures()
{
    Check c;
    auto start = Clock::now();
    auto expected = io::read_json(fixture("hunks/expected.json"));
    std::size_t exact = 0;
    std::size_t total = 0;
    for (const auto& [file, spec] : expected.items()) {
        auto records = analyze_diff(file);
        const auto& fragments = spec.at("fragments");
        c.expect(records.size() == fragments.size(), file + " fragment count; ");
        for (std::size_t i = 0; i < std::min(records.size(), fragments.size()); ++i) {
            ++total;
            std::vector<std::size_t> origins;
            for (const auto& l : records[i].fragment.deleted)
                origins.push_back(l.origin);
            for (const auto& l : records[i].fragment.added)
                origins.push_back(l.origin);
            std::sort(origins.begin(), origins.end());
            bool same = origins == fragments[i].at("origins").get<std::vector<std::size_t>>() &&
                        codesig::join_signature(records[i].signature.tokens) == fragments[i].at("signature").get<std::string>();
            exact += same;
            c.expect(same, fragments[i].at("name").get<std::string>() + " differs; ");
        }
    }
    double t = seconds_since(start);
    c.expect(total == 6, "expected six fragments; ");
    c.expect(t < kHunkBudget, "over time budget; ");
    c.why << exact << "/" << total << " fragments token-identical, " << t << "s";
    return c;
}

Check pairing_rule()
{
    Check c;
    auto records = analyze_diff("monero_1d5e8f46.diff");
    c.expect(records.size() == 4, "expected four fragments; ");
    std::size_t cn_pairs = 0;
    for (const auto& r : records) {
        auto table = oracle::similarity_table(texts(r.fragment.deleted), texts(r.fragment.added));
        auto want = oracle::greedy_pairs(table, kPairThreshold);
        std::vector<std::pair<std::size_t, std::size_t>> got;
        for (const auto& p : r.pairs) {
            if (p.deleted && p.added) {
                got.emplace_back(*p.deleted, *p.added);
                if (r.fragment.deleted[*p.deleted].text.starts_with("cn_fast_hash"))
                    ++cn_pairs;
            }
        }
        c.expect(got == want, r.fragment.id + " pairs differ from all-pairs oracle; ");
    }
    // memset/assert additions: best similarity against any deleted line stays below threshold.
    double best_unpaired = 0.0;
    if (!records.empty()) {
        const auto& f = records[0].fragment;
        for (const auto& a : f.added) {
            if (!a.text.starts_with("memset") && !a.text.starts_with("assert"))
                continue;
            for (const auto& d : f.deleted)
                best_unpaired = std::max(best_unpaired, oracle::line_similarity(d.text, a.text));
            for (const auto& p : records[0].pairs)
                c.expect(!(p.added && f.added[*p.added].text == a.text && p.deleted), a.text + " paired; ");
        }
    }
    c.expect(best_unpaired < kPairThreshold, "memset/assert similarity reaches threshold; ");
    c.expect(cn_pairs == 3, "expected three cn_fast_hash pairs; ");
    c.why << cn_pairs << " cn_fast_hash pairs, memset/assert max similarity " << best_unpaired;
    return c;
}

Check filter_ledger()
{
    Check c;
    auto corpus = corpus::load_corpus(fixture("filter/issues.json"), fixture("filter/commits.json"));
    auto links = corpus::link_issues_to_commits(corpus);
    auto config = filter::filter_config_from_json(io::read_json(fixture("filter/config.json")));
    auto report = filter::run_pipeline(corpus, links, config, filter::clusters_from_config(config));
    const std::vector<std::tuple<std::string, std::ptrdiff_t, std::size_t>> want = {
        { "S0", -3, 17 }, { "S1", -3, 14 }, { "S2", -2, 12 }, { "S3a", -3, 9 },
        { "S3b", -2, 7 }, { "S4a", -3, 4 }, { "S4b", -2, 2 },
    };
    c.expect(report.corpus_size == 20, "corpus size; ");
    c.expect(report.rows.size() == want.size(), "stage count; ");
    std::size_t before = report.corpus_size;
    std::size_t stages_ok = 0;
    for (std::size_t i = 0; i < std::min(want.size(), report.rows.size()); ++i) {
        const auto& row = report.rows[i];
        bool same = row.stage == std::get<0>(want[i]) && row.delta == std::get<1>(want[i]) &&
                    row.remaining == std::get<2>(want[i]);
        bool conserved = static_cast<std::ptrdiff_t>(before) + row.delta == static_cast<std::ptrdiff_t>(row.remaining);
        stages_ok += same && conserved;
        c.expect(same, row.stage + " delta differs; ");
        c.expect(conserved, row.stage + " breaks conservation; ");
        before = row.remaining;
    }
    c.why << stages_ok << "/" << want.size() << " stages exact and conserved";
    return c;
}

Check wmd()
{
    Check c;
    auto start = Clock::now();
    auto table = cluster::load_embeddings(fixture("pipeline/embeddings.txt"));
    std::vector<std::string> words;
    {
        std::istringstream in(io::read_file(fixture("pipeline/embeddings.txt")));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line))
            words.push_back(line.substr(0, line.find(' ')));
    }
    Gen gen(2024);
    std::size_t compared = 0;
    double worst = 0.0;
    for (int round = 0; round < 100; ++round) {
        std::vector<std::string> x;
        std::vector<std::string> y;
        for (int k = gen.range(1, 5); k > 0; --k)
            x.push_back(gen.pick(words));
        for (int k = gen.range(1, 5); k > 0; --k)
            y.push_back(gen.pick(words));
        double xy = cluster::wmd_distance(x, y, table).distance;
        c.expect(xy == cluster::wmd_distance(y, x, table).distance, "asymmetric; ");
        c.expect(cluster::wmd_distance(x, x, table).distance == 0.0, "identity; ");

        std::map<std::string, double> wx;
        std::map<std::string, double> wy;
        for (const auto& w : x)
            wx[w] += 1.0 / static_cast<double>(x.size());
        for (const auto& w : y)
            wy[w] += 1.0 / static_cast<double>(y.size());
        if (wx.size() > 3 || wy.size() > 3)
            continue;
        std::vector<double> supply;
        std::vector<double> demand;
        oracle::Matrix cost;
        for (const auto& [wi, pi] : wx) {
            supply.push_back(pi);
            cost.emplace_back();
            for (const auto& [wj, pj] : wy) {
                auto u = *table.lookup(wi);
                auto v = *table.lookup(wj);
                double sq = 0.0;
                for (std::size_t k = 0; k < u.size(); ++k)
                    sq += (u[k] - v[k]) * (u[k] - v[k]);
                cost.back().push_back(std::sqrt(sq));
            }
        }
        for (const auto& [wj, pj] : wy)
            demand.push_back(pj);
        ++compared;
        worst = std::max(worst, std::fabs(xy - oracle::transport_by_bases(supply, demand, cost)));
    }
    double t = seconds_since(start);
    c.expect(worst <= kWmdTolerance, "oracle disagreement; ");
    c.expect(compared > 0, "no instance small enough for the oracle; ");
    c.expect(t < kWmdBudget, "over time budget; ");
    c.why << compared << " oracle instances, max error " << worst << ", " << t << "s";
    return c;
}

Check agglomerative()
{
    Check c;
    Gen gen(88);
    std::size_t runs = 0;
    std::size_t agree = 0;
    for (int round = 0; round < 50; ++round) {
        auto rows = random_points_matrix(gen, 8);
        auto d = from_rows(rows);
        for (std::size_t k = 1; k <= 8; ++k) {
            ++runs;
            agree += cluster::agglomerative_cluster(d, k).labels == oracle::naive_average_linkage(rows, k);
        }
    }
    c.expect(agree == runs, "assignment mismatch; ");
    c.why << agree << "/" << runs << " (matrix, k) runs identical";
    return c;
}

Check silhouette()
{
    Check c;
    Gen gen(1010);
    double worst = 0.0;
    for (int round = 0; round < 50; ++round) {
        auto rows = random_points_matrix(gen, 10);
        std::vector<int> labels(10);
        for (auto& l : labels)
            l = gen.range(0, 3);
        labels[0] = 0;
        labels[1] = 1;
        worst = std::max(worst, std::fabs(cluster::silhouette_score(from_rows(rows), labels) - oracle::silhouette(rows, labels)));
    }
    oracle::Matrix perfect = { { 0, 0, 1, 1 }, { 0, 0, 1, 1 }, { 1, 1, 0, 0 }, { 1, 1, 0, 0 } };
    double p = cluster::silhouette_score(from_rows(perfect), { 0, 0, 1, 1 });
    c.expect(worst <= kSilhouetteTolerance, "formula disagreement; ");
    c.expect(p == 1.0, "perfect separation is not 1.0; ");
    c.why << "max error " << worst << ", perfect separation " << p;
    return c;
}

Check affinity_propagation()
{
    Check c;
    cluster::SimilarityMatrix s;
    s.n = 10;
    s.values.assign(100, 0.1);
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) {
            if (i / 5 == j / 5)
                s.values[i * 10 + j] = i == j ? 0.0 : 0.9;
        }
    }
    cluster::APParams params;
    params.damping = kApDamping;
    params.max_iterations = kApIterations;
    auto first = cluster::affinity_propagation(s, params);
    std::vector<int> groups = { 0, 0, 0, 0, 0, 1, 1, 1, 1, 1 };
    c.expect(first.converged, "did not converge; ");
    c.expect(first.iterations <= kApIterations, "too many iterations; ");
    c.expect(first.cluster_count() == 2, "cluster count; ");
    c.expect(cluster::canonical_labels(first.labels) == groups, "groups not recovered; ");
    std::size_t stable = 0;
    for (int run = 0; run < 10; ++run) {
        auto again = cluster::affinity_propagation(s, params);
        stable += again.labels == first.labels && again.exemplars == first.exemplars && again.iterations == first.iterations;
    }
    c.expect(stable == 10, "nondeterministic; ");
    c.why << first.cluster_count() << " clusters in " << first.iterations << " iterations, " << stable << "/10 repeats identical";
    return c;
}

Check levenshtein()
{
    Check c;
    Gen gen(777);
    const std::vector<std::string> alphabet = { "if", "NIL", "||", "LEN", "return", "ERR", "foo()", "VAR", "==>" };
    auto random_sig = [&] {
        codesig::Signature s;
        for (int k = gen.range(0, 7); k > 0; --k)
            s.push_back(gen.pick(alphabet));
        return s;
    };
    std::size_t violations = 0;
    for (int round = 0; round < 1000; ++round) {
        auto a = random_sig();
        auto b = random_sig();
        double ab = codesig::normalized_levenshtein(a, b);
        std::size_t longest = std::max(a.size(), b.size());
        double want = longest ? static_cast<double>(oracle::edit_distance(a, b)) / static_cast<double>(longest) : 0.0;
        bool ok = ab >= 0.0 && ab <= 1.0 && ab == codesig::normalized_levenshtein(b, a) && (ab == 0.0) == (a == b) &&
                  codesig::normalized_levenshtein(a, a) == 0.0 && ab == want;
        violations += !ok;
    }
    // Spot values.
    c.expect(codesig::normalized_levenshtein({ "cn_fast_hash()" }, { "cn_fast_hash()", "free()" }) == 0.5, "spot 0.5; ");
    c.expect(codesig::normalized_levenshtein({}, {}) == 0.0, "spot empty; ");
    c.expect(codesig::normalized_levenshtein({}, { "if", "NIL" }) == 1.0, "spot one empty; ");
    c.expect(codesig::normalized_levenshtein({ "if", "NIL", "return" }, { "if", "LEN", "return", "ERR" }) == 0.5, "spot 2/4; ");
    c.expect(violations == 0, "property violations; ");
    c.why << violations << " violations over 1000 pairs";
    return c;
}

Check scanner()
{
    Check c;
    auto patterns = scan::load_patterns(testsupport::data_file("patterns.json"));
    std::size_t correct = 0;
    double worst = 0.0;
    for (const char* which : { "vulnerable", "patched" }) {
        auto start = Clock::now();
        auto report = scan::scan_repo(fixture("scan") / which, patterns);
        worst = std::max(worst, seconds_since(start));
        auto want = std::string(which) == "vulnerable" ? scan::Verdict::Vulnerable : scan::Verdict::Patched;
        for (const auto& p : patterns) {
            std::size_t hits = 0;
            bool right = false;
            for (const auto& f : report.findings) {
                if (f.pattern_id == p.id) {
                    ++hits;
                    right = f.verdict == want;
                }
            }
            correct += hits == 1 && right;
        }
    }
    c.expect(patterns.size() == 21, "expected 21 patterns; ");
    c.expect(correct == 42, "verdict mismatch; ");
    c.expect(worst < kScanBudget, "over time budget; ");
    c.why << correct << "/42 verdicts, slowest tree scan " << worst << "s";
    return c;
}

std::map<std::string, std::string> hashes(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        out[e.path().filename().string()] = io::sha256_hex(io::read_file(e.path()));
    return out;
}

Check determinism()
{
    Check c;
    const std::vector<std::vector<std::string>> commands = {
        { "ingest" },    { "filter" },          { "modules" },          { "types" },
        { "signatures" }, { "cluster", "--text" }, { "cluster", "--code" }, { "scan", fixture("scan/vulnerable").string() },
    };
    const auto config = fixture("pipeline/pipeline.json").string();
    testsupport::ScratchDir a("accept-a");
    testsupport::ScratchDir b("accept-b");
    std::size_t failures = 0;
    for (const auto* dir : { &a, &b }) {
        for (const auto& command : commands) {
            std::vector<std::string> args = { "--config", config, "--out", dir->path().string() };
            args.insert(args.end(), command.begin(), command.end());
            std::ostringstream out;
            std::ostringstream err;
            int code = cli::run(args, out, err);
            bool expected = command.front() == "scan" ? code == cli::kExitVulnerable : code == cli::kExitOk;
            failures += !expected;
            c.expect(expected, command.front() + " exited " + std::to_string(code) + ": " + err.str() + "; ");
        }
    }
    auto ha = hashes(a.path());
    auto hb = hashes(b.path());
    std::size_t same = 0;
    for (const auto& [name, h] : ha)
        same += hb.count(name) && hb.at(name) == h;
    c.expect(failures == 0, "");
    c.expect(ha.size() == hb.size() && same == ha.size(), "artifact hashes differ; ");
    c.expect(ha.size() == 15, "expected 15 artifacts; ");
    c.why << same << "/" << ha.size() << " artifacts byte-identical across runs";
    return c;
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
        { "title cleaning and type keywords", title_keywords },
        { "example hunks to fragments and signatures", hunk_signatures },
        { "changed-line pairing rule", pairing_rule },
        { "filter ledger deltas and conservation", filter_ledger },
        { "word mover's distance", wmd },
        { "agglomerative average linkage", agglomerative },
        { "silhouette coefficient", silhouette },
        { "affinity propagation", affinity_propagation },
        { "normalized Levenshtein", levenshtein },
        { "scanner round-trip", scanner },
        { "CLI determinism", determinism },
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            c = criteria[i].second();
        } catch (const std::exception& e) {
            c.ok = false;
            c.why << "exception: " << e.what();
        }
        failed += !c.ok;
        std::cout << (c.ok ? "[PASS] " : "[FAIL] ") << i + 1 << ". " << criteria[i].first << ": " << c.why.str() << "\n";
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
