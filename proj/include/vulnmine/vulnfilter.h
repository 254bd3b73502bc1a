#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <vulnmine/corpus.h>
#include <vulnmine/textcluster.h>

namespace vulnmine::filter {

using corpus::Corpus;
using corpus::IssueKey;
using corpus::LinkTable;

using IdSet = std::set<IssueKey>;

// A keyword group is one reviewed cluster; its first word is the representative.
using KeywordGroup = std::vector<std::string>;

struct FilterConfig {
    std::map<std::string, std::vector<std::string>> source_suffixes;
    std::vector<std::string> test_path_markers;
    std::vector<std::string> include_labels;
    std::vector<std::string> title_prefix_markers;
    std::vector<std::string> exclude_labels;
    std::vector<KeywordGroup> include_keywords;
    std::vector<KeywordGroup> exclude_keywords;
    std::size_t min_word_frequency = 2;
    double similarity_threshold = 0.6;

    // Throws ConfigError when a label or keyword sits on both sides, or on
    // empty groups and out-of-range numbers.
    void validate() const;
};

// Every label, prefix and keyword named for the four studied projects.
FilterConfig default_filter_config();
FilterConfig filter_config_from_json(const nlohmann::json& j);
nlohmann::json filter_config_to_json(const FilterConfig& config);

enum class Polarity { Vulnerability, NonVulnerability, Unreviewed };

std::string_view to_string(Polarity polarity);
Polarity polarity_from_string(std::string_view s);

struct KeywordCluster {
    std::string representative;
    std::vector<std::string> members;
    Polarity polarity = Polarity::Unreviewed;

    bool operator==(const KeywordCluster&) const = default;
};

// Members non-empty, each word in exactly one cluster (compared lowercased).
void validate_clusters(const std::vector<KeywordCluster>& clusters);

// The config's include groups become vulnerability clusters and its exclude
// groups non-vulnerability clusters.
std::vector<KeywordCluster> clusters_from_config(const FilterConfig& config);

// Counts words over all titles and bodies, drops those below
// min_word_frequency and joins the rest into connected components of the
// cosine >= similarity_threshold graph. Out-of-vocabulary words stay
// singletons. Clusters come out by descending total frequency, members by
// descending frequency then alphabetically; the representative is the most
// frequent member.
std::vector<KeywordCluster> build_keyword_clusters(const Corpus& corpus, const cluster::EmbeddingTable& embeddings,
                                                   const FilterConfig& config);

nlohmann::json clusters_to_json(const std::vector<KeywordCluster>& clusters);
std::vector<KeywordCluster> clusters_from_json(const nlohmann::json& j);

IdSet all_issues(const Corpus& corpus);

// Each stage inspects only the issues in `pool` and returns the ones it
// removes from it (S3a and S4a return the ones they include).
IdSet stage_commit_filter(const Corpus& corpus, const LinkTable& links, const IdSet& pool);
IdSet stage_source_file_filter(const Corpus& corpus, const LinkTable& links, const FilterConfig& config,
                               const IdSet& pool);
IdSet stage_test_only_filter(const Corpus& corpus, const LinkTable& links, const FilterConfig& config,
                             const IdSet& pool);
IdSet stage_label_include(const Corpus& corpus, const FilterConfig& config, const IdSet& pool);
IdSet stage_label_exclude(const Corpus& corpus, const FilterConfig& config, const IdSet& pool);
IdSet stage_keyword_include(const Corpus& corpus, const std::vector<KeywordCluster>& clusters, const IdSet& pool);
IdSet stage_keyword_exclude(const Corpus& corpus, const std::vector<KeywordCluster>& clusters, const IdSet& pool);

bool is_test_only_commit(const corpus::CommitRecord& commit, const std::vector<std::string>& markers);

// True when the tokenized text holds the tokenized phrase as a contiguous run.
bool contains_phrase(const std::vector<std::string>& text_tokens, std::string_view phrase);

enum class StageAction { Exclude, Include };

struct StageRow {
    std::string stage;
    StageAction action = StageAction::Exclude;
    // Issues removed from the pool by this stage.
    std::size_t count = 0;
    // Change of the remaining pool; always -count.
    std::ptrdiff_t delta = 0;
    std::size_t remaining = 0;
    std::vector<IssueKey> members;
};

struct FilterReport {
    std::size_t corpus_size = 0;
    std::vector<StageRow> rows;
    IdSet included;
    IdSet discarded;
    IdSet undecided;
};

// Stages S0, S1, S2, S3a, S3b, S4a, S4b in order, each on the pool left by
// the previous one. Included = S3a + S4a, discarded = every exclusion,
// undecided = the final pool.
FilterReport run_pipeline(const Corpus& corpus, const LinkTable& links, const FilterConfig& config,
                          const std::vector<KeywordCluster>& clusters);

nlohmann::json report_to_json(const FilterReport& report);
std::string report_to_csv(const FilterReport& report);

} // namespace vulnmine::filter
