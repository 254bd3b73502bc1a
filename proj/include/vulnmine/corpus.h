#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vulnmine::corpus {

enum class LineKind { Context, Added, Deleted };

struct DiffLine {
    LineKind kind = LineKind::Context;
    std::string text;

    bool operator==(const DiffLine&) const = default;
};

struct Hunk {
    std::string file_path;
    std::string header;
    std::vector<DiffLine> lines;

    bool operator==(const Hunk&) const = default;
};

struct IssueRecord {
    std::int64_t id = 0;
    std::string title;
    std::string body;
    std::vector<std::string> labels;
    std::vector<std::string> event_commit_ids;
    std::vector<std::string> pr_commit_ids;
    bool is_pr = false;
    std::string project;

    bool operator==(const IssueRecord&) const = default;
};

struct CommitRecord {
    std::string id;
    std::string title;
    std::string message;
    std::vector<std::string> files;
    std::vector<Hunk> hunks;
    std::string project;

    bool operator==(const CommitRecord&) const = default;
};

// Issue numbers and commit ids are only unique within a project.
struct IssueKey {
    std::string project;
    std::int64_t number = 0;

    auto operator<=>(const IssueKey&) const = default;
    std::string str() const { return project + "#" + std::to_string(number); }
};

struct CommitKey {
    std::string project;
    std::string id;

    auto operator<=>(const CommitKey&) const = default;
    std::string str() const { return project + "@" + id; }
};

struct CorpusCounts {
    std::size_t issues = 0;
    std::size_t commits = 0;
    std::size_t hunk_bearing_commits = 0;
};

// Read-only after construction; every pipeline stage works on id sets.
class Corpus {
public:
    Corpus() = default;
    Corpus(std::vector<IssueRecord> issues, std::vector<CommitRecord> commits);

    const std::vector<IssueRecord>& issues() const { return m_issues; }
    const std::vector<CommitRecord>& commits() const { return m_commits; }

    const IssueRecord* find_issue(const IssueKey& key) const;
    const CommitRecord* find_commit(const CommitKey& key) const;

    CorpusCounts counts() const;

    bool operator==(const Corpus& other) const
    {
        return m_issues == other.m_issues && m_commits == other.m_commits;
    }

private:
    std::vector<IssueRecord> m_issues;
    std::vector<CommitRecord> m_commits;
    std::map<IssueKey, std::size_t> m_issue_index;
    std::map<CommitKey, std::size_t> m_commit_index;
};

inline constexpr int kSchemaVersion = 1;

Corpus corpus_from_json(const nlohmann::json& issues_doc, const nlohmann::json& commits_doc);
nlohmann::json issues_to_json(const Corpus& corpus);
nlohmann::json commits_to_json(const Corpus& corpus);
nlohmann::json hunk_to_json(const Hunk& hunk);
Hunk hunk_from_json(const nlohmann::json& j, std::string_view where);

Corpus load_corpus(const std::filesystem::path& issues_path, const std::filesystem::path& commits_path);

// Every "#N" (N = 1..7 digits, not embedded in an alphanumeric run) in
// first-occurrence order without duplicates.
std::vector<std::int64_t> extract_issue_refs(std::string_view message);

enum class LinkSource { Event, PrList, MessageRef };

std::string_view to_string(LinkSource source);

struct LinkTable {
    // issue -> commit id -> routes that produced the link
    std::map<IssueKey, std::map<std::string, std::set<LinkSource>>> links;
    std::set<IssueKey> unlinked;
    std::vector<std::string> warnings;

    bool is_linked(const IssueKey& issue) const;
    std::vector<std::string> commits_of(const IssueKey& issue) const;

    bool operator==(const LinkTable&) const = default;
};

LinkTable link_issues_to_commits(const Corpus& corpus);

nlohmann::json link_table_to_json(const LinkTable& table);
LinkTable link_table_from_json(const nlohmann::json& j);

struct RemovedCommit {
    std::string project;
    std::string kept;
    std::string removed;

    bool operator==(const RemovedCommit&) const = default;
};

struct DedupeResult {
    Corpus corpus;
    std::vector<RemovedCommit> removed;
    std::vector<CommitKey> empty_commits;
};

// Collapses commits of the same project whose ordered hunks are identical,
// keeping the lexicographically smallest id. Hunk-less commits are reported
// as empty and never collapsed.
DedupeResult dedupe_commits(const Corpus& corpus);

} // namespace vulnmine::corpus
