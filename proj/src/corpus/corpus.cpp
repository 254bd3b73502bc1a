#include <vulnmine/corpus.h>
#include <vulnmine/error.h>
#include <vulnmine/io.h>
#include <vulnmine/text.h>

#include <algorithm>
#include <unordered_set>

namespace vulnmine::corpus {

using nlohmann::json;

namespace {

std::vector<std::string> unique_in_order(std::vector<std::string> ids)
{
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& id : ids) {
        if (seen.insert(id).second)
            out.push_back(std::move(id));
    }
    return out;
}

class RecordReader {
public:
    RecordReader(const json& record, std::string where)
        : m_record(record)
        , m_where(std::move(where))
    {
        if (!m_record.is_object())
            throw LoadError(m_where + ": expected an object");
    }

    const json& require(const char* field) const
    {
        auto it = m_record.find(field);
        if (it == m_record.end())
            throw LoadError(m_where + ": missing field \"" + field + "\"");
        return *it;
    }

    std::string string(const char* field) const
    {
        const auto& v = require(field);
        if (!v.is_string())
            throw LoadError(m_where + ": field \"" + field + "\" must be a string");
        return v.get<std::string>();
    }

    std::int64_t integer(const char* field) const
    {
        const auto& v = require(field);
        if (!v.is_number_integer())
            throw LoadError(m_where + ": field \"" + field + "\" must be an integer");
        return v.get<std::int64_t>();
    }

    bool boolean(const char* field) const
    {
        const auto& v = require(field);
        if (!v.is_boolean())
            throw LoadError(m_where + ": field \"" + field + "\" must be a boolean");
        return v.get<bool>();
    }

    std::vector<std::string> strings(const char* field) const
    {
        const auto& v = require(field);
        if (!v.is_array())
            throw LoadError(m_where + ": field \"" + field + "\" must be an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string())
                throw LoadError(m_where + ": field \"" + field + "\" must be an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    const std::string& where() const { return m_where; }

private:
    const json& m_record;
    std::string m_where;
};

const json& records_array(const json& doc, const char* key, const char* what)
{
    if (!doc.is_object())
        throw LoadError(std::string(what) + " file: expected a JSON object with \"schema_version\"");
    auto version = doc.find("schema_version");
    if (version == doc.end() || !version->is_number_integer() || version->get<int>() != kSchemaVersion)
        throw LoadError(std::string(what) + " file: unsupported or missing schema_version (expected 1)");
    auto it = doc.find(key);
    if (it == doc.end() || !it->is_array())
        throw LoadError(std::string(what) + " file: missing array \"" + key + "\"");
    return *it;
}

char marker_of(LineKind kind)
{
    switch (kind) {
    case LineKind::Added:
        return '+';
    case LineKind::Deleted:
        return '-';
    case LineKind::Context:
        break;
    }
    return ' ';
}

} // namespace

Corpus::Corpus(std::vector<IssueRecord> issues, std::vector<CommitRecord> commits)
    : m_issues(std::move(issues))
    , m_commits(std::move(commits))
{
    for (std::size_t i = 0; i < m_issues.size(); ++i) {
        auto& issue = m_issues[i];
        issue.event_commit_ids = unique_in_order(std::move(issue.event_commit_ids));
        issue.pr_commit_ids = unique_in_order(std::move(issue.pr_commit_ids));
        IssueKey key { issue.project, issue.id };
        if (!m_issue_index.emplace(key, i).second)
            throw LoadError("duplicate issue id " + key.str() + " (issue record " + std::to_string(i) + ")");
    }
    for (std::size_t i = 0; i < m_commits.size(); ++i) {
        const auto& commit = m_commits[i];
        CommitKey key { commit.project, commit.id };
        if (!m_commit_index.emplace(key, i).second)
            throw LoadError("duplicate commit id " + commit.id + " in project " + commit.project
                            + " (commit record " + std::to_string(i) + ")");
        if (!commit.hunks.empty() && commit.files.empty())
            throw LoadError("commit record " + std::to_string(i) + " (" + commit.id
                            + "): field \"files\" must be non-empty when hunks are present");
    }
}

const IssueRecord* Corpus::find_issue(const IssueKey& key) const
{
    auto it = m_issue_index.find(key);
    return it == m_issue_index.end() ? nullptr : &m_issues[it->second];
}

const CommitRecord* Corpus::find_commit(const CommitKey& key) const
{
    auto it = m_commit_index.find(key);
    return it == m_commit_index.end() ? nullptr : &m_commits[it->second];
}

CorpusCounts Corpus::counts() const
{
    CorpusCounts c;
    c.issues = m_issues.size();
    c.commits = m_commits.size();
    c.hunk_bearing_commits = static_cast<std::size_t>(
        std::count_if(m_commits.begin(), m_commits.end(), [](const auto& commit) { return !commit.hunks.empty(); }));
    return c;
}

Hunk hunk_from_json(const json& j, std::string_view where)
{
    RecordReader r(j, std::string(where));
    Hunk hunk;
    hunk.file_path = r.string("file_path");
    hunk.header = r.string("header");
    const auto& lines = r.require("lines");
    if (!lines.is_array())
        throw LoadError(r.where() + ": field \"lines\" must be an array");
    for (std::size_t i = 0; i < lines.size(); ++i) {
        RecordReader lr(lines[i], r.where() + ".lines[" + std::to_string(i) + "]");
        auto marker = lr.string("marker");
        DiffLine line;
        if (marker == "+")
            line.kind = LineKind::Added;
        else if (marker == "-")
            line.kind = LineKind::Deleted;
        else if (marker == " ")
            line.kind = LineKind::Context;
        else
            throw LoadError(lr.where() + ": field \"marker\" must be one of \"+\", \"-\", \" \"");
        line.text = lr.string("text");
        hunk.lines.push_back(std::move(line));
    }
    return hunk;
}

json hunk_to_json(const Hunk& hunk)
{
    json lines = json::array();
    for (const auto& line : hunk.lines)
        lines.push_back({ { "marker", std::string(1, marker_of(line.kind)) }, { "text", line.text } });
    return { { "file_path", hunk.file_path }, { "header", hunk.header }, { "lines", std::move(lines) } };
}

Corpus corpus_from_json(const json& issues_doc, const json& commits_doc)
{
    const auto& issue_records = records_array(issues_doc, "issues", "issues");
    const auto& commit_records = records_array(commits_doc, "commits", "commits");

    std::vector<IssueRecord> issues;
    issues.reserve(issue_records.size());
    for (std::size_t i = 0; i < issue_records.size(); ++i) {
        RecordReader r(issue_records[i], "issue record " + std::to_string(i));
        IssueRecord issue;
        issue.id = r.integer("id");
        issue.title = r.string("title");
        issue.body = r.string("body");
        issue.labels = r.strings("labels");
        issue.event_commit_ids = r.strings("event_commit_ids");
        issue.pr_commit_ids = r.strings("pr_commit_ids");
        issue.is_pr = r.boolean("is_pr");
        issue.project = r.string("project");
        issues.push_back(std::move(issue));
    }

    std::vector<CommitRecord> commits;
    commits.reserve(commit_records.size());
    for (std::size_t i = 0; i < commit_records.size(); ++i) {
        RecordReader r(commit_records[i], "commit record " + std::to_string(i));
        CommitRecord commit;
        commit.id = r.string("id");
        commit.title = r.string("title");
        commit.message = r.string("message");
        commit.files = r.strings("files");
        commit.project = r.string("project");
        const auto& hunks = r.require("hunks");
        if (!hunks.is_array())
            throw LoadError(r.where() + ": field \"hunks\" must be an array");
        for (std::size_t h = 0; h < hunks.size(); ++h)
            commit.hunks.push_back(hunk_from_json(hunks[h], r.where() + ".hunks[" + std::to_string(h) + "]"));
        commits.push_back(std::move(commit));
    }
    return Corpus(std::move(issues), std::move(commits));
}

json issues_to_json(const Corpus& corpus)
{
    json records = json::array();
    for (const auto& issue : corpus.issues()) {
        records.push_back({
            { "id", issue.id },
            { "title", issue.title },
            { "body", issue.body },
            { "labels", issue.labels },
            { "event_commit_ids", issue.event_commit_ids },
            { "pr_commit_ids", issue.pr_commit_ids },
            { "is_pr", issue.is_pr },
            { "project", issue.project },
        });
    }
    return { { "schema_version", kSchemaVersion }, { "issues", std::move(records) } };
}

json commits_to_json(const Corpus& corpus)
{
    json records = json::array();
    for (const auto& commit : corpus.commits()) {
        json hunks = json::array();
        for (const auto& hunk : commit.hunks)
            hunks.push_back(hunk_to_json(hunk));
        records.push_back({
            { "id", commit.id },
            { "title", commit.title },
            { "message", commit.message },
            { "files", commit.files },
            { "hunks", std::move(hunks) },
            { "project", commit.project },
        });
    }
    return { { "schema_version", kSchemaVersion }, { "commits", std::move(records) } };
}

Corpus load_corpus(const std::filesystem::path& issues_path, const std::filesystem::path& commits_path)
{
    auto issues = io::read_json(issues_path);
    auto commits = io::read_json(commits_path);
    try {
        return corpus_from_json(issues, commits);
    } catch (const LoadError& e) {
        throw LoadError(issues_path.filename().string() + "/" + commits_path.filename().string() + ": " + e.what());
    }
}

std::vector<std::int64_t> extract_issue_refs(std::string_view message)
{
    std::vector<std::int64_t> refs;
    for (std::size_t i = 0; i < message.size(); ++i) {
        if (message[i] != '#')
            continue;
        if (i > 0 && text::is_ident_char(message[i - 1]))
            continue;
        std::size_t j = i + 1;
        while (j < message.size() && std::isdigit(static_cast<unsigned char>(message[j])))
            ++j;
        const std::size_t digits = j - i - 1;
        if (digits == 0 || digits > 7)
            continue;
        if (j < message.size() && text::is_ident_char(message[j]))
            continue;
        auto number = std::stoll(std::string(message.substr(i + 1, digits)));
        if (std::find(refs.begin(), refs.end(), number) == refs.end())
            refs.push_back(number);
        i = j - 1;
    }
    return refs;
}

std::string_view to_string(LinkSource source)
{
    switch (source) {
    case LinkSource::Event:
        return "event";
    case LinkSource::PrList:
        return "pr_list";
    case LinkSource::MessageRef:
        return "message_ref";
    }
    return "unknown";
}

bool LinkTable::is_linked(const IssueKey& issue) const
{
    auto it = links.find(issue);
    return it != links.end() && !it->second.empty();
}

std::vector<std::string> LinkTable::commits_of(const IssueKey& issue) const
{
    std::vector<std::string> out;
    auto it = links.find(issue);
    if (it == links.end())
        return out;
    for (const auto& [commit, sources] : it->second)
        out.push_back(commit);
    return out;
}

LinkTable link_issues_to_commits(const Corpus& corpus)
{
    LinkTable table;

    auto add_listed = [&](const IssueRecord& issue, const std::vector<std::string>& ids, LinkSource source) {
        IssueKey key { issue.project, issue.id };
        for (const auto& id : ids) {
            if (!corpus.find_commit({ issue.project, id })) {
                table.warnings.push_back("issue " + key.str() + ": " + std::string(to_string(source))
                                         + " commit " + id + " not in corpus; link dropped");
                continue;
            }
            table.links[key][id].insert(source);
        }
    };

    for (const auto& issue : corpus.issues()) {
        add_listed(issue, issue.event_commit_ids, LinkSource::Event);
        add_listed(issue, issue.pr_commit_ids, LinkSource::PrList);
    }

    for (const auto& commit : corpus.commits()) {
        auto refs = extract_issue_refs(commit.title + "\n" + commit.message);
        for (auto number : refs) {
            IssueKey key { commit.project, number };
            if (corpus.find_issue(key))
                table.links[key][commit.id].insert(LinkSource::MessageRef);
        }
    }

    for (const auto& issue : corpus.issues()) {
        IssueKey key { issue.project, issue.id };
        if (!table.is_linked(key))
            table.unlinked.insert(key);
    }
    return table;
}

json link_table_to_json(const LinkTable& table)
{
    json links = json::array();
    for (const auto& [issue, commits] : table.links) {
        json entries = json::array();
        for (const auto& [commit, sources] : commits) {
            json srcs = json::array();
            for (auto s : sources)
                srcs.push_back(std::string(to_string(s)));
            entries.push_back({ { "commit", commit }, { "provenance", std::move(srcs) } });
        }
        links.push_back({ { "project", issue.project }, { "issue", issue.number }, { "commits", std::move(entries) } });
    }
    json unlinked = json::array();
    for (const auto& issue : table.unlinked)
        unlinked.push_back({ { "project", issue.project }, { "issue", issue.number } });
    return { { "links", std::move(links) }, { "unlinked", std::move(unlinked) }, { "warnings", table.warnings } };
}

LinkTable link_table_from_json(const json& j)
{
    auto parse_source = [](const std::string& s) {
        if (s == "event")
            return LinkSource::Event;
        if (s == "pr_list")
            return LinkSource::PrList;
        if (s == "message_ref")
            return LinkSource::MessageRef;
        throw LoadError("unknown link provenance \"" + s + "\"");
    };

    LinkTable table;
    try {
        for (const auto& entry : j.at("links")) {
            IssueKey key { entry.at("project").get<std::string>(), entry.at("issue").get<std::int64_t>() };
            auto& commits = table.links[key];
            for (const auto& c : entry.at("commits")) {
                auto& sources = commits[c.at("commit").get<std::string>()];
                for (const auto& s : c.at("provenance"))
                    sources.insert(parse_source(s.get<std::string>()));
            }
        }
        for (const auto& entry : j.at("unlinked"))
            table.unlinked.insert({ entry.at("project").get<std::string>(), entry.at("issue").get<std::int64_t>() });
        table.warnings = j.at("warnings").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw LoadError(std::string("link table: ") + e.what());
    }
    return table;
}

DedupeResult dedupe_commits(const Corpus& corpus)
{
    DedupeResult result;

    // Group by (project, serialized hunks); the smallest id of each group survives.
    std::map<std::pair<std::string, std::string>, std::vector<std::string>> groups;
    for (const auto& commit : corpus.commits()) {
        if (commit.hunks.empty()) {
            result.empty_commits.push_back({ commit.project, commit.id });
            continue;
        }
        json payload = json::array();
        for (const auto& hunk : commit.hunks)
            payload.push_back(hunk_to_json(hunk));
        groups[{ commit.project, payload.dump() }].push_back(commit.id);
    }

    std::set<CommitKey> dropped;
    for (auto& [key, ids] : groups) {
        std::sort(ids.begin(), ids.end());
        for (std::size_t i = 1; i < ids.size(); ++i) {
            result.removed.push_back({ key.first, ids.front(), ids[i] });
            dropped.insert({ key.first, ids[i] });
        }
    }
    std::sort(result.removed.begin(), result.removed.end(), [](const auto& a, const auto& b) {
        return std::tie(a.project, a.removed) < std::tie(b.project, b.removed);
    });

    std::vector<CommitRecord> kept;
    for (const auto& commit : corpus.commits()) {
        if (!dropped.contains({ commit.project, commit.id }))
            kept.push_back(commit);
    }
    result.corpus = Corpus(corpus.issues(), std::move(kept));
    return result;
}

} // namespace vulnmine::corpus
