#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <vulnmine/corpus.h>
#include <vulnmine/textcluster.h>

namespace vulnmine::codesig {

struct LanguageConfig {
    std::string name;
    std::vector<std::string> suffixes;
    std::vector<std::string> line_comments;
    std::string block_open;
    std::string block_close;
    // Statements starting with one of these are dropped ("#include", "import").
    std::vector<std::string> import_prefixes;
    // Go-style multi-line "import (" ... ")" blocks.
    bool import_blocks = false;
    // Backquoted raw strings (Go).
    bool raw_strings = false;
};

struct CodesigConfig {
    std::vector<LanguageConfig> languages;
    std::vector<std::string> test_path_markers;
    std::map<std::string, std::string> size_functions;
    std::vector<std::string> error_functions;
    double pair_threshold = 0.5;
    bool drop_numeric = true;

    const LanguageConfig* language_for(std::string_view path) const;
};

CodesigConfig default_codesig_config();
CodesigConfig codesig_config_from_json(const nlohmann::json& j);
nlohmann::json codesig_config_to_json(const CodesigConfig& c);

struct CleanLine {
    corpus::LineKind kind = corpus::LineKind::Context;
    std::string text;
    // 1-based position of the line in the original hunk body.
    std::size_t origin = 0;
    bool operator==(const CleanLine&) const = default;
};

struct CleanHunk {
    std::string file_path;
    std::string header;
    std::vector<CleanLine> lines;
};

// Empty optional when the whole hunk is dropped (non-source or test file).
std::optional<CleanHunk> clean_hunk(const corpus::Hunk& hunk, const CodesigConfig& config);

struct FragmentLine {
    std::string text;
    std::size_t origin = 0;
    bool operator==(const FragmentLine&) const = default;
};

struct CodeFragment {
    std::string id;
    std::string commit_id;
    std::string file_path;
    std::vector<FragmentLine> deleted;
    std::vector<FragmentLine> added;
};

// One fragment per maximal run of changed lines between context lines.
std::vector<CodeFragment> split_fragments(const CleanHunk& hunk, std::string_view commit_id,
                                          std::string_view id_prefix);

// Character-level similarity of trimmed lines: 1 - lev / max length.
double line_similarity(std::string_view a, std::string_view b);

struct LinePair {
    std::optional<std::size_t> deleted;
    std::optional<std::size_t> added;
    double similarity = 0.0;
    bool operator==(const LinePair&) const = default;
};

// Greedy pairing in deleted-line order. Returns the matched pairs in deleted
// order, then unpaired deleted lines, then unpaired added lines.
std::vector<LinePair> pair_changed_lines(const CodeFragment& fragment, double threshold = 0.5);

using Signature = std::vector<std::string>;

Signature line_signature(std::string_view line, const CodesigConfig& config);

inline constexpr std::string_view kPairSeparator = "==>";

struct FragmentSignature {
    Signature tokens;
    // Set when every line produced an empty line signature.
    bool empty = false;
};

FragmentSignature fragment_signature(const CodeFragment& fragment, const std::vector<LinePair>& pairs,
                                     const CodesigConfig& config);

std::string join_signature(const Signature& s);

// Token-level edit distance over max length; 0 when both are empty.
double normalized_levenshtein(const Signature& a, const Signature& b);

cluster::DistanceMatrix signature_distance_matrix(const std::vector<std::string>& ids,
                                                  const std::vector<Signature>& signatures, std::size_t jobs = 1);

struct FragmentRecord {
    CodeFragment fragment;
    std::vector<LinePair> pairs;
    FragmentSignature signature;
};

// clean -> split -> pair -> sign for every hunk of a commit.
std::vector<FragmentRecord> analyze_commit(const corpus::CommitRecord& commit, const CodesigConfig& config);

nlohmann::json fragment_record_to_json(const FragmentRecord& r);

} // namespace vulnmine::codesig
