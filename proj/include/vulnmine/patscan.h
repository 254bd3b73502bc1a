#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <vulnmine/codesig.h>

namespace vulnmine::scan {

struct PatternSpec {
    std::string id;
    std::string description;
    // Generalized signature as printed in the pattern catalogue.
    std::string catalogue_signature;
    // Where the encoding comes from (issue/PR and patch excerpt).
    std::string provenance;
    std::vector<std::string> file_globs;
    std::vector<std::string> function_patterns;
    codesig::Signature anchor_signature;
    codesig::Signature vulnerable_signature;
    codesig::Signature patched_signature;
    double match_threshold = 0.8;
};

// Throws LoadError on duplicate ids, empty vulnerable/patched signatures,
// thresholds outside (0, 1] or invalid function regexes. A blank file or an
// empty "patterns" array gives an empty list.
std::vector<PatternSpec> patterns_from_json(const nlohmann::json& j);
std::vector<PatternSpec> load_patterns(const std::filesystem::path& path);
nlohmann::json patterns_to_json(const std::vector<PatternSpec>& patterns);

enum class SourceLanguage { CFamily, Go };

struct SourceFunction {
    // Qualified name: "CBlock::CheckBlock" or "TxPool.ValidateTransaction".
    std::string name;
    // 1-based, inclusive; the header line through the closing brace.
    std::size_t begin_line = 0;
    std::size_t end_line = 0;
    // Text between the braces, comments removed, starting on body_line.
    std::vector<std::string> body;
    std::size_t body_line = 0;
};

// Lexical extractor: comments and literals are masked, braces tracked, and a
// brace block counts as a function when its header looks like a definition.
// Namespace, class and extern blocks are entered; function bodies are not,
// so nested functions and lambdas stay inside their parent. Throws
// InvalidArgument on unbalanced braces.
std::vector<SourceFunction> extract_functions(std::string_view source, SourceLanguage language);

struct SignatureMatch {
    double score = 0.0;
    // 1-based source lines covered by the best window; 0 when nothing matched.
    std::size_t begin_line = 0;
    std::size_t end_line = 0;
};

// Line signatures of the body concatenated into one token stream; each window
// of |sig| consecutive tokens scores 1 - normalized Levenshtein, best wins
// (first on ties). A stream shorter than the signature is one window.
SignatureMatch match_signature(const std::vector<std::string>& body, std::size_t first_line,
                               const codesig::Signature& sig, const codesig::CodesigConfig& config);

enum class Verdict { Vulnerable, Patched, AnchorOnly };

std::string_view to_string(Verdict verdict);

struct ScanFinding {
    std::string pattern_id;
    std::string file_path;
    std::string function;
    Verdict verdict = Verdict::AnchorOnly;
    std::size_t begin_line = 0;
    std::size_t end_line = 0;
    // Score of the signature that decided the verdict.
    double score = 0.0;
    double anchor_score = 0.0;
    double vulnerable_score = 0.0;
    double patched_score = 0.0;
};

struct ScanConfig {
    codesig::CodesigConfig codesig = codesig::default_codesig_config();
    std::size_t jobs = 1;
};

struct ScanReport {
    std::vector<ScanFinding> findings;
    std::vector<std::string> warnings;
    std::size_t files_scanned = 0;

    bool any_vulnerable() const;
};

// Verdicts of one pattern against one function; empty when the function is
// not a candidate or its anchor does not match.
std::optional<ScanFinding> evaluate_function(const PatternSpec& pattern, const std::string& file_path,
                                             const SourceFunction& function, const codesig::CodesigConfig& config);

// Walks `root` (hidden directories skipped), extracts functions from every
// c-family and Go file and evaluates every pattern. Findings are sorted by
// pattern id (numeric-aware), path and line.
ScanReport scan_repo(const std::filesystem::path& root, const std::vector<PatternSpec>& patterns,
                     const ScanConfig& config = {});

nlohmann::json findings_to_json(const ScanReport& report);
std::string findings_to_table(const ScanReport& report);

} // namespace vulnmine::scan
