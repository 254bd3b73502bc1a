#include <vulnmine/patscan.h>

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include <vulnmine/edit_distance.h>
#include <vulnmine/error.h>
#include <vulnmine/io.h>
#include <vulnmine/text.h>

namespace vulnmine::scan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

codesig::Signature signature_field(const json& p, const char* key, const std::string& id)
{
    if (!p.contains(key))
        return {};
    const auto& v = p.at(key);
    // Either a token array or one whitespace-separated string.
    if (v.is_string())
        return text::split_whitespace(v.get<std::string>());
    if (!v.is_array())
        throw LoadError("pattern " + id + ": \"" + key + "\" must be a token array or string");
    codesig::Signature out;
    for (const auto& t : v) {
        if (!t.is_string())
            throw LoadError("pattern " + id + ": \"" + key + "\" must hold strings");
        out.push_back(t.get<std::string>());
    }
    return out;
}

struct TokenStream {
    std::vector<std::string> tokens;
    std::vector<std::size_t> lines;
};

TokenStream tokenize_body(const std::vector<std::string>& body, std::size_t first_line,
                          const codesig::CodesigConfig& config)
{
    TokenStream s;
    for (std::size_t k = 0; k < body.size(); ++k) {
        for (auto& t : codesig::line_signature(body[k], config)) {
            s.tokens.push_back(std::move(t));
            s.lines.push_back(first_line + k);
        }
    }
    return s;
}

SignatureMatch match_stream(const TokenStream& s, const codesig::Signature& sig)
{
    SignatureMatch best;
    if (sig.empty()) {
        best.score = 1.0;
        return best;
    }
    if (s.tokens.empty())
        return best;
    const std::size_t n = s.tokens.size();
    const std::size_t width = std::min(sig.size(), n);
    bool found = false;
    for (std::size_t start = 0; start + width <= n; ++start) {
        std::span<const std::string> window(s.tokens.data() + start, width);
        double score = 1.0 - normalized_edit_distance(window, sig);
        if (!found || score > best.score) {
            found = true;
            best.score = score;
            best.begin_line = s.lines[start];
            best.end_line = s.lines[start + width - 1];
        }
    }
    return best;
}

struct CompiledPattern {
    const PatternSpec* spec;
    std::vector<std::regex> functions;
};

CompiledPattern compile(const PatternSpec& p)
{
    CompiledPattern c { &p, {} };
    for (const auto& f : p.function_patterns) {
        try {
            c.functions.emplace_back(f);
        } catch (const std::regex_error& e) {
            throw LoadError("pattern " + p.id + ": invalid function pattern \"" + f + "\": " + e.what());
        }
    }
    return c;
}

bool is_candidate(const CompiledPattern& p, const std::string& file_path, const std::string& function)
{
    for (const auto& g : p.spec->file_globs) {
        if (io::glob_match(g, file_path))
            return true;
    }
    for (const auto& re : p.functions) {
        if (std::regex_search(function, re))
            return true;
    }
    return false;
}

std::optional<ScanFinding> evaluate(const CompiledPattern& cp, const std::string& file_path,
                                    const SourceFunction& function, const TokenStream& stream)
{
    const auto& p = *cp.spec;
    if (!is_candidate(cp, file_path, function.name))
        return std::nullopt;
    auto anchor = match_stream(stream, p.anchor_signature);
    if (anchor.score < p.match_threshold)
        return std::nullopt;
    auto vulnerable = match_stream(stream, p.vulnerable_signature);
    auto patched = match_stream(stream, p.patched_signature);

    ScanFinding f;
    f.pattern_id = p.id;
    f.file_path = file_path;
    f.function = function.name;
    f.anchor_score = anchor.score;
    f.vulnerable_score = vulnerable.score;
    f.patched_score = patched.score;
    const SignatureMatch* decisive = &anchor;
    if (patched.score >= p.match_threshold) {
        f.verdict = Verdict::Patched;
        decisive = &patched;
    } else if (vulnerable.score >= p.match_threshold) {
        f.verdict = Verdict::Vulnerable;
        decisive = &vulnerable;
    } else {
        f.verdict = Verdict::AnchorOnly;
    }
    f.score = decisive->score;
    f.begin_line = decisive->begin_line ? decisive->begin_line : function.begin_line;
    f.end_line = decisive->end_line ? decisive->end_line : function.end_line;
    return f;
}

// "P2" < "P10": split off the trailing number.
bool id_less(const std::string& a, const std::string& b)
{
    auto split = [](const std::string& s) {
        auto k = s.size();
        while (k > 0 && std::isdigit(static_cast<unsigned char>(s[k - 1])))
            --k;
        auto digits = s.substr(k);
        return std::make_tuple(s.substr(0, k), digits.size(), digits);
    };
    return split(a) < split(b);
}

std::optional<SourceLanguage> language_of(const std::string& path, const codesig::CodesigConfig& config)
{
    const auto* lang = config.language_for(path);
    if (!lang)
        return std::nullopt;
    if (lang->name == "c-family")
        return SourceLanguage::CFamily;
    if (lang->name == "go")
        return SourceLanguage::Go;
    return std::nullopt;
}

std::string format_score(double v)
{
    std::ostringstream out;
    out << std::fixed << std::setprecision(3) << v;
    return out.str();
}

} // namespace

std::vector<PatternSpec> patterns_from_json(const json& j)
{
    if (j.is_null())
        return {};
    const json* arr = &j;
    if (j.is_object()) {
        if (!j.contains("patterns"))
            throw LoadError("patterns: missing \"patterns\" array");
        arr = &j.at("patterns");
    }
    if (!arr->is_array())
        throw LoadError("patterns: expected an array of patterns");

    std::vector<PatternSpec> out;
    std::set<std::string> ids;
    for (const auto& p : *arr) {
        if (!p.is_object() || !p.contains("id") || !p.at("id").is_string())
            throw LoadError("patterns: every pattern needs a string \"id\"");
        PatternSpec s;
        s.id = p.at("id").get<std::string>();
        if (!ids.insert(s.id).second)
            throw LoadError("patterns: duplicate id " + s.id);
        try {
            s.description = p.value("description", std::string());
            s.catalogue_signature = p.value("catalogue_signature", std::string());
            s.provenance = p.value("provenance", std::string());
            s.file_globs = p.value("file_globs", std::vector<std::string>());
            s.function_patterns = p.value("function_patterns", std::vector<std::string>());
            s.match_threshold = p.value("match_threshold", 0.8);
        } catch (const json::exception& e) {
            throw LoadError("pattern " + s.id + ": " + e.what());
        }
        s.anchor_signature = signature_field(p, "anchor_signature", s.id);
        s.vulnerable_signature = signature_field(p, "vulnerable_signature", s.id);
        s.patched_signature = signature_field(p, "patched_signature", s.id);
        if (s.vulnerable_signature.empty())
            throw LoadError("pattern " + s.id + ": empty vulnerable_signature");
        if (s.patched_signature.empty())
            throw LoadError("pattern " + s.id + ": empty patched_signature");
        if (!(s.match_threshold > 0.0 && s.match_threshold <= 1.0))
            throw LoadError("pattern " + s.id + ": match_threshold must lie in (0, 1]");
        compile(s);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<PatternSpec> load_patterns(const fs::path& path)
{
    auto content = io::read_file(path);
    if (text::trim(content).empty())
        return {};
    json j;
    try {
        j = json::parse(content);
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    try {
        return patterns_from_json(j);
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

json patterns_to_json(const std::vector<PatternSpec>& patterns)
{
    json arr = json::array();
    for (const auto& p : patterns) {
        arr.push_back({ { "id", p.id },
                        { "description", p.description },
                        { "catalogue_signature", p.catalogue_signature },
                        { "provenance", p.provenance },
                        { "file_globs", p.file_globs },
                        { "function_patterns", p.function_patterns },
                        { "anchor_signature", p.anchor_signature },
                        { "vulnerable_signature", p.vulnerable_signature },
                        { "patched_signature", p.patched_signature },
                        { "match_threshold", p.match_threshold } });
    }
    return { { "schema_version", 1 }, { "patterns", arr } };
}

SignatureMatch match_signature(const std::vector<std::string>& body, std::size_t first_line,
                               const codesig::Signature& sig, const codesig::CodesigConfig& config)
{
    return match_stream(tokenize_body(body, first_line, config), sig);
}

std::string_view to_string(Verdict verdict)
{
    switch (verdict) {
    case Verdict::Vulnerable:
        return "VULNERABLE";
    case Verdict::Patched:
        return "PATCHED";
    case Verdict::AnchorOnly:
        return "ANCHOR_ONLY";
    }
    return "ANCHOR_ONLY";
}

bool ScanReport::any_vulnerable() const
{
    return std::any_of(findings.begin(), findings.end(),
                       [](const ScanFinding& f) { return f.verdict == Verdict::Vulnerable; });
}

std::optional<ScanFinding> evaluate_function(const PatternSpec& pattern, const std::string& file_path,
                                             const SourceFunction& function, const codesig::CodesigConfig& config)
{
    return evaluate(compile(pattern), file_path, function, tokenize_body(function.body, function.body_line, config));
}

ScanReport scan_repo(const fs::path& root, const std::vector<PatternSpec>& patterns, const ScanConfig& config)
{
    std::error_code ec;
    if (!fs::is_directory(root, ec))
        throw InvalidArgument("scan: " + root.string() + " is not a readable directory");

    std::vector<CompiledPattern> compiled;
    compiled.reserve(patterns.size());
    for (const auto& p : patterns)
        compiled.push_back(compile(p));

    ScanReport report;
    std::vector<std::pair<std::string, SourceLanguage>> files;
    fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
    if (ec)
        throw InvalidArgument("scan: cannot read " + root.string() + ": " + ec.message());
    for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) {
            report.warnings.push_back("cannot read directory entry: " + ec.message());
            ec.clear();
            continue;
        }
        const auto& entry = *it;
        auto name = entry.path().filename().string();
        if (entry.is_directory(ec)) {
            if (!name.empty() && name.front() == '.')
                it.disable_recursion_pending();
            continue;
        }
        if (!entry.is_regular_file(ec))
            continue;
        auto rel = fs::relative(entry.path(), root, ec).generic_string();
        if (ec) {
            report.warnings.push_back(entry.path().string() + ": " + ec.message());
            ec.clear();
            continue;
        }
        if (auto lang = language_of(rel, config.codesig))
            files.emplace_back(rel, *lang);
    }
    std::sort(files.begin(), files.end());

    std::mutex mu;
    std::atomic<std::size_t> next { 0 };
    auto worker = [&] {
        for (;;) {
            auto k = next.fetch_add(1);
            if (k >= files.size())
                return;
            const auto& [rel, lang] = files[k];
            std::vector<ScanFinding> local;
            std::string warning;
            try {
                auto source = io::read_file(root / rel);
                for (const auto& fn : extract_functions(source, lang)) {
                    auto stream = tokenize_body(fn.body, fn.body_line, config.codesig);
                    for (const auto& cp : compiled) {
                        if (auto f = evaluate(cp, rel, fn, stream))
                            local.push_back(std::move(*f));
                    }
                }
            } catch (const Error& e) {
                warning = rel + ": skipped: " + e.what();
            }
            std::lock_guard lock(mu);
            ++report.files_scanned;
            if (!warning.empty())
                report.warnings.push_back(std::move(warning));
            for (auto& f : local)
                report.findings.push_back(std::move(f));
        }
    };
    auto jobs = std::max<std::size_t>(1, std::min(config.jobs, files.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    std::sort(report.findings.begin(), report.findings.end(), [](const ScanFinding& a, const ScanFinding& b) {
        if (a.pattern_id != b.pattern_id)
            return id_less(a.pattern_id, b.pattern_id);
        if (a.file_path != b.file_path)
            return a.file_path < b.file_path;
        if (a.begin_line != b.begin_line)
            return a.begin_line < b.begin_line;
        return a.function < b.function;
    });
    std::sort(report.warnings.begin(), report.warnings.end());
    for (const auto& w : report.warnings)
        spdlog::warn("scan: {}", w);
    return report;
}

json findings_to_json(const ScanReport& report)
{
    json arr = json::array();
    for (const auto& f : report.findings) {
        arr.push_back({ { "pattern", f.pattern_id },
                        { "file", f.file_path },
                        { "function", f.function },
                        { "verdict", std::string(to_string(f.verdict)) },
                        { "lines", { f.begin_line, f.end_line } },
                        { "score", f.score },
                        { "anchor_score", f.anchor_score },
                        { "vulnerable_score", f.vulnerable_score },
                        { "patched_score", f.patched_score } });
    }
    return { { "files_scanned", report.files_scanned }, { "findings", arr }, { "warnings", report.warnings } };
}

std::string findings_to_table(const ScanReport& report)
{
    std::vector<std::array<std::string, 5>> rows;
    rows.push_back({ "PATTERN", "VERDICT", "SCORE", "LOCATION", "FUNCTION" });
    for (const auto& f : report.findings) {
        rows.push_back({ f.pattern_id, std::string(to_string(f.verdict)), format_score(f.score),
                         f.file_path + ":" + std::to_string(f.begin_line) + "-" + std::to_string(f.end_line),
                         f.function });
    }
    std::array<std::size_t, 5> width {};
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c)
            width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            out << r[c];
            if (c + 1 < r.size())
                out << std::string(width[c] - r[c].size() + 2, ' ');
        }
        out << "\n";
    }
    return out.str();
}

} // namespace vulnmine::scan
