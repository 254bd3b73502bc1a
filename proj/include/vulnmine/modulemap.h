#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include <vulnmine/corpus.h>

namespace vulnmine::modules {

struct ModulePathRule {
    std::string project;
    std::vector<std::string> generic_roots;

    void validate() const;
};

// Rules per project; projects without an entry use `fallback`.
struct ModuleRuleSet {
    std::map<std::string, ModulePathRule> projects;
    ModulePathRule fallback { "*", { "src" } };

    const ModulePathRule& rule_for(const std::string& project) const;
};

// "src" everywhere; Ethereum also treats core/, swarm/ and eth/ as generic.
ModuleRuleSet default_module_rules();
ModuleRuleSet module_rules_from_json(const nlohmann::json& j);
nlohmann::json module_rules_to_json(const ModuleRuleSet& rules);

// Lowercase "seg/" or "root/sub/". Empty when the file sits at the repository
// root or directly under a generic root. Throws InvalidArgument on an empty path.
std::optional<std::string> extract_module_path(std::string_view file_path, const ModulePathRule& rule);

// Lowercase, "/"-separated, without "./" or leading "/", with a trailing "/".
std::string normalize_module_key(std::string_view path);

enum class Layer { Policy, Peer, Network, UI, Other };

inline constexpr Layer kAllLayers[] = { Layer::Policy, Layer::Peer, Layer::Network, Layer::UI, Layer::Other };

std::string_view to_string(Layer layer);
Layer layer_from_string(std::string_view s);

struct ModuleAssignment {
    std::string module;
    Layer layer = Layer::Other;

    bool operator==(const ModuleAssignment&) const = default;
};

enum class UnmappedPolicy { Report, Drop };

struct ArchitectureMap {
    // Normalized module path -> module. A file maps through the longest key
    // that prefixes it.
    std::map<std::string, ModuleAssignment> entries;
    UnmappedPolicy unmapped = UnmappedPolicy::Report;

    // Throws ConfigError when one module name is given two layers or a key is
    // not normalized.
    void validate() const;
    // Module name -> layer for every module named by an entry.
    std::map<std::string, Layer> modules() const;
    const std::pair<const std::string, ModuleAssignment>* match(std::string_view file_path) const;
};

ArchitectureMap default_architecture_map();
ArchitectureMap architecture_map_from_json(const nlohmann::json& j);
nlohmann::json architecture_map_to_json(const ArchitectureMap& map);

// File path (as written in commits) -> module name, for files without a
// module path.
using Overrides = std::map<std::string, std::string>;

Overrides overrides_from_json(const nlohmann::json& j);
nlohmann::json overrides_to_json(const Overrides& overrides);

struct FlaggedFile {
    std::string project;
    std::string file_path;
    std::vector<corpus::IssueKey> issues;
};

struct ModuleCounts {
    std::size_t issues = 0;
    std::size_t issues_with_module = 0;
    // Issues per module, module path and layer. Every module and layer of the
    // map is present, possibly with zero.
    std::map<std::string, std::size_t> modules;
    std::map<std::string, std::size_t> module_paths;
    std::map<std::string, std::size_t> layers;
    // Unmapped module path -> issues; empty under UnmappedPolicy::Drop.
    std::map<std::string, std::size_t> unmapped;
    std::vector<FlaggedFile> flagged;

    std::size_t module_total() const;
};

// Each candidate issue adds one to every distinct module its linked commits
// touch. Resolution per file: override, then the longest map key prefixing
// the file, then the extracted module path as unmapped; files without a
// module path and without an override are flagged.
ModuleCounts aggregate_module_counts(const std::set<corpus::IssueKey>& candidates, const corpus::LinkTable& links,
                                     const corpus::Corpus& corpus, const ModuleRuleSet& rules,
                                     const ArchitectureMap& map, const Overrides& overrides = {});

nlohmann::json module_counts_to_json(const ModuleCounts& counts, const ArchitectureMap& map);
// "layer,module,count" rows, layers in architecture order.
std::string module_counts_to_csv(const ModuleCounts& counts, const ArchitectureMap& map);

} // namespace vulnmine::modules
