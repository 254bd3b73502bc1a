#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include <vulnmine/codesig.h>
#include <vulnmine/modulemap.h>
#include <vulnmine/textcluster.h>
#include <vulnmine/titlekw.h>
#include <vulnmine/vulnfilter.h>

namespace vulnmine::cli {

struct ClusterSettings {
    std::vector<cluster::Algorithm> algorithms { cluster::Algorithm::Agglomerative,
                                                 cluster::Algorithm::AffinityPropagation };
    // Empty means the library default grid for the item count.
    std::vector<double> cluster_grid;
    std::vector<double> damping_grid;
    cluster::APParams ap;
    bool normalize_similarity = true;
};

enum class KeywordSource { Config, Embeddings };

struct PipelineConfig {
    // Directory that relative paths in the config file resolve against.
    std::filesystem::path base_dir;
    std::optional<std::filesystem::path> issues;
    std::optional<std::filesystem::path> commits;
    std::optional<std::filesystem::path> embeddings;
    std::optional<std::filesystem::path> patterns;
    std::filesystem::path output_dir = "vulnmine-out";

    filter::FilterConfig filter = filter::default_filter_config();
    KeywordSource keyword_source = KeywordSource::Config;
    modules::ModuleRuleSet module_rules = modules::default_module_rules();
    modules::ArchitectureMap architecture = modules::default_architecture_map();
    modules::Overrides overrides;
    titlekw::TitleRules title_rules;
    titlekw::PosSeed pos_seed = titlekw::default_pos_seed();
    codesig::CodesigConfig codesig = codesig::default_codesig_config();
    ClusterSettings text_clustering;
    ClusterSettings code_clustering;

    // sha256 over the canonical effective settings; paths enter as written.
    std::string digest;
};

// Every referenced path must exist. Nested settings are either inline objects
// or a path to a JSON file.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
// Built-in defaults; no corpus, embeddings or patterns.
PipelineConfig default_pipeline_config();
nlohmann::json pipeline_config_to_json(const PipelineConfig& config);

inline constexpr int kExitOk = 0;
inline constexpr int kExitVulnerable = 1;
inline constexpr int kExitError = 2;

// Runs one subcommand; `args` excludes the program name. Summaries go to
// `out`, errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

} // namespace vulnmine::cli
