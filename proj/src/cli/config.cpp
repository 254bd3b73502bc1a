#include <vulnmine/cli.h>

#include <set>

#include <vulnmine/error.h>
#include <vulnmine/io.h>

namespace vulnmine::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "corpus",       "embeddings", "patterns",   "output_dir", "filter",     "keyword_clusters", "module_rules",
    "architecture", "overrides",  "title_rules", "pos_seed",  "codesig",    "clustering",
};

fs::path resolve(const fs::path& base, const std::string& p)
{
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

fs::path existing(const fs::path& base, const json& v, const std::string& key)
{
    if (!v.is_string())
        throw ConfigError("config: \"" + key + "\" must be a path string");
    auto path = resolve(base, v.get<std::string>());
    std::error_code ec;
    if (!fs::exists(path, ec))
        throw ConfigError("config: \"" + key + "\" refers to missing file " + path.string());
    return path;
}

// Inline object or path to a JSON file.
json section(const fs::path& base, const json& v, const std::string& key)
{
    if (v.is_object() || v.is_array())
        return v;
    auto path = existing(base, v, key);
    try {
        return io::read_json(path);
    } catch (const LoadError& e) {
        throw ConfigError("config: \"" + key + "\": " + e.what());
    }
}

cluster::Algorithm algorithm_from_string(const std::string& s)
{
    if (s == "agglomerative")
        return cluster::Algorithm::Agglomerative;
    if (s == "affinity_propagation")
        return cluster::Algorithm::AffinityPropagation;
    throw ConfigError("config: unknown clustering algorithm \"" + s + "\"");
}

ClusterSettings cluster_settings_from_json(const json& j, const std::string& key)
{
    ClusterSettings s;
    try {
        if (j.contains("algorithms")) {
            s.algorithms.clear();
            for (const auto& a : j.at("algorithms"))
                s.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
            if (s.algorithms.empty())
                throw ConfigError("config: " + key + ".algorithms is empty");
        }
        s.cluster_grid = j.value("cluster_grid", std::vector<double>());
        s.damping_grid = j.value("damping_grid", std::vector<double>());
        s.normalize_similarity = j.value("normalize_similarity", true);
        if (j.contains("preference") && !j.at("preference").is_null())
            s.ap.preference = j.at("preference").get<double>();
        s.ap.max_iterations = j.value("max_iterations", s.ap.max_iterations);
        s.ap.convergence_window = j.value("convergence_window", s.ap.convergence_window);
    } catch (const json::exception& e) {
        throw ConfigError("config: " + key + ": " + e.what());
    }
    for (double k : s.cluster_grid) {
        if (!(k >= 1.0) || k != static_cast<double>(static_cast<std::size_t>(k)))
            throw ConfigError("config: " + key + ".cluster_grid holds a non-positive or fractional count");
    }
    for (double d : s.damping_grid) {
        auto ap = s.ap;
        ap.damping = d;
        try {
            ap.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError("config: " + key + ": " + e.what());
        }
    }
    return s;
}

json cluster_settings_to_json(const ClusterSettings& s)
{
    json algorithms = json::array();
    for (auto a : s.algorithms)
        algorithms.push_back(std::string(cluster::to_string(a)));
    json j = { { "algorithms", algorithms },
               { "cluster_grid", s.cluster_grid },
               { "damping_grid", s.damping_grid },
               { "normalize_similarity", s.normalize_similarity },
               { "max_iterations", s.ap.max_iterations },
               { "convergence_window", s.ap.convergence_window } };
    j["preference"] = s.ap.preference ? json(*s.ap.preference) : json(nullptr);
    return j;
}

std::string path_text(const std::optional<fs::path>& p, const fs::path& base)
{
    if (!p)
        return {};
    std::error_code ec;
    auto rel = fs::relative(*p, base, ec);
    return ec ? p->generic_string() : rel.generic_string();
}

} // namespace

PipelineConfig default_pipeline_config()
{
    PipelineConfig c;
    c.base_dir = fs::current_path();
    c.digest = io::sha256_hex(pipeline_config_to_json(c).dump());
    return c;
}

PipelineConfig pipeline_config_from_json(const json& j, const fs::path& base_dir)
{
    if (!j.is_object())
        throw ConfigError("config: expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kKnownKeys.count(key))
            throw ConfigError("config: unknown key \"" + key + "\"");
    }
    PipelineConfig c;
    c.base_dir = base_dir;
    if (j.contains("corpus")) {
        const auto& corpus = j.at("corpus");
        if (!corpus.is_object() || !corpus.contains("issues") || !corpus.contains("commits"))
            throw ConfigError("config: \"corpus\" needs \"issues\" and \"commits\" paths");
        c.issues = existing(base_dir, corpus.at("issues"), "corpus.issues");
        c.commits = existing(base_dir, corpus.at("commits"), "corpus.commits");
    }
    if (j.contains("embeddings"))
        c.embeddings = existing(base_dir, j.at("embeddings"), "embeddings");
    if (j.contains("patterns"))
        c.patterns = existing(base_dir, j.at("patterns"), "patterns");
    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string())
            throw ConfigError("config: \"output_dir\" must be a path string");
        c.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
    }
    if (j.contains("filter"))
        c.filter = filter::filter_config_from_json(section(base_dir, j.at("filter"), "filter"));
    if (j.contains("keyword_clusters")) {
        auto s = j.at("keyword_clusters");
        if (s == "config")
            c.keyword_source = KeywordSource::Config;
        else if (s == "embeddings")
            c.keyword_source = KeywordSource::Embeddings;
        else
            throw ConfigError("config: \"keyword_clusters\" must be \"config\" or \"embeddings\"");
    }
    if (c.keyword_source == KeywordSource::Embeddings && !c.embeddings)
        throw ConfigError("config: keyword_clusters = \"embeddings\" needs an \"embeddings\" path");
    if (j.contains("module_rules"))
        c.module_rules = modules::module_rules_from_json(section(base_dir, j.at("module_rules"), "module_rules"));
    if (j.contains("architecture"))
        c.architecture = modules::architecture_map_from_json(section(base_dir, j.at("architecture"), "architecture"));
    if (j.contains("overrides"))
        c.overrides = modules::overrides_from_json(section(base_dir, j.at("overrides"), "overrides"));
    if (j.contains("title_rules"))
        c.title_rules = titlekw::title_rules_from_json(section(base_dir, j.at("title_rules"), "title_rules"));
    if (j.contains("pos_seed"))
        c.pos_seed = titlekw::pos_seed_from_json(section(base_dir, j.at("pos_seed"), "pos_seed"));
    if (j.contains("codesig"))
        c.codesig = codesig::codesig_config_from_json(section(base_dir, j.at("codesig"), "codesig"));
    if (j.contains("clustering")) {
        const auto& cl = j.at("clustering");
        if (!cl.is_object())
            throw ConfigError("config: \"clustering\" must be an object");
        if (cl.contains("text"))
            c.text_clustering = cluster_settings_from_json(cl.at("text"), "clustering.text");
        if (cl.contains("code"))
            c.code_clustering = cluster_settings_from_json(cl.at("code"), "clustering.code");
    }
    c.digest = io::sha256_hex(pipeline_config_to_json(c).dump());
    return c;
}

PipelineConfig load_pipeline_config(const fs::path& path)
{
    json j;
    try {
        j = io::read_json(path);
    } catch (const LoadError& e) {
        throw ConfigError(e.what());
    }
    auto base = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    return pipeline_config_from_json(j, base);
}

json pipeline_config_to_json(const PipelineConfig& c)
{
    return {
        { "corpus", { { "issues", path_text(c.issues, c.base_dir) }, { "commits", path_text(c.commits, c.base_dir) } } },
        { "embeddings", path_text(c.embeddings, c.base_dir) },
        { "patterns", path_text(c.patterns, c.base_dir) },
        { "filter", filter::filter_config_to_json(c.filter) },
        { "keyword_clusters", c.keyword_source == KeywordSource::Config ? "config" : "embeddings" },
        { "module_rules", modules::module_rules_to_json(c.module_rules) },
        { "architecture", modules::architecture_map_to_json(c.architecture) },
        { "overrides", modules::overrides_to_json(c.overrides) },
        { "title_rules", titlekw::title_rules_to_json(c.title_rules) },
        { "pos_seed", { { "verbs", c.pos_seed.verbs }, { "prepositions", c.pos_seed.prepositions } } },
        { "codesig", codesig::codesig_config_to_json(c.codesig) },
        { "clustering",
          { { "text", cluster_settings_to_json(c.text_clustering) },
            { "code", cluster_settings_to_json(c.code_clustering) } } },
    };
}

} // namespace vulnmine::cli
