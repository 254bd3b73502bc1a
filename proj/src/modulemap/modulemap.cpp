#include <vulnmine/modulemap.h>

#include <sstream>

#include <spdlog/spdlog.h>

#include <vulnmine/error.h>
#include <vulnmine/text.h>

namespace vulnmine::modules {

using corpus::CommitKey;
using corpus::IssueKey;
using nlohmann::json;

namespace {

std::string strip_path(std::string_view path)
{
    std::string p(text::trim(path));
    while (p.rfind("./", 0) == 0)
        p.erase(0, 2);
    while (!p.empty() && p.front() == '/')
        p.erase(0, 1);
    return p;
}

std::vector<std::string> segments(std::string_view path)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= path.size()) {
        auto end = path.find('/', start);
        if (end == std::string_view::npos)
            end = path.size();
        if (end > start)
            out.emplace_back(path.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

// Files of a commit: the declared list plus any hunk path missing from it.
std::set<std::string> touched_files(const corpus::CommitRecord& commit)
{
    std::set<std::string> out(commit.files.begin(), commit.files.end());
    for (const auto& h : commit.hunks)
        out.insert(h.file_path);
    return out;
}

ModulePathRule rule_from_json(const json& j, std::string project)
{
    ModulePathRule r;
    r.project = std::move(project);
    try {
        r.generic_roots = j.get<std::vector<std::string>>();
    } catch (const json::exception&) {
        throw ConfigError("module rules: generic roots of \"" + r.project + "\" must be an array of strings");
    }
    r.validate();
    return r;
}

} // namespace

void ModulePathRule::validate() const
{
    if (generic_roots.empty())
        throw ConfigError("module rules: no generic roots for project \"" + project + "\"");
    for (const auto& root : generic_roots) {
        if (root.empty() || root.find('/') != std::string::npos)
            throw ConfigError("module rules: generic root \"" + root + "\" of \"" + project +
                              "\" must be a single folder name");
    }
}

const ModulePathRule& ModuleRuleSet::rule_for(const std::string& project) const
{
    auto it = projects.find(project);
    return it == projects.end() ? fallback : it->second;
}

ModuleRuleSet default_module_rules()
{
    ModuleRuleSet rules;
    for (const char* p : { "bitcoin", "monero", "stellar" })
        rules.projects[p] = { p, { "src" } };
    rules.projects["ethereum"] = { "ethereum", { "src", "core", "swarm", "eth" } };
    return rules;
}

ModuleRuleSet module_rules_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("module rules: expected a JSON object");
    ModuleRuleSet rules;
    if (j.contains("default"))
        rules.fallback = rule_from_json(j.at("default"), "*");
    if (j.contains("projects")) {
        if (!j.at("projects").is_object())
            throw ConfigError("module rules: \"projects\" must map project to generic roots");
        for (const auto& [project, roots] : j.at("projects").items())
            rules.projects[project] = rule_from_json(roots, project);
    }
    return rules;
}

json module_rules_to_json(const ModuleRuleSet& rules)
{
    json projects = json::object();
    for (const auto& [project, rule] : rules.projects)
        projects[project] = rule.generic_roots;
    return { { "default", rules.fallback.generic_roots }, { "projects", projects } };
}

std::optional<std::string> extract_module_path(std::string_view file_path, const ModulePathRule& rule)
{
    auto segs = segments(strip_path(file_path));
    if (segs.empty())
        throw InvalidArgument("module path: empty file path");
    // The last segment is the file name.
    if (segs.size() < 2)
        return std::nullopt;
    auto first = text::to_lower(segs[0]);
    bool generic = false;
    for (const auto& root : rule.generic_roots)
        generic = generic || text::to_lower(root) == first;
    if (!generic)
        return first + "/";
    if (segs.size() < 3)
        return std::nullopt;
    return first + "/" + text::to_lower(segs[1]) + "/";
}

std::string normalize_module_key(std::string_view path)
{
    auto segs = segments(strip_path(path));
    std::string out;
    for (const auto& s : segs)
        out += text::to_lower(s) + "/";
    return out;
}

std::string_view to_string(Layer layer)
{
    switch (layer) {
    case Layer::Policy:
        return "Policy";
    case Layer::Peer:
        return "Peer";
    case Layer::Network:
        return "Network";
    case Layer::UI:
        return "UI";
    case Layer::Other:
        return "Other";
    }
    return "Other";
}

Layer layer_from_string(std::string_view s)
{
    for (auto l : kAllLayers) {
        if (text::iequals(to_string(l), s))
            return l;
    }
    throw ConfigError("architecture map: unknown layer \"" + std::string(s) + "\"");
}

void ArchitectureMap::validate() const
{
    std::map<std::string, Layer> seen;
    for (const auto& [key, a] : entries) {
        if (key.empty() || key != normalize_module_key(key))
            throw ConfigError("architecture map: module path \"" + key + "\" is not normalized");
        if (a.module.empty())
            throw ConfigError("architecture map: module path \"" + key + "\" has an empty module name");
        auto [it, inserted] = seen.emplace(a.module, a.layer);
        if (!inserted && it->second != a.layer)
            throw ConfigError("architecture map: module \"" + a.module + "\" is placed in layers " +
                              std::string(to_string(it->second)) + " and " + std::string(to_string(a.layer)));
    }
}

std::map<std::string, Layer> ArchitectureMap::modules() const
{
    std::map<std::string, Layer> out;
    for (const auto& [key, a] : entries)
        out.emplace(a.module, a.layer);
    return out;
}

const std::pair<const std::string, ModuleAssignment>* ArchitectureMap::match(std::string_view file_path) const
{
    auto path = normalize_module_key(file_path);
    const std::pair<const std::string, ModuleAssignment>* best = nullptr;
    for (const auto& entry : entries) {
        // Keys must cover a folder, not the file itself.
        if (entry.first.size() < path.size() && path.compare(0, entry.first.size(), entry.first) == 0) {
            if (!best || entry.first.size() > best->first.size())
                best = &entry;
        }
    }
    return best;
}

ArchitectureMap default_architecture_map()
{
    ArchitectureMap m;
    auto put = [&](const std::string& module, Layer layer, std::initializer_list<const char*> paths) {
        for (const char* p : paths)
            m.entries[p] = { module, layer };
    };
    put("Consensus", Layer::Policy,
        { "consensus/", "src/consensus/", "miner/", "src/miner/", "ethchain/", "src/cryptonote_core/", "src/scp/",
          "src/ledger/", "src/validation/" });
    put("Wallet", Layer::Peer, { "src/wallet/", "accounts/" });
    put("Storage", Layer::Peer, { "src/blockchain_db/", "src/leveldb/", "ethdb/", "src/database/" });
    put("NetConn", Layer::Network, { "p2p/", "src/p2p/", "src/net/", "src/overlay/", "eth/downloader/", "eth/fetcher/" });
    put("RPC", Layer::Network, { "rpc/", "src/rpc/", "src/wallet_rpc_server/", "internal/ethapi/" });
    put("GUI/CMD", Layer::UI, { "src/qt/", "ethereal/ui/", "src/daemon/", "cmd/", "src/simplewallet/" });
    return m;
}

ArchitectureMap architecture_map_from_json(const json& j)
{
    if (!j.is_object())
        throw ConfigError("architecture map: expected a JSON object");
    ArchitectureMap m;
    try {
        auto policy = j.value("unmapped", std::string("report"));
        if (policy == "report")
            m.unmapped = UnmappedPolicy::Report;
        else if (policy == "drop")
            m.unmapped = UnmappedPolicy::Drop;
        else
            throw ConfigError("architecture map: unmapped policy must be \"report\" or \"drop\"");
        // {"modules": [{"name", "layer", "paths": [...]}]}
        for (const auto& mod : j.at("modules")) {
            auto name = mod.at("name").get<std::string>();
            auto layer = layer_from_string(mod.at("layer").get<std::string>());
            for (const auto& p : mod.at("paths")) {
                auto key = normalize_module_key(p.get<std::string>());
                if (key.empty())
                    throw ConfigError("architecture map: empty module path for \"" + name + "\"");
                auto [it, inserted] = m.entries.emplace(key, ModuleAssignment { name, layer });
                if (!inserted && it->second.module != name)
                    throw ConfigError("architecture map: module path \"" + key + "\" maps to both \"" +
                                      it->second.module + "\" and \"" + name + "\"");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("architecture map: ") + e.what());
    }
    m.validate();
    return m;
}

json architecture_map_to_json(const ArchitectureMap& map)
{
    std::map<std::string, std::pair<Layer, std::vector<std::string>>> by_module;
    for (const auto& [key, a] : map.entries) {
        auto& slot = by_module[a.module];
        slot.first = a.layer;
        slot.second.push_back(key);
    }
    json modules = json::array();
    for (const auto& [name, slot] : by_module)
        modules.push_back({ { "name", name }, { "layer", std::string(to_string(slot.first)) }, { "paths", slot.second } });
    return { { "unmapped", map.unmapped == UnmappedPolicy::Report ? "report" : "drop" }, { "modules", modules } };
}

Overrides overrides_from_json(const json& j)
{
    const json* obj = &j;
    if (j.is_object() && j.contains("overrides"))
        obj = &j.at("overrides");
    if (!obj->is_object())
        throw ConfigError("module overrides: expected an object mapping file path to module");
    Overrides out;
    for (const auto& [path, module] : obj->items()) {
        if (!module.is_string() || module.get<std::string>().empty())
            throw ConfigError("module overrides: module for \"" + path + "\" must be a non-empty string");
        out[strip_path(path)] = module.get<std::string>();
    }
    return out;
}

json overrides_to_json(const Overrides& overrides)
{
    return { { "schema_version", corpus::kSchemaVersion }, { "overrides", overrides } };
}

std::size_t ModuleCounts::module_total() const
{
    std::size_t total = 0;
    for (const auto& [m, n] : modules)
        total += n;
    return total;
}

ModuleCounts aggregate_module_counts(const std::set<IssueKey>& candidates, const corpus::LinkTable& links,
                                     const corpus::Corpus& corpus, const ModuleRuleSet& rules,
                                     const ArchitectureMap& map, const Overrides& overrides)
{
    map.validate();
    auto module_layers = map.modules();
    for (const auto& [path, module] : overrides) {
        if (!module_layers.count(module))
            throw ConfigError("module overrides: \"" + path + "\" names unknown module \"" + module + "\"");
    }

    ModuleCounts counts;
    counts.issues = candidates.size();
    for (auto l : kAllLayers)
        counts.layers[std::string(to_string(l))] = 0;
    for (const auto& [module, layer] : module_layers)
        counts.modules[module] = 0;

    std::map<std::pair<std::string, std::string>, std::set<IssueKey>> flagged;
    for (const auto& issue : candidates) {
        std::set<std::string> mods;
        std::set<std::string> mod_paths;
        std::set<std::string> unmapped;
        const auto& rule = rules.rule_for(issue.project);
        for (const auto& id : links.commits_of(issue)) {
            const auto* commit = corpus.find_commit(CommitKey { issue.project, id });
            if (!commit)
                continue;
            for (const auto& file : touched_files(*commit)) {
                if (text::trim(file).empty())
                    continue;
                auto ov = overrides.find(strip_path(file));
                if (ov != overrides.end()) {
                    mods.insert(ov->second);
                    continue;
                }
                auto mp = extract_module_path(file, rule);
                if (!mp) {
                    flagged[{ issue.project, file }].insert(issue);
                    continue;
                }
                if (const auto* hit = map.match(file)) {
                    mods.insert(hit->second.module);
                    mod_paths.insert(hit->first);
                } else {
                    unmapped.insert(*mp);
                }
            }
        }
        for (const auto& m : mods) {
            ++counts.modules[m];
            ++counts.layers[std::string(to_string(module_layers.at(m)))];
        }
        for (const auto& p : mod_paths)
            ++counts.module_paths[p];
        if (map.unmapped == UnmappedPolicy::Report) {
            for (const auto& p : unmapped)
                ++counts.unmapped[p];
        } else if (!unmapped.empty()) {
            spdlog::debug("modules: {} dropped {} unmapped module paths", issue.str(), unmapped.size());
        }
        if (!mods.empty())
            ++counts.issues_with_module;
    }
    for (auto& [key, issues] : flagged)
        counts.flagged.push_back({ key.first, key.second, { issues.begin(), issues.end() } });
    return counts;
}

json module_counts_to_json(const ModuleCounts& counts, const ArchitectureMap& map)
{
    auto module_layers = map.modules();
    json layers = json::array();
    for (auto l : kAllLayers) {
        json mods = json::array();
        for (const auto& [module, layer] : module_layers) {
            if (layer == l)
                mods.push_back({ { "module", module }, { "count", counts.modules.at(module) } });
        }
        layers.push_back(
            { { "layer", std::string(to_string(l)) }, { "count", counts.layers.at(std::string(to_string(l))) }, { "modules", mods } });
    }
    json flagged = json::array();
    for (const auto& f : counts.flagged) {
        json issues = json::array();
        for (const auto& k : f.issues)
            issues.push_back(k.str());
        flagged.push_back({ { "project", f.project }, { "file_path", f.file_path }, { "issues", issues } });
    }
    return { { "issues", counts.issues },
             { "issues_with_module", counts.issues_with_module },
             { "module_total", counts.module_total() },
             { "layers", layers },
             { "module_paths", counts.module_paths },
             { "unmapped", counts.unmapped },
             { "flagged", flagged } };
}

std::string module_counts_to_csv(const ModuleCounts& counts, const ArchitectureMap& map)
{
    auto module_layers = map.modules();
    std::ostringstream out;
    out << "layer,module,count\n";
    for (auto l : kAllLayers) {
        for (const auto& [module, layer] : module_layers) {
            if (layer == l)
                out << to_string(l) << "," << module << "," << counts.modules.at(module) << "\n";
        }
    }
    return out.str();
}

} // namespace vulnmine::modules
