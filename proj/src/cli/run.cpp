#include <vulnmine/cli.h>

#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.h"

namespace vulnmine::cli {

namespace fs = std::filesystem;

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app { "Mine vulnerability-fixing issues and commits, cluster them and scan for unpatched clones",
                   "vulnmine" };
    app.set_version_flag("--version", std::string(VULNMINE_VERSION));
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir;
    std::size_t jobs = 1;
    std::string log_level = "warn";
    app.add_option("--config", config_path, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Artifact directory (defaults to the config's output_dir)");
    app.add_option("--jobs", jobs, "Worker threads for matrix and scan work")->check(CLI::Range(1, 256));
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
        ->check(CLI::IsMember({ "trace", "debug", "info", "warn", "error", "critical", "off" }));

    auto* ingest = app.add_subcommand("ingest", "Load, deduplicate and link the issue/commit corpus");
    auto* filter = app.add_subcommand("filter", "Run the staged issue filter and write the candidate list");
    auto* modules = app.add_subcommand("modules", "Count candidate issues per module and layer");
    auto* types = app.add_subcommand("types", "Extract vulnerability type keywords from candidate titles");
    auto* signatures = app.add_subcommand("signatures", "Build code change signatures for candidate commits");
    auto* cluster = app.add_subcommand("cluster", "Cluster type keywords (--text) or code signatures (--code)");
    bool text = false;
    bool code = false;
    auto* text_flag = cluster->add_flag("--text", text, "Cluster type keywords by word mover's distance");
    auto* code_flag = cluster->add_flag("--code", code, "Cluster code change signatures by edit distance");
    text_flag->excludes(code_flag);
    code_flag->excludes(text_flag);
    auto* scan = app.add_subcommand("scan", "Scan a source tree for known vulnerability patterns");
    std::string target;
    std::string patterns;
    scan->add_option("target", target, "Root of the source tree")->required();
    scan->add_option("--patterns", patterns, "Pattern file (defaults to the config's patterns)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code_out = app.exit(e, out, err);
        return code_out == 0 ? kExitOk : kExitError;
    }
    if (cluster->parsed() && !text && !code) {
        err << "vulnmine: cluster needs --text or --code\n";
        return kExitError;
    }

    spdlog::set_level(spdlog::level::from_str(log_level));
    try {
        auto config = config_path.empty() ? default_pipeline_config() : load_pipeline_config(config_path);
        fs::path dir = out_dir.empty() ? config.output_dir : fs::path(out_dir);
        fs::create_directories(dir);
        Context ctx { std::move(config), dir, jobs, out };
        if (ingest->parsed())
            return cmd_ingest(ctx);
        if (filter->parsed())
            return cmd_filter(ctx);
        if (modules->parsed())
            return cmd_modules(ctx);
        if (types->parsed())
            return cmd_types(ctx);
        if (signatures->parsed())
            return cmd_signatures(ctx);
        if (cluster->parsed())
            return text ? cmd_cluster_text(ctx) : cmd_cluster_code(ctx);
        if (scan->parsed()) {
            std::optional<fs::path> override_path;
            if (!patterns.empty())
                override_path = patterns;
            return cmd_scan(ctx, target, override_path);
        }
    } catch (const std::exception& e) {
        err << "vulnmine: error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}

int run(int argc, char** argv)
{
    spdlog::set_default_logger(spdlog::stderr_logger_mt("vulnmine"));
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i)
        args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

} // namespace vulnmine::cli
