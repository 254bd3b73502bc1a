#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include <vulnmine/cli.h>
#include <vulnmine/error.h>

namespace vulnmine::cli {

// An upstream artifact is absent from the output directory.
class MissingArtifact : public Error {
public:
    using Error::Error;
};

struct Context {
    PipelineConfig config;
    std::filesystem::path out_dir;
    std::size_t jobs = 1;
    std::ostream& out;
};

int cmd_ingest(const Context& ctx);
int cmd_filter(const Context& ctx);
int cmd_modules(const Context& ctx);
int cmd_types(const Context& ctx);
int cmd_signatures(const Context& ctx);
int cmd_cluster_text(const Context& ctx);
int cmd_cluster_code(const Context& ctx);
int cmd_scan(const Context& ctx, const std::filesystem::path& target,
             const std::optional<std::filesystem::path>& patterns_override);

} // namespace vulnmine::cli
