#include <vulnmine/error.h>
#include <vulnmine/io.h>

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>
#include <system_error>

namespace vulnmine::io {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw LoadError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const std::filesystem::path& path)
{
    auto content = read_file(path);
    try {
        return nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw LoadError(path.string() + ": invalid JSON: " + e.what());
    }
}

void write_atomic(const std::filesystem::path& path, std::string_view content)
{
    auto parent = path.parent_path();
    if (!parent.empty())
        std::filesystem::create_directories(parent);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw Error("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot rename " + tmp.string() + ": " + ec.message());
    }
}

std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest {};
    unsigned int length = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1
        || EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1
        || EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1)
        throw Error("sha256 failed");

    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

namespace {

bool glob_match_at(std::string_view p, std::string_view s)
{
    while (!p.empty()) {
        if (p.starts_with("**")) {
            auto rest = p.substr(2);
            bool slash = rest.starts_with('/');
            if (slash) {
                // "**/" matches zero or more whole segments.
                auto after = rest.substr(1);
                if (glob_match_at(after, s))
                    return true;
                for (std::size_t i = 0; i < s.size(); ++i) {
                    if (s[i] == '/' && glob_match_at(after, s.substr(i + 1)))
                        return true;
                }
                return false;
            }
            for (std::size_t i = 0; i <= s.size(); ++i) {
                if (glob_match_at(rest, s.substr(i)))
                    return true;
            }
            return false;
        }
        char c = p.front();
        if (c == '*') {
            auto rest = p.substr(1);
            for (std::size_t i = 0; i <= s.size(); ++i) {
                if (glob_match_at(rest, s.substr(i)))
                    return true;
                if (i < s.size() && s[i] == '/')
                    return false;
            }
            return false;
        }
        if (s.empty())
            return false;
        if (c == '?') {
            if (s.front() == '/')
                return false;
        } else if (c != s.front()) {
            return false;
        }
        p.remove_prefix(1);
        s.remove_prefix(1);
    }
    return s.empty();
}

} // namespace

bool glob_match(std::string_view pattern, std::string_view path)
{
    return glob_match_at(pattern, path);
}

} // namespace vulnmine::io
