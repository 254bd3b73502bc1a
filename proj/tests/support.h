#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

inline std::filesystem::path fixture(const std::string& relative)
{
    return std::filesystem::path(VULNMINE_FIXTURE_DIR) / relative;
}

inline std::filesystem::path data_file(const std::string& relative)
{
    return std::filesystem::path(VULNMINE_DATA_DIR) / relative;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag)
    {
        std::random_device rd;
        m_path = std::filesystem::temp_directory_path() / ("vulnmine-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(m_path);
    }
    ~ScratchDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(m_path, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return m_path; }

private:
    std::filesystem::path m_path;
};

// Seeded generator for property tests; every property run is reproducible.
class Gen {
public:
    explicit Gen(std::uint64_t seed)
        : m_engine(seed)
    {
    }

    std::size_t index(std::size_t bound) { return std::uniform_int_distribution<std::size_t>(0, bound - 1)(m_engine); }
    int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(m_engine); }
    double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(m_engine); }
    bool coin() { return index(2) == 1; }

    template<typename T>
    const T& pick(const std::vector<T>& items) { return items[index(items.size())]; }

private:
    std::mt19937_64 m_engine;
};

} // namespace testsupport
