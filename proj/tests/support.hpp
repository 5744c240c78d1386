#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "acp/box.hpp"

namespace acp::testing {

inline BoundingBox random_box(std::mt19937_64& rng, double extent = 200.0, double min_side = 1.0,
                              double max_side = 80.0) {
    std::uniform_real_distribution<double> pos(0.0, extent);
    std::uniform_real_distribution<double> side(min_side, max_side);
    const double x = pos(rng), y = pos(rng);
    return {x, y, x + side(rng), y + side(rng)};
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("acp_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace acp::testing
