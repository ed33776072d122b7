#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

namespace testing_support {

/// Same 64-bit LCG as tests/oracles/likelihood_oracle.py; yields uniforms on [0,1) with 53 bits.
class Lcg {
public:
    explicit Lcg(std::uint64_t seed) : state_(seed) {}
    double next() {
        state_ = 6364136223846793005ULL * state_ + 1442695040888963407ULL;
        return static_cast<double>(state_ >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("varnews_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
