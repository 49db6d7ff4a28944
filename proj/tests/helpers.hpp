#pragma once

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fsdepth/types.hpp"

namespace testutil {

inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline fsdepth::Image random_image(int h, int w, int c, uint64_t seed, double lo = 0.0,
                                   double hi = 1.0) {
    fsdepth::Image img(h, w, c);
    std::mt19937_64 rng(seed);
    for (double& v : img.data) v = lo + (hi - lo) * uniform01(rng);
    return img;
}

inline fsdepth::DepthMap random_depth(int h, int w, uint64_t seed, double lo = 0.8,
                                      double hi = 5.0) {
    fsdepth::DepthMap d(h, w);
    std::mt19937_64 rng(seed);
    for (double& v : d.data) v = lo + (hi - lo) * uniform01(rng);
    return d;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

/// PSNR for unit-range images over an interior margin.
inline double interior_psnr(const fsdepth::Image& a, const fsdepth::Image& b, int margin) {
    double mse = 0.0;
    long long n = 0;
    for (int y = margin; y < a.height - margin; ++y)
        for (int x = margin; x < a.width - margin; ++x)
            for (int c = 0; c < a.channels; ++c) {
                const double d = a.at(y, x, c) - b.at(y, x, c);
                mse += d * d;
                ++n;
            }
    mse /= static_cast<double>(n);
    return mse <= 0.0 ? 1e9 : 10.0 * std::log10(1.0 / mse);
}

/// Unique scratch directory under the system temp root, removed on destruction.
struct ScratchDir {
    std::filesystem::path path;

    explicit ScratchDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("fsdepth_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace testutil
