#pragma once

#include <string>

#include "fsdepth/types.hpp"

namespace fsdepth {

enum class ImageFormat {
    png8,   // round(v*255), 8-bit gray or RGB
    png16,  // round(v*65535), 16-bit gray or RGB
    pfm,    // raw float32, "Pf"/"PF", little-endian scale -1.0
};

enum class DepthFormat {
    png16_mm,  // 16-bit gray PNG, round(meters*1000) clamped to [0, 65535]
    pfm_m,     // float32 PFM, meters
};

/// Counters filled while loading a depth file.
struct DepthLoadReport {
    int invalid_zero = 0;  // stored zeros (invalid in NYU convention), replaced by d_min
    int clamped = 0;       // finite values pulled into [d_min, d_max]
};

void save_image(const std::string& path, const Image& img, ImageFormat format);
Image load_image(const std::string& path, ImageFormat format);

void save_depth(const std::string& path, const DepthMap& d, DepthFormat format);
DepthMap load_depth(const std::string& path, DepthFormat format, const DepthRange& range,
                    DepthLoadReport* report = nullptr);

/// Sniffs PFM vs PNG from the file's magic bytes (CLI convenience).
/// Throws IoError(malformed) when neither signature matches.
ImageFormat detect_format(const std::string& path);

/// 8-bit and 16-bit quantization used by the PNG writers.
inline int quantize_u8(double v) {
    double q = v * 255.0;
    if (q <= 0.0) return 0;
    if (q >= 255.0) return 255;
    return static_cast<int>(q + 0.5);
}
inline int quantize_u16(double v) {
    double q = v * 65535.0;
    if (q <= 0.0) return 0;
    if (q >= 65535.0) return 65535;
    return static_cast<int>(q + 0.5);
}

}  // namespace fsdepth
