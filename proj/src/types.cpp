#include "fsdepth/types.hpp"

#include <cmath>

#include "fsdepth/error.hpp"

namespace fsdepth {

void validate_image(const Image& img, const std::string& what) {
    if (img.height < 1 || img.width < 1)
        throw DimensionError(what + ": height and width must be >= 1");
    if (img.channels != 1 && img.channels != 3)
        throw DimensionError(what + ": channels must be 1 or 3");
    if (img.data.size() != static_cast<size_t>(img.height) * img.width * img.channels)
        throw DimensionError(what + ": data length does not match height*width*channels");
    for (double v : img.data)
        if (!std::isfinite(v)) throw NumericError(what + ": non-finite intensity");
}

void validate_depth_map(const DepthMap& d, const DepthRange& range, const std::string& what) {
    if (d.height < 1 || d.width < 1)
        throw DimensionError(what + ": height and width must be >= 1");
    if (d.data.size() != static_cast<size_t>(d.height) * d.width)
        throw DimensionError(what + ": data length does not match height*width");
    for (double v : d.data) {
        if (!std::isfinite(v)) throw NumericError(what + ": non-finite depth");
        if (v < range.min_m || v > range.max_m)
            throw DomainError(what + ": depth outside [" + std::to_string(range.min_m) +
                              ", " + std::to_string(range.max_m) + "] m");
    }
}

Image luma(const Image& img) {
    if (img.channels == 1) return img;
    Image out(img.height, img.width, 1);
    const size_t n = static_cast<size_t>(img.height) * img.width;
    for (size_t p = 0; p < n; ++p) {
        const double* px = &img.data[p * 3];
        out.data[p] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
    return out;
}

}  // namespace fsdepth
