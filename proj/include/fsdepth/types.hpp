#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsdepth {

/// H x W x C raster of real-valued intensities, nominally in [0, 1].
/// Row-major, channel-interleaved. Channels is 1 (gray) or 3 (RGB).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 1;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<size_t>(h) * w * c, fill) {}

    double& at(int y, int x, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }

    size_t size() const { return data.size(); }
    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

/// H x W field of metric depths in meters.
struct DepthMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    DepthMap() = default;
    DepthMap(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    double& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }

    size_t size() const { return data.size(); }
};

/// Valid metric depth interval; the default matches indoor-scene range.
struct DepthRange {
    double min_m = 0.7;
    double max_m = 10.0;
};

/// Square (2r+1)^2 convolution stencil.
struct Kernel {
    int radius = 0;
    std::vector<double> weights;  // row-major, (2r+1)^2 entries

    int side() const { return 2 * radius + 1; }
    double at(int dy, int dx) const {
        return weights[static_cast<size_t>(dy + radius) * side() + (dx + radius)];
    }
};

/// Throws DimensionError / NumericError when the type invariants fail.
/// `what` names the operand in the error message.
void validate_image(const Image& img, const std::string& what = "image");
void validate_depth_map(const DepthMap& d, const DepthRange& range,
                        const std::string& what = "depth map");

/// Rec. 601 luma; returns a copy for single-channel input.
Image luma(const Image& img);

}  // namespace fsdepth
