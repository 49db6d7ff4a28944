#include "fsdepth/convolve.hpp"

#include <algorithm>
#include <cmath>

#include "fsdepth/error.hpp"
#include "fsdepth/parallel.hpp"

namespace fsdepth {

Image convolve2d(const Image& img, const Kernel& k, Border) {
    validate_image(img);
    if (k.radius < 0 || k.weights.size() != static_cast<size_t>(k.side()) * k.side())
        throw DimensionError("convolve2d: malformed kernel");
    if (k.radius >= std::min(img.height, img.width))
        throw DimensionError("convolve2d: kernel radius must be smaller than image extent");

    const int h = img.height, w = img.width, c = img.channels, r = k.radius;
    Image out(h, w, c);
    parallel_chunks(0, h, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int ch = 0; ch < c; ++ch) {
                    double acc = 0.0;
                    for (int dy = -r; dy <= r; ++dy) {
                        const int yy = std::clamp(y + dy, 0, h - 1);
                        for (int dx = -r; dx <= r; ++dx) {
                            const int xx = std::clamp(x + dx, 0, w - 1);
                            acc += k.at(dy, dx) * img.at(yy, xx, ch);
                        }
                    }
                    out.at(y, x, ch) = acc;
                }
            }
        }
    });
    return out;
}

Kernel identity_kernel() {
    return Kernel{0, {1.0}};
}

Kernel box_kernel(int radius) {
    Kernel k;
    k.radius = radius;
    const int n = k.side() * k.side();
    k.weights.assign(n, 1.0 / n);
    return k;
}

Kernel gaussian_kernel(double sigma, int radius) {
    if (!(sigma > 0.0)) throw DomainError("gaussian_kernel: sigma must be > 0");
    Kernel k;
    k.radius = radius >= 0 ? radius : static_cast<int>(std::ceil(3.0 * sigma));
    const int side = k.side();
    k.weights.resize(static_cast<size_t>(side) * side);
    double sum = 0.0;
    for (int dy = -k.radius; dy <= k.radius; ++dy)
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
            double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            k.weights[static_cast<size_t>(dy + k.radius) * side + (dx + k.radius)] = v;
            sum += v;
        }
    for (double& v : k.weights) v /= sum;
    return k;
}

Kernel laplacian3_kernel() {
    Kernel k;
    k.radius = 1;
    k.weights = {0.0, 1.0, 0.0,
                 1.0, -4.0, 1.0,
                 0.0, 1.0, 0.0};
    return k;
}

void validate_kernel(const Kernel& k, bool unit_sum, bool zero_sum) {
    if (k.weights.size() != static_cast<size_t>(k.side()) * k.side())
        throw DimensionError("kernel: weight count does not match (2r+1)^2");
    double sum = 0.0;
    for (double v : k.weights) {
        if (!std::isfinite(v)) throw NumericError("kernel: non-finite weight");
        sum += v;
    }
    if (unit_sum && std::abs(sum - 1.0) > 1e-9)
        throw NumericError("kernel: smoothing weights must sum to 1 within 1e-9");
    if (zero_sum && std::abs(sum) > 1e-12)
        throw NumericError("kernel: Laplacian weights must sum to 0 within 1e-12");
}

}  // namespace fsdepth
