#pragma once

#include <string>
#include <vector>

#include "fsdepth/image_io.hpp"
#include "fsdepth/optics.hpp"
#include "fsdepth/types.hpp"

namespace fsdepth {

/// Ordered focal slices, one per schedule distance, all dimension-identical.
struct FocalStack {
    std::vector<Image> slices;
    FocusSchedule schedule;

    size_t size() const { return slices.size(); }
};

void validate_stack(const FocalStack& stack);

/// Per-pixel dLoss/dDepth, units 1/meters.
struct DepthGradientMap {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    DepthGradientMap() = default;
    DepthGradientMap(int h, int w) : height(h), width(w), data(static_cast<size_t>(h) * w, 0.0) {}

    double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
};

/// Gaussian PSF width for a scene point: max(sigma_floor, coc_to_sigma * CoC).
double sigma_at(double depth_m, double focus_dist_m, const LensConfig& lens);

/// Per-source-pixel state of one rendered slice. The renderer is a
/// scatter-normalized gather: out(x) = sum_y w(x,y) aif(y) / sum_y w(x,y)
/// with w(x,y) = exp(-|x-y|^2 / (2 sigma(y)^2)) truncated to the square
/// window max(|dx|,|dy|) <= radius(y), radius(y) = min(ceil(3 sigma(y)),
/// max_kernel_radius). Each pixel's blur is governed by its own depth.
struct SliceCache {
    int height = 0, width = 0, channels = 1;
    double focus_dist_m = 0.0;
    std::vector<double> sigma;    // per source pixel, px
    std::vector<int> radius;      // per source pixel, truncation radius
    std::vector<double> lut;      // per pixel: exp(-d^2/(2 sigma^2)) for d = 0..radius
    int lut_stride = 0;           // max radius + 1
    Image out;                    // forward result
    std::vector<double> weight_sum;  // normalization denominator per output pixel
    long long scatter_cost = 0;   // sum of (2r+1)^2, for load balancing
};

/// Forward render with sigma and radius derived from `depth`.
SliceCache make_slice_cache(const Image& aif, const DepthMap& depth, double focus_dist_m,
                            const LensConfig& lens);

/// Forward render with the truncation radii frozen to an earlier pass's
/// values; sigma still follows `depth`. This is what finite-difference
/// probes must use so the truncation boundary cannot flip.
SliceCache make_slice_cache_frozen(const Image& aif, const DepthMap& depth, double focus_dist_m,
                                   const LensConfig& lens, const std::vector<int>& radius);

Image render_slice(const Image& aif, const DepthMap& depth, double focus_dist_m,
                   const LensConfig& lens);

/// One render_slice per schedule distance, order preserved. Slices render
/// in parallel; output is bit-identical for any thread count.
FocalStack render_stack(const Image& aif, const DepthMap& depth, const FocusSchedule& schedule,
                        const LensConfig& lens);

/// Analytic adjoint: dL/ddepth(y) given upstream = dL/dout per pixel.
/// Kernel support is held at the forward radii; where the sigma floor is
/// active the gradient is zero.
DepthGradientMap render_slice_adjoint(const Image& aif, const DepthMap& depth,
                                      double focus_dist_m, const LensConfig& lens,
                                      const Image& upstream);

/// Adjoint reusing an existing forward cache (the optimizer's path).
DepthGradientMap adjoint_from_cache(const SliceCache& cache, const Image& aif,
                                    const DepthMap& depth, const LensConfig& lens,
                                    const Image& upstream);

/// Persists slices as slice_00.<ext> ... plus schedule.csv (index,focus_m).
void save_stack(const std::string& dir, const FocalStack& stack,
                ImageFormat format = ImageFormat::pfm);
FocalStack load_stack(const std::string& dir);

}  // namespace fsdepth
