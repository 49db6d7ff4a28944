#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsdepth/estimate.hpp"
#include "fsdepth/optics.hpp"
#include "fsdepth/types.hpp"

namespace fsdepth {

using PixelMask = std::vector<uint8_t>;  // h*w, nonzero = included

/// Mask selecting pixels at least `margin` away from every image border.
PixelMask interior_mask(int height, int width, int margin);

/// sqrt(mean over masked pixels of (pred - gt)^2), meters.
double rmse(const DepthMap& pred, const DepthMap& gt, const PixelMask& mask);

/// Fraction of masked pixels with max(pred/gt, gt/pred) < 1.25^k, k in {1,2,3}.
/// Strict inequality.
double delta_accuracy(const DepthMap& pred, const DepthMap& gt, const PixelMask& mask, int k);

struct MetricsReport {
    std::string label;
    double rmse_m = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    long long pixels = 0;
};
MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, const PixelMask& mask,
                              const std::string& label);

// ------------------------------------------------------------- scenes

/// Deterministic synthetic RGB-D scene: a textured all-in-focus image plus
/// a piecewise depth layout.
struct SceneSpec {
    enum class Kind { plane, staircase, two_plane } kind = Kind::plane;
    std::vector<double> depths_m = {1.2};  // plane: 1 value; two_plane: 2; staircase: >= 2
    int band_width_px = 0;                 // staircase band width; 0 = equal bands
    double split = 0.5;                    // two_plane vertical split fraction

    enum class Texture { checker, noise } texture = Texture::noise;
    double checker_period_px = 8.0;
    double noise_correlation_px = 1.5;
    uint64_t seed = 7;

    int height = 128;
    int width = 128;
    std::string name;  // label used in reports; derived from fields when empty
};

struct Scene {
    Image aif;
    DepthMap depth;
};

/// Deterministic for identical specs. The texture is guaranteed to carry
/// usable focus information (mean |Laplacian| > 0.01).
Scene make_scene(const SceneSpec& spec, const DepthRange& range = {});

std::string scene_label(const SceneSpec& spec);

// ------------------------------------------------------------- benchmark

/// One run per method per scene: the classical argmax baseline, the
/// estimator fed a Laplacian-composited AIF, and the estimator fed the
/// ground-truth AIF.
struct BenchmarkOptions {
    LossConfig loss;
    DepthRange range;
    double fm_window_sigma = 2.0;
    Init init = Init::dff();
    int interior_margin = -1;  // -1 = lens.max_kernel_radius
};

struct BenchmarkResult {
    std::vector<MetricsReport> per_scene;  // 3 rows per scene, method-major label
    std::vector<MetricsReport> aggregate;  // 3 rows, pixel-weighted over the suite
};

BenchmarkResult run_benchmark(const std::vector<SceneSpec>& suite, const LensConfig& lens,
                              const FocusSchedule& schedule, const BenchmarkOptions& opts);

/// CSV rows: method,scene,rmse_m,delta1,delta2,delta3,pixels.
std::string benchmark_csv(const BenchmarkResult& result);

/// Fixed-width text table of the aggregate rows.
std::string benchmark_table(const BenchmarkResult& result);

/// Depth preview helper: inverse-depth colormap image for PNG export.
Image colorize_depth(const DepthMap& depth, const DepthRange& range);

}  // namespace fsdepth
