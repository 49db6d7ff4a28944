#include "fsdepth/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "fsdepth/convolve.hpp"
#include "fsdepth/error.hpp"
#include "fsdepth/focus.hpp"

namespace fsdepth {

PixelMask interior_mask(int height, int width, int margin) {
    PixelMask mask(static_cast<size_t>(height) * width, 0);
    for (int y = margin; y < height - margin; ++y)
        for (int x = margin; x < width - margin; ++x)
            mask[static_cast<size_t>(y) * width + x] = 1;
    return mask;
}

namespace {

void require_metric_inputs(const DepthMap& pred, const DepthMap& gt, const PixelMask& mask) {
    if (pred.height != gt.height || pred.width != gt.width)
        throw DimensionError("metrics: prediction and ground truth dimensions differ");
    if (mask.size() != pred.size()) throw DimensionError("metrics: mask size mismatch");
}

long long masked_count(const PixelMask& mask) {
    long long n = 0;
    for (uint8_t m : mask) n += m ? 1 : 0;
    return n;
}

}  // namespace

double rmse(const DepthMap& pred, const DepthMap& gt, const PixelMask& mask) {
    require_metric_inputs(pred, gt, mask);
    double sse = 0.0;
    long long n = 0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        if (!mask[i]) continue;
        const double d = pred.data[i] - gt.data[i];
        sse += d * d;
        ++n;
    }
    if (n == 0) throw DomainError("rmse: mask selects no pixels");
    return std::sqrt(sse / n);
}

double delta_accuracy(const DepthMap& pred, const DepthMap& gt, const PixelMask& mask, int k) {
    require_metric_inputs(pred, gt, mask);
    if (k < 1 || k > 3) throw DomainError("delta_accuracy: k must be 1, 2 or 3");
    const double threshold = std::pow(1.25, k);
    long long hits = 0, n = 0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        if (!mask[i]) continue;
        if (!(pred.data[i] > 0.0) || !(gt.data[i] > 0.0))
            throw DomainError("delta_accuracy: depths must be positive");
        const double ratio = std::max(pred.data[i] / gt.data[i], gt.data[i] / pred.data[i]);
        if (ratio < threshold) ++hits;
        ++n;
    }
    if (n == 0) throw DomainError("delta_accuracy: mask selects no pixels");
    return static_cast<double>(hits) / static_cast<double>(n);
}

MetricsReport compute_metrics(const DepthMap& pred, const DepthMap& gt, const PixelMask& mask,
                              const std::string& label) {
    MetricsReport r;
    r.label = label;
    r.rmse_m = rmse(pred, gt, mask);
    r.delta1 = delta_accuracy(pred, gt, mask, 1);
    r.delta2 = delta_accuracy(pred, gt, mask, 2);
    r.delta3 = delta_accuracy(pred, gt, mask, 3);
    r.pixels = masked_count(mask);
    return r;
}

// ------------------------------------------------------------- scenes

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Image make_texture(const SceneSpec& spec) {
    Image tex(spec.height, spec.width, 1);
    if (spec.texture == SceneSpec::Texture::checker) {
        if (!(spec.checker_period_px >= 2.0))
            throw DomainError("scene: checker period must be >= 2 px");
        const int half = std::max(1, static_cast<int>(spec.checker_period_px / 2.0));
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                tex.at(y, x) = ((y / half) + (x / half)) % 2 == 0 ? 0.25 : 0.75;
        return tex;
    }
    if (!(spec.noise_correlation_px > 0.0))
        throw DomainError("scene: noise correlation length must be > 0");
    std::mt19937_64 rng(spec.seed);
    for (double& v : tex.data) v = uniform01(rng);
    tex = convolve2d(tex, gaussian_kernel(spec.noise_correlation_px));
    double lo = tex.data[0], hi = tex.data[0];
    for (double v : tex.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    if (span <= 0.0) throw NumericError("scene: degenerate noise texture");
    for (double& v : tex.data) v = 0.1 + 0.8 * (v - lo) / span;
    return tex;
}

DepthMap make_layout(const SceneSpec& spec, const DepthRange& range) {
    for (double d : spec.depths_m)
        if (!(d >= range.min_m && d <= range.max_m))
            throw DomainError("scene: depth outside the configured range");
    DepthMap depth(spec.height, spec.width);
    switch (spec.kind) {
        case SceneSpec::Kind::plane: {
            if (spec.depths_m.size() != 1) throw DomainError("scene: plane takes one depth");
            std::fill(depth.data.begin(), depth.data.end(), spec.depths_m[0]);
            break;
        }
        case SceneSpec::Kind::staircase: {
            if (spec.depths_m.size() < 2)
                throw DomainError("scene: staircase takes at least two depths");
            const int n = static_cast<int>(spec.depths_m.size());
            const int band = spec.band_width_px > 0 ? spec.band_width_px
                                                    : (spec.width + n - 1) / n;
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x) {
                    int b = std::min(x / band, n - 1);  // last band extends to the edge
                    depth.at(y, x) = spec.depths_m[b];
                }
            break;
        }
        case SceneSpec::Kind::two_plane: {
            if (spec.depths_m.size() != 2) throw DomainError("scene: two_plane takes two depths");
            if (!(spec.split > 0.0 && spec.split < 1.0))
                throw DomainError("scene: two_plane split must be in (0, 1)");
            const int cut = std::clamp(static_cast<int>(spec.split * spec.width), 1,
                                       spec.width - 1);
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x)
                    depth.at(y, x) = x < cut ? spec.depths_m[0] : spec.depths_m[1];
            break;
        }
    }
    return depth;
}

}  // namespace

Scene make_scene(const SceneSpec& spec, const DepthRange& range) {
    if (spec.height < 32 || spec.width < 32)
        throw DomainError("scene: dimensions must be at least 32x32");
    Scene scene{make_texture(spec), make_layout(spec, range)};

    // texture sanity: focus measures need a usable Laplacian response
    Image lap = convolve2d(scene.aif, laplacian3_kernel());
    double mean_abs = 0.0;
    for (double v : lap.data) mean_abs += std::abs(v);
    mean_abs /= static_cast<double>(lap.data.size());
    if (mean_abs <= 0.01)
        throw NumericError("scene: texture Laplacian response too weak (" +
                           std::to_string(mean_abs) + ")");
    return scene;
}

std::string scene_label(const SceneSpec& spec) {
    if (!spec.name.empty()) return spec.name;
    std::ostringstream os;
    switch (spec.kind) {
        case SceneSpec::Kind::plane:
            os << "plane_" << spec.depths_m[0];
            break;
        case SceneSpec::Kind::staircase:
            os << "staircase";
            for (double d : spec.depths_m) os << "_" << d;
            break;
        case SceneSpec::Kind::two_plane:
            os << "two_plane_" << spec.depths_m[0] << "_" << spec.depths_m[1];
            break;
    }
    return os.str();
}

// ------------------------------------------------------------- benchmark

BenchmarkResult run_benchmark(const std::vector<SceneSpec>& suite, const LensConfig& lens,
                              const FocusSchedule& schedule, const BenchmarkOptions& opts) {
    if (suite.empty()) throw DomainError("benchmark: empty scene suite");
    validate_lens(lens, opts.range);
    validate_schedule(schedule, opts.range);

    const int margin = opts.interior_margin >= 0 ? opts.interior_margin : lens.max_kernel_radius;
    const char* method_names[3] = {"dff_argmax", "focal_stack_syn_aif", "focal_stack_gt_aif"};

    BenchmarkResult result;
    double sse[3] = {0, 0, 0};
    long long hits[3][3] = {{0}};
    long long total_px = 0;

    for (const SceneSpec& spec : suite) {
        const Scene scene = make_scene(spec, opts.range);
        const PixelMask mask = interior_mask(spec.height, spec.width, margin);
        const FocalStack observed = render_stack(scene.aif, scene.depth, schedule, lens);
        const FocusVolume fv = focus_measure(observed, opts.fm_window_sigma);

        EstimateOptions eopts;
        eopts.range = opts.range;
        eopts.fm_window_sigma = opts.fm_window_sigma;

        const DepthMap dff = dff_argmax_depth(fv, schedule);
        const Image syn_aif = composite_aif(observed, fv, AifMode::argmax);
        const DepthMap est_syn =
            estimate_depth(observed, syn_aif, lens, opts.loss, opts.init, eopts).depth;
        const DepthMap est_gt =
            estimate_depth(observed, scene.aif, lens, opts.loss, opts.init, eopts).depth;

        const DepthMap* preds[3] = {&dff, &est_syn, &est_gt};
        const std::string label = scene_label(spec);
        for (int m = 0; m < 3; ++m) {
            MetricsReport r = compute_metrics(*preds[m], scene.depth, mask,
                                              std::string(method_names[m]) + "," + label);
            result.per_scene.push_back(r);
            sse[m] += r.rmse_m * r.rmse_m * static_cast<double>(r.pixels);
            for (int k = 0; k < 3; ++k) {
                const double frac = k == 0 ? r.delta1 : (k == 1 ? r.delta2 : r.delta3);
                hits[m][k] += static_cast<long long>(std::llround(frac * r.pixels));
            }
        }
        total_px += masked_count(mask);
    }

    for (int m = 0; m < 3; ++m) {
        MetricsReport agg;
        agg.label = std::string(method_names[m]) + ",aggregate";
        agg.pixels = total_px;
        agg.rmse_m = std::sqrt(sse[m] / static_cast<double>(total_px));
        agg.delta1 = static_cast<double>(hits[m][0]) / total_px;
        agg.delta2 = static_cast<double>(hits[m][1]) / total_px;
        agg.delta3 = static_cast<double>(hits[m][2]) / total_px;
        result.aggregate.push_back(agg);
    }
    return result;
}

namespace {

std::string metrics_csv_row(const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%.9f,%.6f,%.6f,%.6f,%lld\n", r.label.c_str(), r.rmse_m,
                  r.delta1, r.delta2, r.delta3, r.pixels);
    return buf;
}

}  // namespace

std::string benchmark_csv(const BenchmarkResult& result) {
    std::string out = "method,scene,rmse_m,delta1,delta2,delta3,pixels\n";
    for (const MetricsReport& r : result.per_scene) out += metrics_csv_row(r);
    for (const MetricsReport& r : result.aggregate) out += metrics_csv_row(r);
    return out;
}

std::string benchmark_table(const BenchmarkResult& result) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-24s %10s %10s %10s %10s\n", "method", "RMSE (m)",
                  "d<1.25", "d<1.25^2", "d<1.25^3");
    out += buf;
    for (const MetricsReport& r : result.aggregate) {
        const std::string method = r.label.substr(0, r.label.find(','));
        std::snprintf(buf, sizeof buf, "%-24s %10.3f %10.3f %10.3f %10.3f\n", method.c_str(),
                      r.rmse_m, r.delta1, r.delta2, r.delta3);
        out += buf;
    }
    return out;
}

Image colorize_depth(const DepthMap& depth, const DepthRange& range) {
    Image out(depth.height, depth.width, 3);
    const double q_lo = 1.0 / range.max_m, q_hi = 1.0 / range.min_m;
    for (size_t i = 0; i < depth.data.size(); ++i) {
        // normalized inverse depth: near = 1, far = 0
        double t = (1.0 / depth.data[i] - q_lo) / (q_hi - q_lo);
        t = std::clamp(t, 0.0, 1.0);
        // compact blue->cyan->yellow->red ramp
        const double r = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
        const double g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
        const double b = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
        out.data[i * 3 + 0] = r;
        out.data[i * 3 + 1] = g;
        out.data[i * 3 + 2] = b;
    }
    return out;
}

}  // namespace fsdepth
