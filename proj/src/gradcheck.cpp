#include "fsdepth/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fsdepth/convolve.hpp"
#include "fsdepth/parallel.hpp"

namespace fsdepth {

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct RandomScene {
    Image aif;
    DepthMap depth;
    Image upstream;
};

// Correlated noise texture; small enough sizes (16x16) sit below the
// synthetic-benchmark scene minimum, so it is generated directly here.
Image noise_texture(uint64_t seed, int size, double correlation_px) {
    Image tex(size, size, 1);
    std::mt19937_64 rng(seed);
    for (double& v : tex.data) v = uniform01(rng);
    tex = convolve2d(tex, gaussian_kernel(correlation_px));
    double lo = tex.data[0], hi = tex.data[0];
    for (double v : tex.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double& v : tex.data) v = 0.1 + 0.8 * (v - lo) / (hi - lo);
    return tex;
}

RandomScene random_scene(uint64_t seed, int size) {
    RandomScene out;
    out.aif = noise_texture(seed, size, 1.0);

    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
    out.depth = DepthMap(size, size);
    for (double& d : out.depth.data) d = 0.8 + 4.2 * uniform01(rng);
    out.upstream = Image(size, size, 1);
    for (double& u : out.upstream.data) u = 2.0 * uniform01(rng) - 1.0;
    return out;
}

/// Deterministic sample of pixel indices: a seeded shuffle of [0, n).
std::vector<size_t> sample_pixels(uint64_t seed, size_t n, int count) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::mt19937_64 rng(seed ^ 0xda3e39cb94b95bdbULL);
    for (size_t i = n - 1; i > 0; --i) {
        const size_t j = static_cast<size_t>(rng() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(std::min<size_t>(idx.size(), static_cast<size_t>(count)));
    return idx;
}

struct RelErrAccum {
    double max_rel = 0.0;
    int compared = 0;

    void add(double analytic, double fd, double scale_floor) {
        const double mag = std::max(std::abs(analytic), std::abs(fd));
        if (mag <= scale_floor) return;  // both negligible: no relative error defined
        const double rel = std::abs(analytic - fd) / mag;
        max_rel = std::max(max_rel, rel);
        ++compared;
    }
};

}  // namespace

FdCheckResult adjoint_fd_check(const LensConfig& lens, double focus_dist_m, uint64_t seed,
                               int size, int n_samples, double step_m, double tolerance) {
    RandomScene scene = random_scene(seed, size);
    const SliceCache base = make_slice_cache(scene.aif, scene.depth, focus_dist_m, lens);
    const DepthGradientMap analytic =
        adjoint_from_cache(base, scene.aif, scene.depth, lens, scene.upstream);

    // Central differences of L carry ~eps*|L|/(2h) of cancellation noise;
    // gradients below ~5e-4 of the scene's max cannot be resolved to 1e-4
    // by the oracle and are excluded from the relative comparison.
    double gscale = 0.0;
    for (double g : analytic.data) gscale = std::max(gscale, std::abs(g));
    const double floor = std::max(1e-12, 5e-4 * gscale);

    const std::vector<size_t> pixels =
        sample_pixels(seed, scene.depth.size(), n_samples);

    std::vector<double> fd(pixels.size(), 0.0);
    parallel_for(0, static_cast<int>(pixels.size()), [&](int i) {
        const size_t p = pixels[i];
        DepthMap d = scene.depth;
        d.data[p] = scene.depth.data[p] + step_m;
        const SliceCache plus =
            make_slice_cache_frozen(scene.aif, d, focus_dist_m, lens, base.radius);
        d.data[p] = scene.depth.data[p] - step_m;
        const SliceCache minus =
            make_slice_cache_frozen(scene.aif, d, focus_dist_m, lens, base.radius);
        double lp = 0.0, lm = 0.0;
        for (size_t j = 0; j < scene.upstream.data.size(); ++j) {
            lp += scene.upstream.data[j] * plus.out.data[j];
            lm += scene.upstream.data[j] * minus.out.data[j];
        }
        fd[i] = (lp - lm) / (2.0 * step_m);
    });

    RelErrAccum acc;
    for (size_t i = 0; i < pixels.size(); ++i) acc.add(analytic.data[pixels[i]], fd[i], floor);

    FdCheckResult res;
    res.name = "renderer adjoint vs finite differences";
    res.compared = acc.compared;
    res.max_rel_err = acc.max_rel;
    res.tolerance = tolerance;
    res.pass = acc.max_rel <= tolerance;
    return res;
}

FdCheckResult chain_fd_check(const LensConfig& lens, const FocusSchedule& schedule,
                             uint64_t seed, int size, int n_samples, double step_diopters,
                             double tolerance) {
    RandomScene scene = random_scene(seed, size);
    const int n_slices = static_cast<int>(schedule.size());

    // observed stack from a second random depth layout so residuals are nonzero
    std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 17);
    DepthMap observed_depth(size, size);
    for (double& d : observed_depth.data) d = 0.8 + 4.2 * uniform01(rng);
    const FocalStack observed = render_stack(scene.aif, observed_depth, schedule, lens);

    InverseDepthField q(size, size);
    for (size_t i = 0; i < q.data.size(); ++i) q.data[i] = 1.0 / scene.depth.data[i];

    auto loss_of = [&](const InverseDepthField& field,
                       const std::vector<SliceCache>* frozen) -> double {
        DepthMap d(size, size);
        for (size_t i = 0; i < d.data.size(); ++i) d.data[i] = 1.0 / field.data[i];
        FocalStack rendered;
        rendered.schedule = schedule;
        rendered.slices.resize(n_slices);
        for (int s = 0; s < n_slices; ++s) {
            rendered.slices[s] =
                frozen ? make_slice_cache_frozen(scene.aif, d, schedule.distances_m[s], lens,
                                                 (*frozen)[s].radius)
                             .out
                       : render_slice(scene.aif, d, schedule.distances_m[s], lens);
        }
        // L2 keeps the probe smooth; L1's |.| kinks would sit inside the
        // finite-difference stencil. The chain under test is identical.
        return photometric_loss(rendered, observed, LossKind::l2).loss;
    };

    // analytic full-chain gradient
    std::vector<SliceCache> caches(n_slices);
    for (int s = 0; s < n_slices; ++s)
        caches[s] = make_slice_cache(scene.aif, scene.depth, schedule.distances_m[s], lens);
    FocalStack rendered;
    rendered.schedule = schedule;
    for (int s = 0; s < n_slices; ++s) rendered.slices.push_back(caches[s].out);
    const PhotometricResult pr = photometric_loss(rendered, observed, LossKind::l2);

    std::vector<double> grad_q(q.data.size(), 0.0);
    for (int s = 0; s < n_slices; ++s) {
        const DepthGradientMap g =
            adjoint_from_cache(caches[s], scene.aif, scene.depth, lens, pr.grad[s]);
        for (size_t i = 0; i < grad_q.size(); ++i) grad_q[i] += g.data[i];
    }
    for (size_t i = 0; i < grad_q.size(); ++i) grad_q[i] *= -1.0 / (q.data[i] * q.data[i]);

    double gscale = 0.0;
    for (double g : grad_q) gscale = std::max(gscale, std::abs(g));
    const double floor = std::max(1e-14, 5e-4 * gscale);

    const std::vector<size_t> pixels = sample_pixels(seed + 3, q.data.size(), n_samples);
    std::vector<double> fd(pixels.size(), 0.0);
    parallel_for(0, static_cast<int>(pixels.size()), [&](int i) {
        const size_t p = pixels[i];
        InverseDepthField probe = q;
        probe.data[p] = q.data[p] + step_diopters;
        const double lp = loss_of(probe, &caches);
        probe.data[p] = q.data[p] - step_diopters;
        const double lm = loss_of(probe, &caches);
        fd[i] = (lp - lm) / (2.0 * step_diopters);
    });

    RelErrAccum acc;
    for (size_t i = 0; i < pixels.size(); ++i) acc.add(grad_q[pixels[i]], fd[i], floor);

    FdCheckResult res;
    res.name = "end-to-end inverse-depth gradient vs finite differences";
    res.compared = acc.compared;
    res.max_rel_err = acc.max_rel;
    res.tolerance = tolerance;
    res.pass = acc.max_rel <= tolerance;
    return res;
}

}  // namespace fsdepth
