#pragma once

#include <vector>

#include "fsdepth/types.hpp"

namespace fsdepth {

/// Thin-lens camera parameters governing all defocus math.
/// aperture diameter A = focal_length / f_number.
struct LensConfig {
    double focal_length_m = 0.025;
    double f_number = 2.0;
    double pixel_pitch_m = 10e-6;
    double coc_to_sigma = 0.5;    // Gaussian PSF sigma = coc_to_sigma * CoC diameter
    double sigma_floor_px = 0.25; // keeps the PSF finite at the in-focus plane
    int max_kernel_radius = 24;

    double aperture_m() const { return focal_length_m / f_number; }
};

/// Ordered focus distances in meters, strictly increasing.
struct FocusSchedule {
    std::vector<double> distances_m;

    size_t size() const { return distances_m.size(); }
};

void validate_lens(const LensConfig& lens, const DepthRange& range);
void validate_schedule(const FocusSchedule& schedule, const DepthRange& range);

/// Blur scale in pixels per diopter of defocus at the given focus distance:
/// A * f * d_f / (d_f - f) / pixel_pitch. CoC is linear in the diopter offset.
double coc_px_per_diopter(double focus_dist_m, const LensConfig& lens);

/// Circle-of-confusion diameter in pixels for a point at `depth_m` with the
/// lens focused at `focus_dist_m`. Zero exactly at depth == focus distance.
double coc_diameter_px(double depth_m, double focus_dist_m, const LensConfig& lens);

/// d(CoC)/d(depth) in pixels per meter. Returns 0 at the in-focus kink
/// (subgradient convention for |.|).
double coc_depth_gradient(double depth_m, double focus_dist_m, const LensConfig& lens);

/// Depth-of-field interval where CoC <= threshold, solved in diopters:
/// 1/d = 1/d_f +- threshold / coc_px_per_diopter. far_m is +inf past the
/// hyperfocal point.
struct DofLimits {
    double near_m = 0.0;
    double far_m = 0.0;  // may be +infinity
};
DofLimits dof_limits(double focus_dist_m, const LensConfig& lens, double coc_threshold_px);

/// The six focus distances used for all defaults: 0.8, 1, 1.2, 1.6, 2.4, 5 m.
FocusSchedule default_schedule();

/// Audit of how closely adjacent depth-of-field intervals tile the depth range.
struct TilingReport {
    struct Pair {
        int index;             // pair (index, index+1)
        double gap_diopters;   // far_diopter(i) - near_diopter(i+1); positive = gap,
                               // negative = overlap
    };
    std::vector<Pair> pairs;
    double near_limit_m = 0.0;  // near DoF limit of the closest slice
    double far_limit_m = 0.0;   // far DoF limit of the farthest slice (may be +inf)
    bool covers_near = false;   // near_limit_m <= range.min_m
    bool covers_far = false;    // far_limit_m >= range.max_m
};
TilingReport check_schedule_tiling(const FocusSchedule& schedule, const LensConfig& lens,
                                   double coc_threshold_px, const DepthRange& range);

/// CoC threshold that makes the mean DoF half-width equal half the mean
/// diopter gap of the schedule — the best single-lens approximation to
/// adjacent DoFs being in contact.
double contact_coc_threshold(const FocusSchedule& schedule, const LensConfig& lens);

}  // namespace fsdepth
