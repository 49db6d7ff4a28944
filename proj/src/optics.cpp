#include "fsdepth/optics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "fsdepth/error.hpp"

namespace fsdepth {

void validate_lens(const LensConfig& lens, const DepthRange& range) {
    if (!(lens.focal_length_m > 0.0)) throw DomainError("lens: focal_length must be > 0");
    if (!(lens.f_number > 0.0)) throw DomainError("lens: f_number must be > 0");
    if (!(lens.pixel_pitch_m > 0.0)) throw DomainError("lens: pixel_pitch must be > 0");
    if (!(lens.focal_length_m < range.min_m))
        throw DomainError("lens: focal_length must be shorter than the nearest scene depth");
    if (!(lens.coc_to_sigma > 0.0 && lens.coc_to_sigma <= 1.0))
        throw DomainError("lens: coc_to_sigma must be in (0, 1]");
    if (!(lens.sigma_floor_px > 0.0)) throw DomainError("lens: sigma_floor must be > 0");
    if (lens.max_kernel_radius < 1) throw DomainError("lens: max_kernel_radius must be >= 1");
}

void validate_schedule(const FocusSchedule& schedule, const DepthRange& range) {
    if (schedule.distances_m.empty()) throw DomainError("schedule: needs at least one distance");
    double prev = 0.0;
    for (double d : schedule.distances_m) {
        if (!(d >= range.min_m && d <= range.max_m))
            throw DomainError("schedule: focus distance " + std::to_string(d) +
                              " outside depth range");
        if (!(d > prev)) throw DomainError("schedule: distances must be strictly increasing");
        prev = d;
    }
}

double coc_px_per_diopter(double focus_dist_m, const LensConfig& lens) {
    const double f = lens.focal_length_m;
    if (!(focus_dist_m > f))
        throw DomainError("optics: focus distance must exceed the focal length");
    return lens.aperture_m() * f * focus_dist_m / (focus_dist_m - f) / lens.pixel_pitch_m;
}

double coc_diameter_px(double depth_m, double focus_dist_m, const LensConfig& lens) {
    const double f = lens.focal_length_m;
    if (!(depth_m > f)) throw DomainError("optics: depth must exceed the focal length");
    const double scale = coc_px_per_diopter(focus_dist_m, lens);
    return scale * std::abs(1.0 / depth_m - 1.0 / focus_dist_m);
}

double coc_depth_gradient(double depth_m, double focus_dist_m, const LensConfig& lens) {
    const double f = lens.focal_length_m;
    if (!(depth_m > f)) throw DomainError("optics: depth must exceed the focal length");
    const double scale = coc_px_per_diopter(focus_dist_m, lens);
    const double offset = 1.0 / depth_m - 1.0 / focus_dist_m;
    if (offset == 0.0) return 0.0;  // subgradient at the |.| kink
    const double sign = offset > 0.0 ? 1.0 : -1.0;
    return scale * sign * (-1.0 / (depth_m * depth_m));
}

DofLimits dof_limits(double focus_dist_m, const LensConfig& lens, double coc_threshold_px) {
    if (!(coc_threshold_px > 0.0)) throw DomainError("dof_limits: coc_threshold must be > 0");
    const double half_width = coc_threshold_px / coc_px_per_diopter(focus_dist_m, lens);
    DofLimits out;
    out.near_m = 1.0 / (1.0 / focus_dist_m + half_width);
    const double far_diopter = 1.0 / focus_dist_m - half_width;
    out.far_m = far_diopter <= 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / far_diopter;
    return out;
}

FocusSchedule default_schedule() {
    return FocusSchedule{{0.8, 1.0, 1.2, 1.6, 2.4, 5.0}};
}

TilingReport check_schedule_tiling(const FocusSchedule& schedule, const LensConfig& lens,
                                   double coc_threshold_px, const DepthRange& range) {
    if (schedule.size() < 2) throw DomainError("tiling audit: schedule needs >= 2 distances");
    TilingReport report;
    const size_t n = schedule.size();
    for (size_t i = 0; i + 1 < n; ++i) {
        const double d_i = schedule.distances_m[i];
        const double d_next = schedule.distances_m[i + 1];
        // raw diopter limits; the far side may go negative past the hyperfocal point
        const double far_diopter_i =
            1.0 / d_i - coc_threshold_px / coc_px_per_diopter(d_i, lens);
        const double near_diopter_next =
            1.0 / d_next + coc_threshold_px / coc_px_per_diopter(d_next, lens);
        report.pairs.push_back({static_cast<int>(i), far_diopter_i - near_diopter_next});
    }
    report.near_limit_m = dof_limits(schedule.distances_m.front(), lens, coc_threshold_px).near_m;
    report.far_limit_m = dof_limits(schedule.distances_m.back(), lens, coc_threshold_px).far_m;
    report.covers_near = report.near_limit_m <= range.min_m;
    report.covers_far = report.far_limit_m >= range.max_m;
    return report;
}

double contact_coc_threshold(const FocusSchedule& schedule, const LensConfig& lens) {
    if (schedule.size() < 2)
        throw DomainError("contact_coc_threshold: schedule needs >= 2 distances");
    const size_t n = schedule.size();
    double mean_gap = 0.0;
    for (size_t i = 0; i + 1 < n; ++i)
        mean_gap += 1.0 / schedule.distances_m[i] - 1.0 / schedule.distances_m[i + 1];
    mean_gap /= static_cast<double>(n - 1);
    double mean_scale = 0.0;
    for (double d : schedule.distances_m) mean_scale += coc_px_per_diopter(d, lens);
    mean_scale /= static_cast<double>(n);
    return 0.5 * mean_gap * mean_scale;
}

}  // namespace fsdepth
