#pragma once

#include "fsdepth/render.hpp"
#include "fsdepth/types.hpp"

namespace fsdepth {

/// Per-pixel per-slice sharpness, slice-major planes.
struct FocusVolume {
    int height = 0;
    int width = 0;
    int n_slices = 0;
    std::vector<double> data;

    double at(int s, int y, int x) const {
        return data[(static_cast<size_t>(s) * height + y) * width + x];
    }
    const double* plane(int s) const {
        return data.data() + static_cast<size_t>(s) * height * width;
    }
};

/// Smoothed absolute Laplacian response per slice. Multi-channel slices are
/// reduced to luma first. window_sigma = 0 skips the smoothing pass.
FocusVolume focus_measure(const FocalStack& stack, double window_sigma);

enum class AifMode { argmax, softmax };

/// Per-pixel sharpest-slice composite. argmax ties break toward the lower
/// slice index; softmax blends with weights softmax_s(fv/tau).
Image composite_aif(const FocalStack& stack, const FocusVolume& fv, AifMode mode,
                    double softmax_tau = 1.0);

/// Classical depth from focus: depth(x) = schedule[argmax_s fv(x,s)],
/// ties toward the lower index.
DepthMap dff_argmax_depth(const FocusVolume& fv, const FocusSchedule& schedule);

}  // namespace fsdepth
