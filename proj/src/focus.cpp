#include "fsdepth/focus.hpp"

#include <cmath>

#include "fsdepth/convolve.hpp"
#include "fsdepth/error.hpp"
#include "fsdepth/parallel.hpp"

namespace fsdepth {

FocusVolume focus_measure(const FocalStack& stack, double window_sigma) {
    validate_stack(stack);
    if (window_sigma < 0.0) throw DomainError("focus_measure: window_sigma must be >= 0");

    const Image& first = stack.slices.front();
    FocusVolume fv;
    fv.height = first.height;
    fv.width = first.width;
    fv.n_slices = static_cast<int>(stack.size());
    fv.data.resize(static_cast<size_t>(fv.n_slices) * fv.height * fv.width);

    const Kernel lap = laplacian3_kernel();
    parallel_for(0, fv.n_slices, [&](int s) {
        Image response = convolve2d(luma(stack.slices[s]), lap);
        for (double& v : response.data) v = std::abs(v);
        if (window_sigma > 0.0) response = convolve2d(response, gaussian_kernel(window_sigma));
        double* plane = fv.data.data() + static_cast<size_t>(s) * fv.height * fv.width;
        for (size_t i = 0; i < response.data.size(); ++i) plane[i] = response.data[i];
    });
    return fv;
}

namespace {

void require_match(const FocalStack& stack, const FocusVolume& fv) {
    const Image& first = stack.slices.front();
    if (fv.height != first.height || fv.width != first.width ||
        fv.n_slices != static_cast<int>(stack.size()))
        throw DimensionError("focus volume does not match the stack dimensions");
}

int argmax_slice(const FocusVolume& fv, size_t pixel) {
    const size_t plane = static_cast<size_t>(fv.height) * fv.width;
    int best = 0;
    double best_v = fv.data[pixel];
    for (int s = 1; s < fv.n_slices; ++s) {
        const double v = fv.data[static_cast<size_t>(s) * plane + pixel];
        if (v > best_v) {  // strict: ties keep the lower slice index
            best_v = v;
            best = s;
        }
    }
    return best;
}

}  // namespace

Image composite_aif(const FocalStack& stack, const FocusVolume& fv, AifMode mode,
                    double softmax_tau) {
    validate_stack(stack);
    require_match(stack, fv);
    const Image& first = stack.slices.front();
    const int ch = first.channels;
    const size_t npx = static_cast<size_t>(first.height) * first.width;
    const size_t plane = npx;
    Image out(first.height, first.width, ch);

    if (mode == AifMode::argmax) {
        for (size_t p = 0; p < npx; ++p) {
            const int s = argmax_slice(fv, p);
            for (int k = 0; k < ch; ++k) out.data[p * ch + k] = stack.slices[s].data[p * ch + k];
        }
        return out;
    }

    if (!(softmax_tau > 0.0)) throw DomainError("composite_aif: softmax tau must be > 0");
    for (size_t p = 0; p < npx; ++p) {
        double vmax = fv.data[p];
        for (int s = 1; s < fv.n_slices; ++s)
            vmax = std::max(vmax, fv.data[static_cast<size_t>(s) * plane + p]);
        double wsum = 0.0;
        for (int k = 0; k < ch; ++k) out.data[p * ch + k] = 0.0;
        for (int s = 0; s < fv.n_slices; ++s) {
            const double w =
                std::exp((fv.data[static_cast<size_t>(s) * plane + p] - vmax) / softmax_tau);
            wsum += w;
            for (int k = 0; k < ch; ++k)
                out.data[p * ch + k] += w * stack.slices[s].data[p * ch + k];
        }
        for (int k = 0; k < ch; ++k) out.data[p * ch + k] /= wsum;
    }
    return out;
}

DepthMap dff_argmax_depth(const FocusVolume& fv, const FocusSchedule& schedule) {
    if (static_cast<size_t>(fv.n_slices) != schedule.size())
        throw DimensionError("dff: focus volume slice count does not match schedule");
    DepthMap depth(fv.height, fv.width);
    const size_t npx = static_cast<size_t>(fv.height) * fv.width;
    for (size_t p = 0; p < npx; ++p)
        depth.data[p] = schedule.distances_m[argmax_slice(fv, p)];
    return depth;
}

}  // namespace fsdepth
