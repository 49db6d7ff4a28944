#pragma once

#include <cstdint>
#include <string>

#include "fsdepth/estimate.hpp"
#include "fsdepth/optics.hpp"
#include "fsdepth/render.hpp"

namespace fsdepth {

/// Outcome of one finite-difference comparison sweep.
struct FdCheckResult {
    std::string name;
    int compared = 0;        // pixels with a well-defined relative error
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

/// Compares render_slice_adjoint against central finite differences of the
/// scalar L = sum(upstream * out), perturbing one pixel's depth at a time
/// with the truncation radii frozen at the base forward pass.
/// Scene: seeded noise texture, per-pixel random depths in [0.8, 5] m.
FdCheckResult adjoint_fd_check(const LensConfig& lens, double focus_dist_m, uint64_t seed,
                               int size, int n_samples, double step_m = 1e-5,
                               double tolerance = 1e-4);

/// Compares the full-chain dLoss/d(inverse depth) — renderer adjoints plus
/// the diopter chain rule, smoothness disabled — against central finite
/// differences of the photometric loss, perturbing q one pixel at a time.
FdCheckResult chain_fd_check(const LensConfig& lens, const FocusSchedule& schedule,
                             uint64_t seed, int size, int n_samples,
                             double step_diopters = 1e-5, double tolerance = 1e-4);

}  // namespace fsdepth
