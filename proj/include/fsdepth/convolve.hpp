#pragma once

#include "fsdepth/types.hpp"

namespace fsdepth {

/// Border policy for convolve2d. Edge replication is the only mode:
/// it avoids dark halos in blurs and spurious Laplacian response at frame edges.
enum class Border { replicate };

/// Dense 2-D convolution with replicate border. Output has the input's
/// dimensions. Deterministic bit-identical results for identical inputs,
/// independent of thread count.
Image convolve2d(const Image& img, const Kernel& k, Border border = Border::replicate);

/// radius 0, single weight 1.
Kernel identity_kernel();

/// Uniform (2r+1)^2 mean filter; weights sum to 1.
Kernel box_kernel(int radius);

/// Truncated sampled Gaussian, radius ceil(3*sigma) unless given;
/// weights normalized to sum 1.
Kernel gaussian_kernel(double sigma, int radius = -1);

/// 4-neighbor 3x3 Laplacian stencil [0 1 0; 1 -4 1; 0 1 0]; weights sum to 0.
Kernel laplacian3_kernel();

/// Checks the Kernel invariants: finite weights and, when `unit_sum`
/// (smoothing kernels), sum within 1e-9 of 1; for `zero_sum` (Laplacian),
/// sum within 1e-12 of 0.
void validate_kernel(const Kernel& k, bool unit_sum, bool zero_sum);

}  // namespace fsdepth
