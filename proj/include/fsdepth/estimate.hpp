#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fsdepth/error.hpp"
#include "fsdepth/render.hpp"
#include "fsdepth/types.hpp"

namespace fsdepth {

/// Per-pixel inverse depth in diopters (1/m). CoC — hence blur — is linear
/// in diopters, which keeps gradient conditioning uniform over the range.
struct InverseDepthField {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    InverseDepthField() = default;
    InverseDepthField(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}
};

enum class LossKind { l1, l2 };

struct LossConfig {
    LossKind kind = LossKind::l1;
    double smoothness_lambda = 0.0;
    int iterations = 500;
    double learning_rate = 0.02;  // diopters per step
    double tolerance = 1e-5;      // stop when the relative loss decrease over
                                  // 20 iterations falls below this; <= 0
                                  // disables the early stop
};

/// Adaptive-moments optimizer state (bias-corrected first/second moments).
struct AdamState {
    int step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 0.02;
    std::vector<double> m;  // first moment, dimension-matched to the parameters
    std::vector<double> v;  // second moment

    static AdamState create(size_t n, double lr);
};

/// Mean elementwise photometric error between two stacks sharing a schedule.
/// Returns the scalar loss and dLoss/drendered per slice.
struct PhotometricResult {
    double loss = 0.0;
    std::vector<Image> grad;  // one per slice
};
PhotometricResult photometric_loss(const FocalStack& rendered, const FocalStack& observed,
                                   LossKind kind);

/// Gradient of lambda * sum |dq| * exp(-|dI|) (edge-aware total variation on
/// inverse depth, over horizontal and vertical forward differences).
/// lambda = 0 yields a zero field.
std::vector<double> smoothness_grad(const InverseDepthField& q, const Image& aif, double lambda);

/// One Adam update on `params`, then an elementwise clamp to [lo, hi].
/// Throws NumericError naming the first non-finite gradient coordinate.
void adam_step(AdamState& state, InverseDepthField& params, const std::vector<double>& grad,
               double clamp_lo, double clamp_hi);

struct Init {
    enum class Kind { constant, dff, provided } kind = Kind::constant;
    double constant_depth_m = 2.0;
    DepthMap provided;

    static Init constant(double depth_m) { return {Kind::constant, depth_m, {}}; }
    static Init dff() { return {Kind::dff, 0.0, {}}; }
    static Init provided_map(DepthMap d) { return {Kind::provided, 0.0, std::move(d)}; }
};

struct TracePoint {
    int iteration = 0;
    double loss = 0.0;
    double rmse = -1.0;  // interior RMSE against ground truth; -1 when unavailable
};

struct EstimateOptions {
    DepthRange range;
    double fm_window_sigma = 2.0;         // focus-measure window for dff init
    std::optional<DepthMap> ground_truth; // enables the rmse column of the trace
    int trace_margin = 0;                 // interior margin for that rmse
};

struct EstimateResult {
    DepthMap depth;
    std::vector<TracePoint> trace;
};

/// Raised when the loss turns non-finite; carries the trace up to the abort.
class EstimateAborted : public NumericError {
public:
    EstimateAborted(const std::string& message, std::vector<TracePoint> trace_so_far)
        : NumericError(message), trace(std::move(trace_so_far)) {}
    std::vector<TracePoint> trace;
};

/// The full unsupervised loop: inverse depth -> render stack -> photometric
/// loss -> renderer adjoint -> chain to diopters -> Adam, until the budget
/// or the tolerance-based stop. The loss trace is not guaranteed monotone.
EstimateResult estimate_depth(const FocalStack& observed, const Image& aif,
                              const LensConfig& lens, const LossConfig& cfg, const Init& init,
                              const EstimateOptions& opts = {});

}  // namespace fsdepth
