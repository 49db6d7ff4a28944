#include "fsdepth/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsdepth/error.hpp"
#include "fsdepth/focus.hpp"
#include "fsdepth/parallel.hpp"

namespace fsdepth {

AdamState AdamState::create(size_t n, double lr) {
    AdamState s;
    s.learning_rate = lr;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    return s;
}

PhotometricResult photometric_loss(const FocalStack& rendered, const FocalStack& observed,
                                   LossKind kind) {
    validate_stack(rendered);
    validate_stack(observed);
    if (rendered.schedule.distances_m != observed.schedule.distances_m)
        throw DimensionError("photometric_loss: stacks have different focus schedules");
    if (!rendered.slices.front().same_shape(observed.slices.front()))
        throw DimensionError("photometric_loss: stacks have different slice dimensions");

    const size_t per_slice = rendered.slices.front().size();
    const double n = static_cast<double>(per_slice * rendered.size());
    PhotometricResult res;
    res.grad.reserve(rendered.size());
    for (size_t s = 0; s < rendered.size(); ++s) {
        const Image& r = rendered.slices[s];
        const Image& o = observed.slices[s];
        Image g(r.height, r.width, r.channels);
        for (size_t i = 0; i < per_slice; ++i) {
            const double d = r.data[i] - o.data[i];
            if (kind == LossKind::l1) {
                res.loss += std::abs(d);
                g.data[i] = d > 0.0 ? 1.0 / n : (d < 0.0 ? -1.0 / n : 0.0);
            } else {
                res.loss += d * d;
                g.data[i] = 2.0 * d / n;
            }
        }
        res.grad.push_back(std::move(g));
    }
    res.loss /= n;
    return res;
}

std::vector<double> smoothness_grad(const InverseDepthField& q, const Image& aif, double lambda) {
    if (q.height != aif.height || q.width != aif.width)
        throw DimensionError("smoothness_grad: field and image dimensions differ");
    std::vector<double> grad(q.data.size(), 0.0);
    if (lambda == 0.0) return grad;

    const Image gray = luma(aif);
    const int h = q.height, w = q.width;
    auto edge = [&](double gi) { return std::exp(-std::abs(gi)); };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const size_t p = static_cast<size_t>(y) * w + x;
            if (x + 1 < w) {
                const double dq = q.data[p + 1] - q.data[p];
                const double g = lambda * (dq > 0.0 ? 1.0 : (dq < 0.0 ? -1.0 : 0.0)) *
                                 edge(gray.data[p + 1] - gray.data[p]);
                grad[p + 1] += g;
                grad[p] -= g;
            }
            if (y + 1 < h) {
                const size_t pj = p + w;
                const double dq = q.data[pj] - q.data[p];
                const double g = lambda * (dq > 0.0 ? 1.0 : (dq < 0.0 ? -1.0 : 0.0)) *
                                 edge(gray.data[pj] - gray.data[p]);
                grad[pj] += g;
                grad[p] -= g;
            }
        }
    }
    return grad;
}

void adam_step(AdamState& state, InverseDepthField& params, const std::vector<double>& grad,
               double clamp_lo, double clamp_hi) {
    if (grad.size() != params.data.size() || state.m.size() != params.data.size())
        throw DimensionError("adam_step: gradient/state dimension mismatch");
    for (size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            const int y = static_cast<int>(i) / params.width;
            const int x = static_cast<int>(i) % params.width;
            throw NumericError("adam_step: non-finite gradient at pixel (" + std::to_string(y) +
                               ", " + std::to_string(x) + ")");
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, state.step);
    const double bc2 = 1.0 - std::pow(state.beta2, state.step);
    for (size_t i = 0; i < grad.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        double p = params.data[i] - state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        params.data[i] = std::clamp(p, clamp_lo, clamp_hi);
    }
}

namespace {

DepthMap depth_from_q(const InverseDepthField& q) {
    DepthMap d(q.height, q.width);
    for (size_t i = 0; i < q.data.size(); ++i) d.data[i] = 1.0 / q.data[i];
    return d;
}

double interior_rmse(const DepthMap& pred, const DepthMap& gt, int margin) {
    double sse = 0.0;
    long long count = 0;
    for (int y = margin; y < pred.height - margin; ++y)
        for (int x = margin; x < pred.width - margin; ++x) {
            const double d = pred.at(y, x) - gt.at(y, x);
            sse += d * d;
            ++count;
        }
    return count > 0 ? std::sqrt(sse / count) : -1.0;
}

InverseDepthField initial_field(const FocalStack& observed, const LensConfig& lens,
                                const Init& init, const EstimateOptions& opts) {
    const Image& first = observed.slices.front();
    const int h = first.height, w = first.width;
    const double q_lo = 1.0 / opts.range.max_m;
    const double q_hi = 1.0 / opts.range.min_m;
    InverseDepthField q(h, w);

    auto from_depth = [&](const DepthMap& d) {
        if (d.height != h || d.width != w)
            throw DimensionError("estimate: init depth map dimensions differ from the stack");
        for (size_t i = 0; i < q.data.size(); ++i)
            q.data[i] = std::clamp(1.0 / d.data[i], q_lo, q_hi);
    };

    switch (init.kind) {
        case Init::Kind::constant: {
            if (!(init.constant_depth_m >= opts.range.min_m &&
                  init.constant_depth_m <= opts.range.max_m))
                throw DomainError("estimate: constant init depth outside the depth range");
            std::fill(q.data.begin(), q.data.end(), 1.0 / init.constant_depth_m);
            break;
        }
        case Init::Kind::dff: {
            const FocusVolume fv = focus_measure(observed, opts.fm_window_sigma);
            from_depth(dff_argmax_depth(fv, observed.schedule));
            break;
        }
        case Init::Kind::provided:
            from_depth(init.provided);
            break;
    }
    (void)lens;
    return q;
}

}  // namespace

EstimateResult estimate_depth(const FocalStack& observed, const Image& aif,
                              const LensConfig& lens, const LossConfig& cfg, const Init& init,
                              const EstimateOptions& opts) {
    validate_stack(observed);
    if (!aif.same_shape(observed.slices.front()))
        throw DimensionError("estimate: all-in-focus image does not match the stack");
    if (cfg.iterations < 0) throw DomainError("estimate: iteration budget must be >= 0");
    if (!(cfg.learning_rate > 0.0)) throw DomainError("estimate: learning rate must be > 0");

    const int n_slices = static_cast<int>(observed.size());
    const double q_lo = 1.0 / opts.range.max_m;
    const double q_hi = 1.0 / opts.range.min_m;

    InverseDepthField q = initial_field(observed, lens, init, opts);
    AdamState adam = AdamState::create(q.data.size(), cfg.learning_rate);

    EstimateResult result;
    result.trace.reserve(cfg.iterations);

    std::vector<SliceCache> caches(n_slices);
    std::vector<DepthGradientMap> slice_grads(n_slices);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const DepthMap depth = depth_from_q(q);

        parallel_for(0, n_slices, [&](int s) {
            caches[s] = make_slice_cache(aif, depth, observed.schedule.distances_m[s], lens);
        });

        FocalStack rendered;
        rendered.schedule = observed.schedule;
        rendered.slices.reserve(n_slices);
        for (int s = 0; s < n_slices; ++s) rendered.slices.push_back(caches[s].out);

        PhotometricResult pr = photometric_loss(rendered, observed, cfg.kind);
        if (!std::isfinite(pr.loss))
            throw EstimateAborted("estimate: non-finite loss at iteration " + std::to_string(iter),
                                  result.trace);

        parallel_for(0, n_slices, [&](int s) {
            slice_grads[s] = adjoint_from_cache(caches[s], aif, depth, lens, pr.grad[s]);
        });

        // dL/dq = sum_s dL/ddepth * ddepth/dq, with depth = 1/q -> -1/q^2
        std::vector<double> grad_q(q.data.size(), 0.0);
        for (int s = 0; s < n_slices; ++s)
            for (size_t i = 0; i < grad_q.size(); ++i) grad_q[i] += slice_grads[s].data[i];
        for (size_t i = 0; i < grad_q.size(); ++i)
            grad_q[i] *= -1.0 / (q.data[i] * q.data[i]);

        if (cfg.smoothness_lambda > 0.0) {
            const std::vector<double> sg = smoothness_grad(q, aif, cfg.smoothness_lambda);
            for (size_t i = 0; i < grad_q.size(); ++i) grad_q[i] += sg[i];
        }

        TracePoint tp;
        tp.iteration = iter;
        tp.loss = pr.loss;
        if (opts.ground_truth)
            tp.rmse = interior_rmse(depth, *opts.ground_truth, opts.trace_margin);
        result.trace.push_back(tp);

        adam_step(adam, q, grad_q, q_lo, q_hi);

        // relative loss decrease over a 20-iteration window; tolerance <= 0
        // disables the early stop
        const int lag = 20;
        if (cfg.tolerance > 0.0 && iter >= lag) {
            const double past = result.trace[iter - lag].loss;
            const double rel = (past - pr.loss) / std::max(std::abs(past), 1e-300);
            if (rel < cfg.tolerance) break;
        }
    }

    result.depth = depth_from_q(q);
    return result;
}

}  // namespace fsdepth
