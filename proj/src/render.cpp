#include "fsdepth/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fsdepth/error.hpp"
#include "fsdepth/parallel.hpp"

namespace fsdepth {

void validate_stack(const FocalStack& stack) {
    if (stack.slices.empty()) throw DimensionError("focal stack: needs at least one slice");
    if (stack.slices.size() != stack.schedule.size())
        throw DimensionError("focal stack: slice count does not match schedule length");
    for (const Image& s : stack.slices)
        if (!s.same_shape(stack.slices.front()))
            throw DimensionError("focal stack: slices must be dimension-identical");
}

double sigma_at(double depth_m, double focus_dist_m, const LensConfig& lens) {
    return std::max(lens.sigma_floor_px,
                    lens.coc_to_sigma * coc_diameter_px(depth_m, focus_dist_m, lens));
}

namespace {

void require_match(const Image& aif, const DepthMap& depth) {
    if (aif.height != depth.height || aif.width != depth.width)
        throw DimensionError("render: image and depth map dimensions differ");
}

// sigma, radius and the 1-D weight table exp(-d^2 / (2 sigma^2)), d = 0..r.
void fill_fields(SliceCache& c, const DepthMap& depth, const LensConfig& lens,
                 const std::vector<int>* frozen_radius) {
    const size_t n = depth.size();
    c.sigma.resize(n);
    c.radius.resize(n);
    c.scatter_cost = 0;
    int rmax = 1;
    for (size_t p = 0; p < n; ++p) {
        const double s = sigma_at(depth.data[p], c.focus_dist_m, lens);
        int r;
        if (frozen_radius) {
            r = (*frozen_radius)[p];
        } else {
            r = static_cast<int>(std::ceil(3.0 * s));
            r = std::clamp(r, 1, lens.max_kernel_radius);
        }
        c.sigma[p] = s;
        c.radius[p] = r;
        rmax = std::max(rmax, r);
        c.scatter_cost += (2 * r + 1) * (2 * r + 1);
    }
    c.lut_stride = rmax + 1;
    c.lut.resize(n * static_cast<size_t>(c.lut_stride));
    for (size_t p = 0; p < n; ++p) {
        const double inv2s2 = 1.0 / (2.0 * c.sigma[p] * c.sigma[p]);
        double* row = &c.lut[p * c.lut_stride];
        for (int d = 0; d <= c.radius[p]; ++d) row[d] = std::exp(-(d * d) * inv2s2);
    }
}

// Scatter pass: each source pixel deposits w * value into its own window.
// Runs single-threaded per slice; parallelism lives at the slice level.
void scatter_forward(SliceCache& c, const Image& aif) {
    const int h = c.height, w = c.width, ch = c.channels;
    std::vector<double> num(static_cast<size_t>(h) * w * ch, 0.0);
    std::vector<double> den(static_cast<size_t>(h) * w, 0.0);
    std::vector<double> wrow(2 * (c.lut_stride - 1) + 1);

    size_t p = 0;
    for (int ry = 0; ry < h; ++ry) {
        for (int cx = 0; cx < w; ++cx, ++p) {
            const int r = c.radius[p];
            const double* lut = &c.lut[p * c.lut_stride];
            double* mid = wrow.data() + r;
            for (int d = 0; d <= r; ++d) {
                mid[d] = lut[d];
                mid[-d] = lut[d];
            }
            const int dylo = std::max(-r, -ry), dyhi = std::min(r, h - 1 - ry);
            const int dxlo = std::max(-r, -cx), dxhi = std::min(r, w - 1 - cx);
            const int span = dxhi - dxlo + 1;
            const double* wx = mid + dxlo;
            if (ch == 1) {
                const double a = aif.data[p];
                for (int dy = dylo; dy <= dyhi; ++dy) {
                    const double wy = lut[dy < 0 ? -dy : dy];
                    const size_t base = static_cast<size_t>(ry + dy) * w + cx + dxlo;
                    double* nrow = num.data() + base;
                    double* drow = den.data() + base;
                    const double wa = wy * a;
                    for (int j = 0; j < span; ++j) {
                        nrow[j] += wa * wx[j];
                        drow[j] += wy * wx[j];
                    }
                }
            } else {
                const double* a = &aif.data[p * ch];
                for (int dy = dylo; dy <= dyhi; ++dy) {
                    const double wy = lut[dy < 0 ? -dy : dy];
                    const size_t base = static_cast<size_t>(ry + dy) * w + cx + dxlo;
                    double* nrow = num.data() + base * ch;
                    double* drow = den.data() + base;
                    for (int j = 0; j < span; ++j) {
                        const double wgt = wy * wx[j];
                        drow[j] += wgt;
                        for (int k = 0; k < ch; ++k) nrow[j * ch + k] += wgt * a[k];
                    }
                }
            }
        }
    }

    c.out = Image(h, w, ch);
    c.weight_sum = std::move(den);
    const size_t npx = static_cast<size_t>(h) * w;
    for (size_t i = 0; i < npx; ++i) {
        const double inv = 1.0 / c.weight_sum[i];  // self weight 1 keeps this >= 1
        for (int k = 0; k < ch; ++k) c.out.data[i * ch + k] = num[i * ch + k] * inv;
    }
}

SliceCache build_cache(const Image& aif, const DepthMap& depth, double focus_dist_m,
                       const LensConfig& lens, const std::vector<int>* frozen_radius) {
    require_match(aif, depth);
    SliceCache c;
    c.height = aif.height;
    c.width = aif.width;
    c.channels = aif.channels;
    c.focus_dist_m = focus_dist_m;
    fill_fields(c, depth, lens, frozen_radius);
    scatter_forward(c, aif);
    return c;
}

}  // namespace

SliceCache make_slice_cache(const Image& aif, const DepthMap& depth, double focus_dist_m,
                            const LensConfig& lens) {
    return build_cache(aif, depth, focus_dist_m, lens, nullptr);
}

SliceCache make_slice_cache_frozen(const Image& aif, const DepthMap& depth, double focus_dist_m,
                                   const LensConfig& lens, const std::vector<int>& radius) {
    if (radius.size() != depth.size())
        throw DimensionError("render: frozen radius field dimension mismatch");
    return build_cache(aif, depth, focus_dist_m, lens, &radius);
}

Image render_slice(const Image& aif, const DepthMap& depth, double focus_dist_m,
                   const LensConfig& lens) {
    return make_slice_cache(aif, depth, focus_dist_m, lens).out;
}

FocalStack render_stack(const Image& aif, const DepthMap& depth, const FocusSchedule& schedule,
                        const LensConfig& lens) {
    require_match(aif, depth);
    if (schedule.distances_m.empty()) throw DomainError("render_stack: empty schedule");
    FocalStack stack;
    stack.schedule = schedule;
    stack.slices.resize(schedule.size());
    parallel_for(0, static_cast<int>(schedule.size()), [&](int s) {
        stack.slices[s] = render_slice(aif, depth, schedule.distances_m[s], lens);
    });
    return stack;
}

DepthGradientMap adjoint_from_cache(const SliceCache& cache, const Image& aif,
                                    const DepthMap& depth, const LensConfig& lens,
                                    const Image& upstream) {
    require_match(aif, depth);
    if (upstream.height != cache.height || upstream.width != cache.width ||
        upstream.channels != cache.channels)
        throw DimensionError("adjoint: upstream gradient dimension mismatch");

    const int h = cache.height, w = cache.width, ch = cache.channels;
    const size_t npx = static_cast<size_t>(h) * w;

    // Per-output-pixel terms of dout(x)/dsigma(y) = dw/dsigma (a(y)-out(x)) / D(x):
    //   U_c(x) = up_c(x)/D(x),  V(x) = sum_c up_c(x) out_c(x) / D(x)
    std::vector<double> U(npx * ch), V(npx, 0.0);
    for (size_t i = 0; i < npx; ++i) {
        const double inv = 1.0 / cache.weight_sum[i];
        double v = 0.0;
        for (int k = 0; k < ch; ++k) {
            const double u = upstream.data[i * ch + k] * inv;
            U[i * ch + k] = u;
            v += upstream.data[i * ch + k] * cache.out.data[i * ch + k];
        }
        V[i] = v * inv;
    }

    DepthGradientMap grad(h, w);
    std::vector<double> wbuf(2 * (cache.lut_stride - 1) + 1);
    auto row_range = [&](int y0, int y1) {
        std::vector<double> wrow = wbuf;  // thread-private mirrored weight row
        for (int ry = y0; ry < y1; ++ry) {
            for (int cx = 0; cx < w; ++cx) {
                const size_t p = static_cast<size_t>(ry) * w + cx;
                const double s = cache.sigma[p];
                if (s <= lens.sigma_floor_px) continue;  // dsigma/dcoc = 0 at the floor
                const int r = cache.radius[p];
                const double* lut = &cache.lut[p * cache.lut_stride];
                double* mid = wrow.data() + r;
                for (int d = 0; d <= r; ++d) {
                    mid[d] = lut[d];
                    mid[-d] = lut[d];
                }
                const int dylo = std::max(-r, -ry), dyhi = std::min(r, h - 1 - ry);
                const int dxlo = std::max(-r, -cx), dxhi = std::min(r, w - 1 - cx);
                const int span = dxhi - dxlo + 1;
                const double* wx = mid + dxlo;
                double t = 0.0;
                if (ch == 1) {
                    const double a = aif.data[p];
                    for (int dy = dylo; dy <= dyhi; ++dy) {
                        const double wy = lut[dy < 0 ? -dy : dy];
                        const double dy2 = static_cast<double>(dy) * dy;
                        const size_t base = static_cast<size_t>(ry + dy) * w + cx + dxlo;
                        const double* urow = U.data() + base;
                        const double* vrow = V.data() + base;
                        double acc0 = 0.0, acc2 = 0.0;
                        for (int j = 0; j < span; ++j) {
                            const double dx = static_cast<double>(dxlo + j);
                            const double ws = wx[j] * (a * urow[j] - vrow[j]);
                            acc0 += ws;
                            acc2 += ws * dx * dx;
                        }
                        t += wy * (acc2 + dy2 * acc0);
                    }
                } else {
                    const double* a = &aif.data[p * ch];
                    for (int dy = dylo; dy <= dyhi; ++dy) {
                        const double wy = lut[dy < 0 ? -dy : dy];
                        const double dy2 = static_cast<double>(dy) * dy;
                        const size_t base = static_cast<size_t>(ry + dy) * w + cx + dxlo;
                        double acc0 = 0.0, acc2 = 0.0;
                        for (int j = 0; j < span; ++j) {
                            const size_t i = base + j;
                            double sum = -V[i];
                            for (int k = 0; k < ch; ++k) sum += a[k] * U[i * ch + k];
                            const double dx = static_cast<double>(dxlo + j);
                            const double ws = wx[j] * sum;
                            acc0 += ws;
                            acc2 += ws * dx * dx;
                        }
                        t += wy * (acc2 + dy2 * acc0);
                    }
                }
                // dL/dsigma(y) = t / sigma^3; chain through sigma = k * coc and coc(depth)
                const double dsigma = t / (s * s * s);
                grad.data[p] = dsigma * lens.coc_to_sigma *
                               coc_depth_gradient(depth.data[p], cache.focus_dist_m, lens);
            }
        }
    };
    parallel_chunks(0, h, row_range);
    return grad;
}

DepthGradientMap render_slice_adjoint(const Image& aif, const DepthMap& depth,
                                      double focus_dist_m, const LensConfig& lens,
                                      const Image& upstream) {
    SliceCache cache = make_slice_cache(aif, depth, focus_dist_m, lens);
    return adjoint_from_cache(cache, aif, depth, lens, upstream);
}

void save_stack(const std::string& dir, const FocalStack& stack, ImageFormat format) {
    validate_stack(stack);
    std::filesystem::create_directories(dir);
    const char* ext = format == ImageFormat::pfm ? "pfm" : "png";
    for (size_t s = 0; s < stack.size(); ++s) {
        char name[64];
        std::snprintf(name, sizeof name, "slice_%02zu.%s", s, ext);
        save_image((std::filesystem::path(dir) / name).string(), stack.slices[s], format);
    }
    std::ofstream csv(std::filesystem::path(dir) / "schedule.csv");
    if (!csv) throw IoError(IoError::Kind::write_failed, "cannot write schedule.csv in " + dir);
    csv << "index,focus_m\n";
    for (size_t s = 0; s < stack.size(); ++s) {
        char line[64];
        std::snprintf(line, sizeof line, "%zu,%.17g\n", s, stack.schedule.distances_m[s]);
        csv << line;
    }
}

FocalStack load_stack(const std::string& dir) {
    const std::filesystem::path root(dir);
    const auto csv_path = root / "schedule.csv";
    if (!std::filesystem::exists(csv_path))
        throw IoError(IoError::Kind::missing_file, "missing schedule.csv in " + dir);
    std::ifstream csv(csv_path);
    std::string line;
    std::getline(csv, line);  // header
    FocalStack stack;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string idx, focus;
        if (!std::getline(ss, idx, ',') || !std::getline(ss, focus, ','))
            throw IoError(IoError::Kind::malformed, "bad schedule.csv line: " + line);
        stack.schedule.distances_m.push_back(std::strtod(focus.c_str(), nullptr));
    }
    if (stack.schedule.distances_m.empty())
        throw IoError(IoError::Kind::malformed, "schedule.csv lists no slices in " + dir);
    for (size_t s = 0; s < stack.schedule.size(); ++s) {
        char base[64];
        std::snprintf(base, sizeof base, "slice_%02zu", s);
        const auto pfm = root / (std::string(base) + ".pfm");
        const auto png = root / (std::string(base) + ".png");
        if (std::filesystem::exists(pfm))
            stack.slices.push_back(load_image(pfm.string(), ImageFormat::pfm));
        else if (std::filesystem::exists(png))
            stack.slices.push_back(load_image(png.string(), ImageFormat::png8));
        else
            throw IoError(IoError::Kind::missing_file,
                          "missing slice file " + (root / base).string() + ".{pfm,png}");
    }
    validate_stack(stack);
    return stack;
}

}  // namespace fsdepth
