// fsdepth — depth estimation from focal stacks.
//
// Subcommands map to the pipeline stages: synth renders a focal stack from
// RGB-D, aif composites an all-in-focus image, dff runs the classical
// argmax baseline, estimate optimizes a depth field against the observed
// stack, eval scores a prediction, gradcheck verifies the analytic
// gradients, pipeline chains synth -> aif -> estimate -> eval.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fsdepth/config.hpp"
#include "fsdepth/convolve.hpp"
#include "fsdepth/error.hpp"
#include "fsdepth/estimate.hpp"
#include "fsdepth/eval.hpp"
#include "fsdepth/focus.hpp"
#include "fsdepth/gradcheck.hpp"
#include "fsdepth/image_io.hpp"
#include "fsdepth/optics.hpp"
#include "fsdepth/parallel.hpp"
#include "fsdepth/render.hpp"

namespace fs = std::filesystem;
using namespace fsdepth;

namespace {

struct CliState {
    std::string config_path;
    std::vector<std::string> overrides;  // raw key=value pairs, applied in order
    PipelineConfig cfg;

    void resolve() {
        cfg = config_path.empty() ? PipelineConfig{} : parse_config(config_path);
        for (const std::string& kv : overrides) apply_override(cfg, kv);
        validate_config(cfg);
        set_max_threads(cfg.threads);
    }
};

/// Stage wrapper so operational errors name the failing pipeline stage.
template <typename Fn>
void run_stage(const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw Error("stage " + name + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw IoError(IoError::Kind::write_failed, "cannot write " + path.string());
    f << text;
}

void write_effective_config(const fs::path& dir, const PipelineConfig& cfg) {
    fs::create_directories(dir);
    write_text(dir / "effective-config.txt", serialize_config(cfg));
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(),
                                                  suffix) == 0;
}

void save_image_by_ext(const std::string& path, const Image& img) {
    save_image(path, img, ends_with(path, ".png") ? ImageFormat::png8 : ImageFormat::pfm);
}

void save_depth_by_ext(const std::string& path, const DepthMap& d) {
    save_depth(path, d, ends_with(path, ".png") ? DepthFormat::png16_mm : DepthFormat::pfm_m);
}

DepthMap load_depth_by_ext(const std::string& path, const DepthRange& range,
                           DepthLoadReport* report = nullptr) {
    return load_depth(path, ends_with(path, ".png") ? DepthFormat::png16_mm : DepthFormat::pfm_m,
                      range, report);
}

/// Scene source: input files when configured, synthetic otherwise.
Scene resolve_scene(const PipelineConfig& cfg) {
    if (!cfg.rgb_path.empty() || !cfg.depth_path.empty()) {
        if (cfg.rgb_path.empty() || cfg.depth_path.empty())
            throw ConfigError("rgb_path", 0, "rgb_path and depth_path must be set together");
        Scene scene;
        scene.aif = load_image(cfg.rgb_path, detect_format(cfg.rgb_path));
        DepthLoadReport report;
        scene.depth = load_depth_by_ext(cfg.depth_path, cfg.depth_range(), &report);
        if (report.invalid_zero > 0 || report.clamped > 0)
            std::fprintf(stderr, "depth load: %d invalid zero px -> d_min, %d clamped px\n",
                         report.invalid_zero, report.clamped);
        if (scene.aif.height != scene.depth.height || scene.aif.width != scene.depth.width)
            throw DimensionError("rgb and depth files have different dimensions");
        return scene;
    }
    return make_scene(cfg.scene_spec(), cfg.depth_range());
}

std::string tiling_csv(const PipelineConfig& cfg) {
    const TilingReport report = check_schedule_tiling(
        cfg.focus_schedule(), cfg.lens_config(), cfg.coc_threshold, cfg.depth_range());
    std::string out = "pair_index,gap_diopters\n";
    char buf[96];
    for (const auto& p : report.pairs) {
        std::snprintf(buf, sizeof buf, "%d,%.9f\n", p.index, p.gap_diopters);
        out += buf;
    }
    return out;
}

std::string trace_csv(const std::vector<TracePoint>& trace) {
    std::string out = "iteration,loss,rmse_m\n";
    char buf[128];
    for (const TracePoint& t : trace) {
        if (t.rmse >= 0.0)
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.9f\n", t.iteration, t.loss, t.rmse);
        else
            std::snprintf(buf, sizeof buf, "%d,%.17g,\n", t.iteration, t.loss);
        out += buf;
    }
    return out;
}

std::string metrics_csv_single(const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "method,scene,rmse_m,delta1,delta2,delta3,pixels\n%s,%.9f,%.6f,%.6f,%.6f,%lld\n",
                  r.label.c_str(), r.rmse_m, r.delta1, r.delta2, r.delta3, r.pixels);
    return buf;
}

Init resolve_init(const PipelineConfig& cfg, const DepthRange& range) {
    if (cfg.init.rfind("file:", 0) == 0) {
        const std::string path = cfg.init.substr(5);
        return Init::provided_map(load_depth_by_ext(path, range));
    }
    return cfg.estimate_init();
}

void dump_focus_volume(const fs::path& dir, const FocusVolume& fv) {
    for (int s = 0; s < fv.n_slices; ++s) {
        Image plane(fv.height, fv.width, 1);
        const double* src = fv.plane(s);
        for (size_t i = 0; i < plane.data.size(); ++i) plane.data[i] = src[i];
        char name[32];
        std::snprintf(name, sizeof name, "fv_%02d.pfm", s);
        save_image((dir / name).string(), plane, ImageFormat::pfm);
    }
}

// ------------------------------------------------------------- subcommands

int cmd_synth(CliState& state, const std::string& out_dir, bool png8) {
    const PipelineConfig& cfg = state.cfg;
    Scene scene;
    run_stage("scene", [&] { scene = resolve_scene(cfg); });
    FocalStack stack;
    run_stage("synth", [&] {
        stack = render_stack(scene.aif, scene.depth, cfg.focus_schedule(), cfg.lens_config());
    });
    const fs::path out(out_dir);
    write_effective_config(out, cfg);
    save_stack((out / "stack").string(), stack, png8 ? ImageFormat::png8 : ImageFormat::pfm);
    save_image((out / "gt_aif.pfm").string(), scene.aif, ImageFormat::pfm);
    save_depth((out / "gt_depth.pfm").string(), scene.depth, DepthFormat::pfm_m);
    write_text(out / "tiling.csv", tiling_csv(cfg));
    std::printf("synth: %zu slices -> %s\n", stack.size(), (out / "stack").string().c_str());
    return 0;
}

int cmd_aif(CliState& state, const std::string& stack_dir, const std::string& out_path) {
    const PipelineConfig& cfg = state.cfg;
    FocalStack stack;
    run_stage("load", [&] { stack = load_stack(stack_dir); });
    FocusVolume fv;
    Image aif;
    run_stage("aif", [&] {
        fv = focus_measure(stack, cfg.fm_sigma);
        aif = composite_aif(stack, fv, cfg.aif(), cfg.softmax_tau);
    });
    save_image_by_ext(out_path, aif);
    if (cfg.dump_fv) dump_focus_volume(fs::path(out_path).parent_path(), fv);
    std::printf("aif: %s\n", out_path.c_str());
    return 0;
}

int cmd_dff(CliState& state, const std::string& stack_dir, const std::string& out_path,
            const std::string& preview_path) {
    const PipelineConfig& cfg = state.cfg;
    FocalStack stack;
    run_stage("load", [&] { stack = load_stack(stack_dir); });
    DepthMap depth;
    run_stage("dff", [&] {
        const FocusVolume fv = focus_measure(stack, cfg.fm_sigma);
        depth = dff_argmax_depth(fv, stack.schedule);
    });
    save_depth_by_ext(out_path, depth);
    if (!preview_path.empty())
        save_image(preview_path, colorize_depth(depth, cfg.depth_range()), ImageFormat::png8);
    std::printf("dff: %s\n", out_path.c_str());
    return 0;
}

int cmd_estimate(CliState& state, const std::string& stack_dir, const std::string& aif_path,
                 const std::string& gt_path, const std::string& out_dir) {
    const PipelineConfig& cfg = state.cfg;
    FocalStack stack;
    run_stage("load", [&] { stack = load_stack(stack_dir); });

    Image aif;
    run_stage("aif", [&] {
        if (!aif_path.empty()) {
            aif = load_image(aif_path, detect_format(aif_path));
        } else {
            const FocusVolume fv = focus_measure(stack, cfg.fm_sigma);
            aif = composite_aif(stack, fv, cfg.aif(), cfg.softmax_tau);
        }
    });

    EstimateOptions opts;
    opts.range = cfg.depth_range();
    opts.fm_window_sigma = cfg.fm_sigma;
    opts.trace_margin = cfg.effective_margin();
    if (!gt_path.empty())
        opts.ground_truth = load_depth_by_ext(gt_path, cfg.depth_range());

    const fs::path out(out_dir);
    write_effective_config(out, cfg);

    EstimateResult result;
    try {
        run_stage("estimate", [&] {
            result = estimate_depth(stack, aif, cfg.lens_config(), cfg.loss_config(),
                                    resolve_init(cfg, cfg.depth_range()), opts);
        });
    } catch (const EstimateAborted& e) {
        write_text(out / "trace.csv", trace_csv(e.trace));
        throw;
    }

    save_depth((out / "depth.pfm").string(), result.depth, DepthFormat::pfm_m);
    save_image((out / "depth.png").string(), colorize_depth(result.depth, cfg.depth_range()),
               ImageFormat::png8);
    write_text(out / "trace.csv", trace_csv(result.trace));
    std::printf("estimate: %zu iterations, final loss %.6g -> %s\n", result.trace.size(),
                result.trace.empty() ? 0.0 : result.trace.back().loss, out_dir.c_str());
    return 0;
}

int cmd_eval(CliState& state, const std::string& pred_path, const std::string& gt_path,
             const std::string& out_path) {
    const PipelineConfig& cfg = state.cfg;
    MetricsReport report;
    run_stage("eval", [&] {
        const DepthMap pred = load_depth_by_ext(pred_path, cfg.depth_range());
        const DepthMap gt = load_depth_by_ext(gt_path, cfg.depth_range());
        const PixelMask mask = interior_mask(pred.height, pred.width, cfg.effective_margin());
        report = compute_metrics(pred, gt, mask, "eval," + pred_path);
    });
    const std::string csv = metrics_csv_single(report);
    if (!out_path.empty()) write_text(out_path, csv);
    std::printf("%s", csv.c_str());
    return 0;
}

int cmd_gradcheck(CliState& state) {
    const PipelineConfig& cfg = state.cfg;
    const LensConfig lens = cfg.lens_config();
    const FocusSchedule schedule = cfg.focus_schedule();
    const uint64_t seed = static_cast<uint64_t>(cfg.seed);

    bool all_pass = true;
    auto report = [&](const FdCheckResult& r, const std::string& detail) {
        std::printf("%-4s %s (%s): max rel err %.3e over %d pixels (tol %.0e)\n",
                    r.pass ? "ok" : "FAIL", r.name.c_str(), detail.c_str(), r.max_rel_err,
                    r.compared, r.tolerance);
        all_pass = all_pass && r.pass;
    };

    run_stage("gradcheck", [&] {
        const size_t n = schedule.size();
        const size_t picks[3] = {0, n / 2, n - 1};
        for (size_t i = 0; i < 3; ++i) {
            const double focus = schedule.distances_m[picks[i]];
            const FdCheckResult r =
                adjoint_fd_check(lens, focus, seed + i, 16, 120);
            char detail[64];
            std::snprintf(detail, sizeof detail, "focus %.2f m", focus);
            report(r, detail);
        }
        report(chain_fd_check(lens, schedule, seed, 16, 60), "full schedule");
    });
    std::printf("gradcheck: %s\n", all_pass ? "all gradients verified" : "FAILURES above");
    return all_pass ? 0 : 1;
}

int cmd_pipeline(CliState& state, const std::string& out_dir) {
    const PipelineConfig& cfg = state.cfg;
    const fs::path out(out_dir);
    write_effective_config(out, cfg);

    Scene scene;
    run_stage("scene", [&] { scene = resolve_scene(cfg); });

    FocalStack stack;
    run_stage("synth", [&] {
        stack = render_stack(scene.aif, scene.depth, cfg.focus_schedule(), cfg.lens_config());
        save_stack((out / "stack").string(), stack);
        save_image((out / "gt_aif.pfm").string(), scene.aif, ImageFormat::pfm);
        save_depth((out / "gt_depth.pfm").string(), scene.depth, DepthFormat::pfm_m);
        write_text(out / "tiling.csv", tiling_csv(cfg));
    });

    Image aif;
    run_stage("aif", [&] {
        if (cfg.aif_source == "gt") {
            aif = scene.aif;
        } else {
            const FocusVolume fv = focus_measure(stack, cfg.fm_sigma);
            aif = composite_aif(stack, fv, cfg.aif(), cfg.softmax_tau);
            if (cfg.dump_fv) dump_focus_volume(out, fv);
        }
        save_image((out / "aif.pfm").string(), aif, ImageFormat::pfm);
        save_image((out / "aif.png").string(), aif, ImageFormat::png8);
    });

    EstimateResult result;
    run_stage("estimate", [&] {
        EstimateOptions opts;
        opts.range = cfg.depth_range();
        opts.fm_window_sigma = cfg.fm_sigma;
        opts.ground_truth = scene.depth;
        opts.trace_margin = cfg.effective_margin();
        result = estimate_depth(stack, aif, cfg.lens_config(), cfg.loss_config(),
                                resolve_init(cfg, cfg.depth_range()), opts);
        save_depth((out / "depth.pfm").string(), result.depth, DepthFormat::pfm_m);
        save_image((out / "depth.png").string(), colorize_depth(result.depth, cfg.depth_range()),
                   ImageFormat::png8);
        write_text(out / "trace.csv", trace_csv(result.trace));
    });

    run_stage("eval", [&] {
        const PixelMask mask =
            interior_mask(result.depth.height, result.depth.width, cfg.effective_margin());
        const MetricsReport report =
            compute_metrics(result.depth, scene.depth, mask, "pipeline," + scene_label(cfg.scene_spec()));
        write_text(out / "metrics.csv", metrics_csv_single(report));
        std::printf("pipeline: rmse %.4f m, d1 %.4f -> %s\n", report.rmse_m, report.delta1,
                    out_dir.c_str());
    });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"depth estimation from focal stack images"};
    app.require_subcommand(1);

    CliState state;
    app.add_option("--config", state.config_path, "flat key = value configuration file");
    app.add_option("--set", state.overrides, "override a config key, e.g. --set lr=0.01")
        ->take_all();

    // dedicated flags for the common knobs; they stack on top of --set
    auto flag_override = [&](CLI::App* cmd) {
        auto add = [&state, cmd](const std::string& flag, const char* key, const char* help) {
            cmd->add_option_function<std::string>(
                flag,
                [&state, key](const std::string& v) {
                    state.overrides.push_back(std::string(key) + "=" + v);
                },
                help);
        };
        add("--lr", "lr", "learning rate, diopters/step");
        add("--iters", "iters", "iteration budget");
        add("--loss", "loss", "photometric loss kind: l1 or l2");
        add("--lambda", "lambda", "smoothness weight");
        add("--seed", "seed", "master random seed");
        add("--threads", "threads", "worker threads (0 = auto)");
        add("--schedule", "schedule", "focus schedule: default or comma list");
        add("--init", "init", "estimator init: constant:<m>, dff, file:<path>");
        add("--aif-mode", "aif_mode", "argmax or softmax");
        add("--fm-sigma", "fm_sigma", "focus measure window sigma");
        add("--scene", "scene", "synthetic scene spec");
        add("--texture", "texture", "synthetic texture spec");
    };
    flag_override(&app);

    // synth
    auto* synth = app.add_subcommand("synth", "render a focal stack from RGB-D");
    std::string synth_out = "out";
    bool synth_png8 = false;
    synth->add_option("--out-dir", synth_out, "output directory")->required();
    synth->add_flag("--png8", synth_png8, "write slices as 8-bit PNG instead of PFM");
    flag_override(synth);

    // aif
    auto* aif = app.add_subcommand("aif", "composite an all-in-focus image from a stack");
    std::string aif_stack, aif_out;
    aif->add_option("--stack", aif_stack, "stack directory (slice_XX.pfm + schedule.csv)")
        ->required();
    aif->add_option("--out", aif_out, "output image (.pfm or .png)")->required();
    flag_override(aif);

    // dff
    auto* dff = app.add_subcommand("dff", "classical argmax depth from focus");
    std::string dff_stack, dff_out, dff_preview;
    dff->add_option("--stack", dff_stack, "stack directory")->required();
    dff->add_option("--out", dff_out, "output depth (.pfm meters or .png millimeters)")
        ->required();
    dff->add_option("--preview", dff_preview, "optional colorized PNG preview");
    flag_override(dff);

    // estimate
    auto* est = app.add_subcommand("estimate", "optimize depth against an observed stack");
    std::string est_stack, est_aif, est_gt, est_out = "out";
    est->add_option("--stack", est_stack, "observed stack directory")->required();
    est->add_option("--aif", est_aif, "all-in-focus image (default: composite from the stack)");
    est->add_option("--gt", est_gt, "ground-truth depth enabling the rmse trace column");
    est->add_option("--out-dir", est_out, "output directory")->required();
    flag_override(est);

    // eval
    auto* ev = app.add_subcommand("eval", "score a depth prediction");
    std::string ev_pred, ev_gt, ev_out;
    ev->add_option("--pred", ev_pred, "predicted depth file")->required();
    ev->add_option("--gt", ev_gt, "ground-truth depth file")->required();
    ev->add_option("--out", ev_out, "metrics CSV path (also printed)");
    flag_override(ev);

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck",
                                  "verify analytic gradients against finite differences");
    flag_override(gc);

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "synth -> aif -> estimate -> eval");
    std::string pipe_out = "out";
    pipe->add_option("--out-dir", pipe_out, "output directory")->required();
    flag_override(pipe);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        state.resolve();
        if (synth->parsed()) return cmd_synth(state, synth_out, synth_png8);
        if (aif->parsed()) return cmd_aif(state, aif_stack, aif_out);
        if (dff->parsed()) return cmd_dff(state, dff_stack, dff_out, dff_preview);
        if (est->parsed()) return cmd_estimate(state, est_stack, est_aif, est_gt, est_out);
        if (ev->parsed()) return cmd_eval(state, ev_pred, ev_gt, ev_out);
        if (gc->parsed()) return cmd_gradcheck(state);
        if (pipe->parsed()) return cmd_pipeline(state, pipe_out);
        std::fprintf(stderr, "error: no subcommand\n");
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
