#pragma once

#include <string>
#include <vector>

#include "fsdepth/estimate.hpp"
#include "fsdepth/eval.hpp"
#include "fsdepth/focus.hpp"
#include "fsdepth/optics.hpp"

namespace fsdepth {

/// Every tunable of the pipeline, resolved from defaults, then an optional
/// config file, then command-line overrides (in that precedence order).
/// The file format is flat `key = value` lines with '#' comments.
struct PipelineConfig {
    // lens
    double focal_length = 0.025;
    double f_number = 2.0;
    double pixel_pitch = 1e-5;
    double coc_to_sigma = 0.5;
    double sigma_floor = 0.25;
    int max_kernel_radius = 24;
    // depth range
    double d_min = 0.7;
    double d_max = 10.0;
    // focus schedule: "default" or comma-separated meters
    std::string schedule = "default";
    // loss / optimizer
    std::string loss = "l1";
    double lambda = 0.0;
    double lr = 0.02;
    int iters = 500;
    double tol = 1e-5;
    // all-in-focus estimation
    std::string aif_mode = "argmax";
    double softmax_tau = 0.01;
    double fm_sigma = 2.0;
    // estimator initialization: "constant:<depth>", "dff" or "file:<path>"
    std::string init = "constant:2";
    // AIF image fed to the estimator in the pipeline: "syn" (Laplacian
    // composite of the observed stack) or "gt" (the scene's own image)
    std::string aif_source = "syn";
    // depth-of-field threshold for the tiling audit CSV
    double coc_threshold = 1.0;
    // synthetic scene: "plane:<d>", "staircase:<d1,d2,...>[:band]",
    // "two_plane:<d1,d2>[:split]"
    std::string scene = "plane:1.2";
    // texture: "noise[:corr]" or "checker[:period]"
    std::string texture = "noise:1.5";
    int width = 128;
    int height = 128;
    // optional input files; when set they replace the synthetic scene
    std::string rgb_path;
    std::string depth_path;
    // misc
    long long seed = 7;
    int threads = 0;  // 0 = hardware concurrency
    bool dump_fv = false;
    int interior_margin = -1;  // -1 = max_kernel_radius

    // -------- typed views --------
    LensConfig lens_config() const;
    DepthRange depth_range() const;
    FocusSchedule focus_schedule() const;
    LossConfig loss_config() const;
    AifMode aif() const;
    Init estimate_init() const;
    SceneSpec scene_spec() const;
    int effective_margin() const { return interior_margin >= 0 ? interior_margin
                                                               : max_kernel_radius; }
};

/// Parses a config file. Missing keys keep their defaults; unknown keys and
/// unparsable values raise ConfigError naming the key and line.
PipelineConfig parse_config(const std::string& path);
PipelineConfig parse_config_text(const std::string& text, const PipelineConfig& base = {});

/// Applies one "key=value" override (command-line form) on top of cfg.
void apply_override(PipelineConfig& cfg, const std::string& assignment);

/// Checks every cross-field invariant, raising ConfigError with the key name.
void validate_config(const PipelineConfig& cfg);

/// Serializes all keys; parse_config_text of the result reproduces cfg exactly.
std::string serialize_config(const PipelineConfig& cfg);

}  // namespace fsdepth
