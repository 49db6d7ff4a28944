#include "fsdepth/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "fsdepth/error.hpp"
#include "fsdepth/image_io.hpp"

namespace fsdepth {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, int line, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(key, line, "config: cannot parse '" + v + "' as a number for key '" +
                                         key + "' (line " + std::to_string(line) + ")");
    return x;
}

int to_int(const std::string& key, int line, const std::string& v) {
    const double x = to_double(key, line, v);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x)
        throw ConfigError(key, line, "config: key '" + key + "' expects an integer, got '" + v +
                                         "' (line " + std::to_string(line) + ")");
    return i;
}

bool to_bool(const std::string& key, int line, const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw ConfigError(key, line, "config: key '" + key + "' expects a boolean, got '" + v +
                                     "' (line " + std::to_string(line) + ")");
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct KeyHandler {
    std::function<void(PipelineConfig&, const std::string& value, int line)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

using KeyTable = std::vector<std::pair<std::string, KeyHandler>>;

const KeyTable& key_table() {
    auto dbl = [](double PipelineConfig::* field) {
        return KeyHandler{[field](PipelineConfig& c, const std::string& v, int line) {
                              c.*field = to_double("", line, v);
                          },
                          [field](const PipelineConfig& c) { return fmt_double(c.*field); }};
    };
    auto integer = [](int PipelineConfig::* field) {
        return KeyHandler{[field](PipelineConfig& c, const std::string& v, int line) {
                              c.*field = to_int("", line, v);
                          },
                          [field](const PipelineConfig& c) { return std::to_string(c.*field); }};
    };
    auto str = [](std::string PipelineConfig::* field) {
        return KeyHandler{
            [field](PipelineConfig& c, const std::string& v, int) { c.*field = v; },
            [field](const PipelineConfig& c) { return c.*field; }};
    };
    static const KeyTable table = {
        {"focal_length", dbl(&PipelineConfig::focal_length)},
        {"f_number", dbl(&PipelineConfig::f_number)},
        {"pixel_pitch", dbl(&PipelineConfig::pixel_pitch)},
        {"coc_to_sigma", dbl(&PipelineConfig::coc_to_sigma)},
        {"sigma_floor", dbl(&PipelineConfig::sigma_floor)},
        {"max_kernel_radius", integer(&PipelineConfig::max_kernel_radius)},
        {"d_min", dbl(&PipelineConfig::d_min)},
        {"d_max", dbl(&PipelineConfig::d_max)},
        {"schedule", str(&PipelineConfig::schedule)},
        {"loss", str(&PipelineConfig::loss)},
        {"lambda", dbl(&PipelineConfig::lambda)},
        {"lr", dbl(&PipelineConfig::lr)},
        {"iters", integer(&PipelineConfig::iters)},
        {"tol", dbl(&PipelineConfig::tol)},
        {"aif_mode", str(&PipelineConfig::aif_mode)},
        {"softmax_tau", dbl(&PipelineConfig::softmax_tau)},
        {"fm_sigma", dbl(&PipelineConfig::fm_sigma)},
        {"init", str(&PipelineConfig::init)},
        {"aif_source", str(&PipelineConfig::aif_source)},
        {"coc_threshold", dbl(&PipelineConfig::coc_threshold)},
        {"scene", str(&PipelineConfig::scene)},
        {"texture", str(&PipelineConfig::texture)},
        {"width", integer(&PipelineConfig::width)},
        {"height", integer(&PipelineConfig::height)},
        {"rgb_path", str(&PipelineConfig::rgb_path)},
        {"depth_path", str(&PipelineConfig::depth_path)},
        {"seed",
         {[](PipelineConfig& c, const std::string& v, int line) {
              c.seed = static_cast<long long>(to_double("seed", line, v));
          },
          [](const PipelineConfig& c) { return std::to_string(c.seed); }}},
        {"threads", integer(&PipelineConfig::threads)},
        {"dump_fv",
         {[](PipelineConfig& c, const std::string& v, int line) {
              c.dump_fv = to_bool("dump_fv", line, v);
          },
          [](const PipelineConfig& c) { return std::string(c.dump_fv ? "1" : "0"); }}},
        {"interior_margin", integer(&PipelineConfig::interior_margin)},
    };
    return table;
}

void set_key(PipelineConfig& cfg, const std::string& key, const std::string& value, int line) {
    for (const auto& [name, handler] : key_table()) {
        if (name == key) {
            try {
                handler.set(cfg, value, line);
            } catch (const ConfigError&) {
                throw ConfigError(key, line, "config: cannot parse value '" + value +
                                                 "' for key '" + key + "' (line " +
                                                 std::to_string(line) + ")");
            }
            return;
        }
    }
    throw ConfigError(key, line, "config: unknown key '" + key + "' (line " +
                                     std::to_string(line) + ")");
}

std::vector<double> parse_number_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError(key, 0, "config: empty element in list for " + key);
        out.push_back(to_double(key, 0, item));
    }
    if (out.empty()) throw ConfigError(key, 0, "config: empty list for " + key);
    return out;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text, const PipelineConfig& base) {
    PipelineConfig cfg = base;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", line_no, "config: expected 'key = value' (line " +
                                               std::to_string(line_no) + "): " + raw);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("", line_no,
                              "config: missing key (line " + std::to_string(line_no) + ")");
        set_key(cfg, key, value, line_no);
    }
    return cfg;
}

PipelineConfig parse_config(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw IoError(IoError::Kind::missing_file, "config file not found: " + path);
    std::ifstream f(path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

void apply_override(PipelineConfig& cfg, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError(assignment, 0, "override must look like key=value: " + assignment);
    set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)), 0);
}

void validate_config(const PipelineConfig& cfg) {
    auto fail = [](const std::string& key, const std::string& why) {
        throw ConfigError(key, 0, "config: invalid " + key + ": " + why);
    };
    if (!(cfg.focal_length > 0)) fail("focal_length", "must be > 0");
    if (!(cfg.f_number > 0)) fail("f_number", "must be > 0");
    if (!(cfg.pixel_pitch > 0)) fail("pixel_pitch", "must be > 0");
    if (!(cfg.coc_to_sigma > 0 && cfg.coc_to_sigma <= 1)) fail("coc_to_sigma", "must be in (0,1]");
    if (!(cfg.sigma_floor > 0)) fail("sigma_floor", "must be > 0");
    if (cfg.max_kernel_radius < 1) fail("max_kernel_radius", "must be >= 1");
    if (!(cfg.d_min > 0 && cfg.d_min < cfg.d_max)) fail("d_min", "need 0 < d_min < d_max");
    if (!(cfg.focal_length < cfg.d_min)) fail("focal_length", "must be < d_min");
    if (cfg.loss != "l1" && cfg.loss != "l2") fail("loss", "must be l1 or l2");
    if (cfg.lambda < 0) fail("lambda", "must be >= 0");
    if (!(cfg.lr > 0)) fail("lr", "must be > 0");
    if (cfg.iters < 0) fail("iters", "must be >= 0");
    if (!(cfg.tol >= 0)) fail("tol", "must be >= 0");
    if (cfg.aif_mode != "argmax" && cfg.aif_mode != "softmax")
        fail("aif_mode", "must be argmax or softmax");
    if (cfg.aif_source != "syn" && cfg.aif_source != "gt")
        fail("aif_source", "must be syn or gt");
    if (!(cfg.softmax_tau > 0)) fail("softmax_tau", "must be > 0");
    if (cfg.fm_sigma < 0) fail("fm_sigma", "must be >= 0");
    if (!(cfg.coc_threshold > 0)) fail("coc_threshold", "must be > 0");
    if (cfg.width < 32 || cfg.height < 32) fail("width", "scene dimensions must be >= 32");
    if (cfg.threads < 0) fail("threads", "must be >= 0");

    // typed views perform their own structural validation
    try {
        validate_lens(cfg.lens_config(), cfg.depth_range());
    } catch (const Error& e) {
        fail("focal_length", e.what());
    }
    try {
        validate_schedule(cfg.focus_schedule(), cfg.depth_range());
    } catch (const Error& e) {
        fail("schedule", e.what());
    }
    cfg.estimate_init();
    cfg.scene_spec();
}

std::string serialize_config(const PipelineConfig& cfg) {
    std::string out = "# fsdepth effective configuration\n";
    for (const auto& [name, handler] : key_table()) out += name + " = " + handler.get(cfg) + "\n";
    return out;
}

LensConfig PipelineConfig::lens_config() const {
    LensConfig lens;
    lens.focal_length_m = focal_length;
    lens.f_number = f_number;
    lens.pixel_pitch_m = pixel_pitch;
    lens.coc_to_sigma = coc_to_sigma;
    lens.sigma_floor_px = sigma_floor;
    lens.max_kernel_radius = max_kernel_radius;
    return lens;
}

DepthRange PipelineConfig::depth_range() const { return DepthRange{d_min, d_max}; }

FocusSchedule PipelineConfig::focus_schedule() const {
    if (schedule == "default") return default_schedule();
    return FocusSchedule{parse_number_list("schedule", schedule)};
}

LossConfig PipelineConfig::loss_config() const {
    LossConfig c;
    c.kind = loss == "l2" ? LossKind::l2 : LossKind::l1;
    c.smoothness_lambda = lambda;
    c.iterations = iters;
    c.learning_rate = lr;
    c.tolerance = tol;
    return c;
}

AifMode PipelineConfig::aif() const {
    return aif_mode == "softmax" ? AifMode::softmax : AifMode::argmax;
}

Init PipelineConfig::estimate_init() const {
    if (init == "dff") return Init::dff();
    if (init.rfind("constant:", 0) == 0)
        return Init::constant(to_double("init", 0, init.substr(9)));
    if (init.rfind("file:", 0) == 0) {
        Init i;
        i.kind = Init::Kind::provided;
        // the path is resolved by the CLI when the stack dimensions are known
        return i;
    }
    throw ConfigError("init", 0, "config: init must be 'constant:<m>', 'dff' or 'file:<path>'");
}

SceneSpec PipelineConfig::scene_spec() const {
    SceneSpec spec;
    spec.height = height;
    spec.width = width;
    spec.seed = static_cast<uint64_t>(seed);

    // scene field: kind:params[:extra]
    std::vector<std::string> parts;
    {
        std::istringstream ss(scene);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(trim(item));
    }
    if (parts.empty()) throw ConfigError("scene", 0, "config: empty scene spec");
    const std::string& kind = parts[0];
    if (kind == "plane") {
        if (parts.size() != 2) throw ConfigError("scene", 0, "config: plane needs plane:<depth>");
        spec.kind = SceneSpec::Kind::plane;
        spec.depths_m = {to_double("scene", 0, parts[1])};
    } else if (kind == "staircase") {
        if (parts.size() < 2 || parts.size() > 3)
            throw ConfigError("scene", 0, "config: staircase needs staircase:<d1,d2,...>[:band]");
        spec.kind = SceneSpec::Kind::staircase;
        spec.depths_m = parse_number_list("scene", parts[1]);
        if (parts.size() == 3) spec.band_width_px = to_int("scene", 0, parts[2]);
    } else if (kind == "two_plane") {
        if (parts.size() < 2 || parts.size() > 3)
            throw ConfigError("scene", 0, "config: two_plane needs two_plane:<d1,d2>[:split]");
        spec.kind = SceneSpec::Kind::two_plane;
        spec.depths_m = parse_number_list("scene", parts[1]);
        if (spec.depths_m.size() != 2)
            throw ConfigError("scene", 0, "config: two_plane needs exactly two depths");
        if (parts.size() == 3) spec.split = to_double("scene", 0, parts[2]);
    } else {
        throw ConfigError("scene", 0, "config: unknown scene kind '" + kind + "'");
    }

    // texture field: name[:param]
    std::vector<std::string> tparts;
    {
        std::istringstream ss(texture);
        std::string item;
        while (std::getline(ss, item, ':')) tparts.push_back(trim(item));
    }
    if (tparts.empty()) throw ConfigError("texture", 0, "config: empty texture spec");
    if (tparts[0] == "noise") {
        spec.texture = SceneSpec::Texture::noise;
        if (tparts.size() > 1) spec.noise_correlation_px = to_double("texture", 0, tparts[1]);
    } else if (tparts[0] == "checker") {
        spec.texture = SceneSpec::Texture::checker;
        if (tparts.size() > 1) spec.checker_period_px = to_double("texture", 0, tparts[1]);
    } else {
        throw ConfigError("texture", 0, "config: unknown texture '" + tparts[0] + "'");
    }
    return spec;
}

}  // namespace fsdepth
