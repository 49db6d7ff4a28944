#include "fsdepth/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <memory>
#include <vector>

#include "fsdepth/error.hpp"

namespace fsdepth {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_for_read(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw IoError(IoError::Kind::missing_file, "file not found: " + path);
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError(IoError::Kind::missing_file, "cannot open: " + path);
    return f;
}

FilePtr open_for_write(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError(IoError::Kind::write_failed, "cannot create: " + path);
    return f;
}

// ---------------------------------------------------------------- PFM

// Standard PFM: "PF" (RGB) / "Pf" (gray), "W H", scale line (negative =
// little-endian), then float32 rows bottom-to-top.
void write_pfm(const std::string& path, const double* data, int h, int w, int c) {
    if (c != 1 && c != 3)
        throw IoError(IoError::Kind::unsupported, "pfm: channels must be 1 or 3");
    FilePtr f = open_for_write(path);
    std::fprintf(f.get(), "%s\n%d %d\n-1.0\n", c == 3 ? "PF" : "Pf", w, h);
    std::vector<float> row(static_cast<size_t>(w) * c);
    for (int y = h - 1; y >= 0; --y) {
        const double* src = data + static_cast<size_t>(y) * w * c;
        for (size_t i = 0; i < row.size(); ++i) row[i] = static_cast<float>(src[i]);
        if (std::fwrite(row.data(), sizeof(float), row.size(), f.get()) != row.size())
            throw IoError(IoError::Kind::write_failed, "pfm: short write: " + path);
    }
}

struct PfmData {
    int height = 0, width = 0, channels = 1;
    std::vector<double> data;
};

int read_pfm_token(std::FILE* f, char* buf, int cap) {
    int ch;
    do {
        ch = std::fgetc(f);
    } while (ch == ' ' || ch == '\n' || ch == '\r' || ch == '\t');
    int n = 0;
    while (ch != EOF && ch != ' ' && ch != '\n' && ch != '\r' && ch != '\t') {
        if (n + 1 >= cap) return -1;
        buf[n++] = static_cast<char>(ch);
        ch = std::fgetc(f);
    }
    buf[n] = '\0';
    return n;
}

PfmData read_pfm(const std::string& path) {
    FilePtr f = open_for_read(path);
    char tok[64];
    if (read_pfm_token(f.get(), tok, sizeof tok) <= 0)
        throw IoError(IoError::Kind::malformed, "pfm: empty or truncated header: " + path);
    PfmData out;
    if (std::strcmp(tok, "PF") == 0)
        out.channels = 3;
    else if (std::strcmp(tok, "Pf") == 0)
        out.channels = 1;
    else
        throw IoError(IoError::Kind::malformed, "pfm: bad magic: " + path);
    if (read_pfm_token(f.get(), tok, sizeof tok) <= 0)
        throw IoError(IoError::Kind::malformed, "pfm: missing width: " + path);
    out.width = std::atoi(tok);
    if (read_pfm_token(f.get(), tok, sizeof tok) <= 0)
        throw IoError(IoError::Kind::malformed, "pfm: missing height: " + path);
    out.height = std::atoi(tok);
    if (read_pfm_token(f.get(), tok, sizeof tok) <= 0)
        throw IoError(IoError::Kind::malformed, "pfm: missing scale: " + path);
    const double scale = std::atof(tok);
    if (out.width < 1 || out.height < 1)
        throw IoError(IoError::Kind::malformed, "pfm: bad dimensions: " + path);
    if (scale >= 0.0)
        throw IoError(IoError::Kind::unsupported, "pfm: big-endian data not supported: " + path);

    out.data.resize(static_cast<size_t>(out.height) * out.width * out.channels);
    std::vector<float> row(static_cast<size_t>(out.width) * out.channels);
    for (int y = out.height - 1; y >= 0; --y) {
        if (std::fread(row.data(), sizeof(float), row.size(), f.get()) != row.size())
            throw IoError(IoError::Kind::malformed, "pfm: truncated pixel data: " + path);
        double* dst = out.data.data() + static_cast<size_t>(y) * out.width * out.channels;
        for (size_t i = 0; i < row.size(); ++i) dst[i] = static_cast<double>(row[i]);
    }
    return out;
}

// ---------------------------------------------------------------- PNG

struct PngRaster {
    int height = 0, width = 0, channels = 1, bit_depth = 8;
    std::vector<uint16_t> samples;  // row-major interleaved, native values
};

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    throw IoError(IoError::Kind::malformed, std::string("png: ") + msg);
    (void)png;
}

void png_warn_fn(png_structp, png_const_charp) {}

PngRaster read_png(const std::string& path) {
    FilePtr f = open_for_read(path);
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError(IoError::Kind::malformed, "png: bad signature: " + path);

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
    if (!png) throw IoError(IoError::Kind::malformed, "png: init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError(IoError::Kind::malformed, "png: init failure");
    }
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)
        throw IoError(IoError::Kind::unsupported,
                      "png: only 8/16-bit gray and RGB supported: " + path);
    if (depth != 8 && depth != 16)
        throw IoError(IoError::Kind::unsupported, "png: bit depth must be 8 or 16: " + path);

    PngRaster out;
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.channels = color == PNG_COLOR_TYPE_RGB ? 3 : 1;
    out.bit_depth = depth;

    const size_t row_samples = static_cast<size_t>(out.width) * out.channels;
    out.samples.resize(static_cast<size_t>(out.height) * row_samples);
    std::vector<unsigned char> row(row_samples * (depth / 8));
    for (int y = 0; y < out.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        uint16_t* dst = out.samples.data() + static_cast<size_t>(y) * row_samples;
        if (depth == 8) {
            for (size_t i = 0; i < row_samples; ++i) dst[i] = row[i];
        } else {
            for (size_t i = 0; i < row_samples; ++i)  // PNG is big-endian
                dst[i] = static_cast<uint16_t>((row[2 * i] << 8) | row[2 * i + 1]);
        }
    }
    png_read_end(png, nullptr);
    return out;
}

void write_png(const std::string& path, const PngRaster& r) {
    FilePtr f = open_for_write(path);
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
    if (!png) throw IoError(IoError::Kind::write_failed, "png: init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError(IoError::Kind::write_failed, "png: init failure");
    }
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    png_init_io(png, f.get());
    png_set_IHDR(png, info, r.width, r.height, r.bit_depth,
                 r.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const size_t row_samples = static_cast<size_t>(r.width) * r.channels;
    std::vector<unsigned char> row(row_samples * (r.bit_depth / 8));
    for (int y = 0; y < r.height; ++y) {
        const uint16_t* src = r.samples.data() + static_cast<size_t>(y) * row_samples;
        if (r.bit_depth == 8) {
            for (size_t i = 0; i < row_samples; ++i)
                row[i] = static_cast<unsigned char>(src[i]);
        } else {
            for (size_t i = 0; i < row_samples; ++i) {
                row[2 * i] = static_cast<unsigned char>(src[i] >> 8);
                row[2 * i + 1] = static_cast<unsigned char>(src[i] & 0xff);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

}  // namespace

void save_image(const std::string& path, const Image& img, ImageFormat format) {
    validate_image(img);
    switch (format) {
        case ImageFormat::pfm:
            write_pfm(path, img.data.data(), img.height, img.width, img.channels);
            return;
        case ImageFormat::png8:
        case ImageFormat::png16: {
            PngRaster r;
            r.height = img.height;
            r.width = img.width;
            r.channels = img.channels;
            r.bit_depth = format == ImageFormat::png8 ? 8 : 16;
            r.samples.resize(img.size());
            for (size_t i = 0; i < img.data.size(); ++i)
                r.samples[i] = static_cast<uint16_t>(format == ImageFormat::png8
                                                         ? quantize_u8(img.data[i])
                                                         : quantize_u16(img.data[i]));
            write_png(path, r);
            return;
        }
    }
    throw IoError(IoError::Kind::unsupported, "save_image: unknown format");
}

Image load_image(const std::string& path, ImageFormat format) {
    if (format == ImageFormat::pfm) {
        PfmData p = read_pfm(path);
        Image img;
        img.height = p.height;
        img.width = p.width;
        img.channels = p.channels;
        img.data = std::move(p.data);
        validate_image(img, "loaded image");
        return img;
    }
    PngRaster r = read_png(path);
    const bool expect8 = format == ImageFormat::png8;
    if ((expect8 && r.bit_depth != 8) || (!expect8 && r.bit_depth != 16))
        throw IoError(IoError::Kind::unsupported,
                      "png: bit depth does not match requested format: " + path);
    Image img;
    img.height = r.height;
    img.width = r.width;
    img.channels = r.channels;
    img.data.resize(r.samples.size());
    const double denom = expect8 ? 255.0 : 65535.0;
    for (size_t i = 0; i < r.samples.size(); ++i) img.data[i] = r.samples[i] / denom;
    return img;
}

void save_depth(const std::string& path, const DepthMap& d, DepthFormat format) {
    if (d.height < 1 || d.width < 1 || d.data.size() != static_cast<size_t>(d.height) * d.width)
        throw DimensionError("save_depth: malformed depth map");
    if (format == DepthFormat::pfm_m) {
        write_pfm(path, d.data.data(), d.height, d.width, 1);
        return;
    }
    PngRaster r;
    r.height = d.height;
    r.width = d.width;
    r.channels = 1;
    r.bit_depth = 16;
    r.samples.resize(d.size());
    for (size_t i = 0; i < d.data.size(); ++i) {
        double mm = d.data[i] * 1000.0;
        if (mm <= 0.0)
            r.samples[i] = 0;
        else if (mm >= 65535.0)
            r.samples[i] = 65535;
        else
            r.samples[i] = static_cast<uint16_t>(mm + 0.5);
    }
    write_png(path, r);
}

DepthMap load_depth(const std::string& path, DepthFormat format, const DepthRange& range,
                    DepthLoadReport* report) {
    DepthLoadReport local;
    DepthMap d;
    if (format == DepthFormat::pfm_m) {
        PfmData p = read_pfm(path);
        if (p.channels != 1)
            throw IoError(IoError::Kind::unsupported, "depth pfm must be single channel: " + path);
        d.height = p.height;
        d.width = p.width;
        d.data = std::move(p.data);
    } else {
        PngRaster r = read_png(path);
        if (r.channels != 1 || r.bit_depth != 16)
            throw IoError(IoError::Kind::unsupported,
                          "png16_mm depth must be 16-bit grayscale: " + path);
        d.height = r.height;
        d.width = r.width;
        d.data.resize(r.samples.size());
        for (size_t i = 0; i < r.samples.size(); ++i) d.data[i] = r.samples[i] / 1000.0;
    }
    for (double& v : d.data) {
        if (!std::isfinite(v) || v <= 0.0) {
            v = range.min_m;  // zero depth is the NYU invalid marker
            ++local.invalid_zero;
        } else if (v < range.min_m) {
            v = range.min_m;
            ++local.clamped;
        } else if (v > range.max_m) {
            v = range.max_m;
            ++local.clamped;
        }
    }
    if (report) *report = local;
    return d;
}

ImageFormat detect_format(const std::string& path) {
    FilePtr f = open_for_read(path);
    unsigned char sig[8] = {0};
    const size_t n = std::fread(sig, 1, 8, f.get());
    if (n >= 2 && (std::memcmp(sig, "Pf", 2) == 0 || std::memcmp(sig, "PF", 2) == 0))
        return ImageFormat::pfm;
    if (n == 8 && png_sig_cmp(sig, 0, 8) == 0) {
        // distinguish 8 vs 16 bit lazily; callers re-load with the right format
        PngRaster r = read_png(path);
        return r.bit_depth == 8 ? ImageFormat::png8 : ImageFormat::png16;
    }
    throw IoError(IoError::Kind::malformed, "unrecognized image format: " + path);
}

}  // namespace fsdepth
