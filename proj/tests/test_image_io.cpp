#include <doctest.h>

#include <cmath>
#include <fstream>

#include "fsdepth/error.hpp"
#include "fsdepth/image_io.hpp"
#include "helpers.hpp"

using namespace fsdepth;

namespace {

/// Values pre-rounded to float32 so PFM round-trips are bit-exact.
Image f32_image(int h, int w, int c, uint64_t seed) {
    Image img = testutil::random_image(h, w, c, seed);
    for (double& v : img.data) v = static_cast<double>(static_cast<float>(v));
    return img;
}

}  // namespace

TEST_SUITE("image_io") {

TEST_CASE("pfm round-trip is bit-identical") {
    testutil::ScratchDir tmp("pfm");
    for (int channels : {1, 3}) {
        const Image img = f32_image(9, 13, channels, 100 + channels);
        const std::string path = tmp.file("img.pfm");
        save_image(path, img, ImageFormat::pfm);
        const Image back = load_image(path, ImageFormat::pfm);
        REQUIRE(back.same_shape(img));
        CHECK(back.data == img.data);
    }
}

TEST_CASE("png8 quantization: 0.5 stores byte 128 and loads as 128/255") {
    CHECK(quantize_u8(0.5) == 128);
    CHECK(quantize_u8(0.0) == 0);
    CHECK(quantize_u8(1.0) == 255);

    testutil::ScratchDir tmp("png8");
    Image img(4, 4, 1, 0.5);
    const std::string path = tmp.file("half.png");
    save_image(path, img, ImageFormat::png8);
    const Image back = load_image(path, ImageFormat::png8);
    for (double v : back.data) CHECK(v == doctest::Approx(128.0 / 255.0).epsilon(1e-12));
}

TEST_CASE("png16 quantization") {
    CHECK(quantize_u16(0.5) == 32768);
    testutil::ScratchDir tmp("png16");
    const Image img = testutil::random_image(5, 6, 1, 3);
    const std::string path = tmp.file("img.png");
    save_image(path, img, ImageFormat::png16);
    const Image back = load_image(path, ImageFormat::png16);
    for (size_t i = 0; i < img.data.size(); ++i)
        CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 65535.0 + 1e-12);
}

TEST_CASE("png round-trip is idempotent after one quantization") {
    testutil::ScratchDir tmp("idem");
    const Image img = testutil::random_image(8, 8, 3, 17);
    const std::string a = tmp.file("a.png"), b = tmp.file("b.png");
    save_image(a, img, ImageFormat::png8);
    save_image(b, load_image(a, ImageFormat::png8), ImageFormat::png8);
    CHECK(testutil::read_file_bytes(a) == testutil::read_file_bytes(b));
}

TEST_CASE("error variants: missing, empty, malformed") {
    testutil::ScratchDir tmp("ioerr");

    try {
        load_image(tmp.file("nope.pfm"), ImageFormat::pfm);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.kind() == IoError::Kind::missing_file);
    }

    const std::string empty = tmp.file("empty.pfm");
    std::ofstream(empty).close();
    try {
        load_image(empty, ImageFormat::pfm);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.kind() == IoError::Kind::malformed);
    }

    const std::string junk = tmp.file("junk.png");
    std::ofstream(junk) << "this is not a png";
    try {
        load_image(junk, ImageFormat::png8);
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.kind() == IoError::Kind::malformed);
    }
}

TEST_CASE("depth png16_mm: millimeter encoding round-trips") {
    testutil::ScratchDir tmp("depthmm");
    DepthMap d(3, 3, 1.234);
    const std::string path = tmp.file("d.png");
    save_depth(path, d, DepthFormat::png16_mm);
    DepthLoadReport report;
    const DepthMap back = load_depth(path, DepthFormat::png16_mm, DepthRange{}, &report);
    for (double v : back.data) CHECK(v == doctest::Approx(1.234).epsilon(1e-12));
    CHECK(report.invalid_zero == 0);
    CHECK(report.clamped == 0);
}

TEST_CASE("depth zero pixels are repaired to d_min and counted") {
    testutil::ScratchDir tmp("depthzero");
    DepthMap d(2, 2, 1.0);
    d.data[3] = 0.0;  // stored as a zero sample
    const std::string path = tmp.file("d.png");
    save_depth(path, d, DepthFormat::png16_mm);
    DepthLoadReport report;
    const DepthMap back = load_depth(path, DepthFormat::png16_mm, DepthRange{}, &report);
    CHECK(report.invalid_zero == 1);
    CHECK(back.data[3] == doctest::Approx(0.7));
    CHECK(back.data[0] == doctest::Approx(1.0));
}

TEST_CASE("depth pfm round-trip and range clamping") {
    testutil::ScratchDir tmp("depthpfm");
    DepthMap d(4, 4);
    for (size_t i = 0; i < d.data.size(); ++i)
        d.data[i] = static_cast<double>(static_cast<float>(0.8 + 0.8 * static_cast<double>(i)));
    const std::string path = tmp.file("d.pfm");
    save_depth(path, d, DepthFormat::pfm_m);

    DepthLoadReport report;
    const DepthMap back = load_depth(path, DepthFormat::pfm_m, DepthRange{0.7, 10.0}, &report);
    // values above d_max were clamped; everything else is exact
    int expect_clamped = 0;
    for (size_t i = 0; i < d.data.size(); ++i) {
        if (d.data[i] > 10.0) {
            ++expect_clamped;
            CHECK(back.data[i] == 10.0);
        } else {
            CHECK(back.data[i] == d.data[i]);
        }
    }
    CHECK(report.clamped == expect_clamped);
    CHECK(expect_clamped > 0);
}

TEST_CASE("format detection by magic bytes") {
    testutil::ScratchDir tmp("detect");
    const Image img = f32_image(4, 4, 1, 5);
    save_image(tmp.file("x.pfm"), img, ImageFormat::pfm);
    save_image(tmp.file("x8.png"), img, ImageFormat::png8);
    save_image(tmp.file("x16.png"), img, ImageFormat::png16);
    CHECK(detect_format(tmp.file("x.pfm")) == ImageFormat::pfm);
    CHECK(detect_format(tmp.file("x8.png")) == ImageFormat::png8);
    CHECK(detect_format(tmp.file("x16.png")) == ImageFormat::png16);
}

}  // TEST_SUITE
