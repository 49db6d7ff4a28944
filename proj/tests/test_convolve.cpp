#include <doctest.h>

#include <cmath>

#include "fsdepth/convolve.hpp"
#include "fsdepth/error.hpp"
#include "fsdepth/parallel.hpp"
#include "helpers.hpp"

using namespace fsdepth;

TEST_SUITE("convolve") {

TEST_CASE("laplacian annihilates constant images") {
    Image img(7, 9, 1, 0.6);
    Image out = convolve2d(img, laplacian3_kernel());
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("identity kernel returns the input unchanged") {
    Image img = testutil::random_image(6, 5, 3, 42);
    Image out = convolve2d(img, identity_kernel());
    CHECK(testutil::max_abs_diff(out.data, img.data) == 0.0);
}

TEST_CASE("box kernel on a ramp equals the hand-computed 9-neighborhood mean") {
    Image img(5, 5, 1);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x) img.at(y, x) = (y * 5 + x) / 25.0;
    Image out = convolve2d(img, box_kernel(1));

    // direct 9-term summation at the interior pixel (2, 2)
    double sum = 0.0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) sum += img.at(2 + dy, 2 + dx);
    CHECK(out.at(2, 2) == doctest::Approx(sum / 9.0).epsilon(1e-14));
}

TEST_CASE("convolution is linear") {
    const Image x = testutil::random_image(16, 16, 1, 7);
    const Image y = testutil::random_image(16, 16, 1, 8);
    const double a = 0.37, b = -1.21;
    const Kernel k = gaussian_kernel(1.2);

    Image combo(16, 16, 1);
    for (size_t i = 0; i < combo.data.size(); ++i) combo.data[i] = a * x.data[i] + b * y.data[i];

    const Image lhs = convolve2d(combo, k);
    const Image cx = convolve2d(x, k);
    const Image cy = convolve2d(y, k);
    double max_err = 0.0;
    for (size_t i = 0; i < lhs.data.size(); ++i)
        max_err = std::max(max_err, std::abs(lhs.data[i] - (a * cx.data[i] + b * cy.data[i])));
    CHECK(max_err <= 1e-10);
}

TEST_CASE("symmetric kernel commutes with horizontal flip") {
    const Image img = testutil::random_image(12, 15, 1, 9);
    const Kernel k = gaussian_kernel(1.0);

    Image flipped(12, 15, 1);
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 15; ++x) flipped.at(y, x) = img.at(y, 14 - x);

    const Image a = convolve2d(flipped, k);
    const Image b = convolve2d(img, k);
    double max_err = 0.0;
    for (int y = 2; y < 10; ++y)
        for (int x = 2; x < 13; ++x)
            max_err = std::max(max_err, std::abs(a.at(y, x) - b.at(y, 14 - x)));
    CHECK(max_err <= 1e-12);
}

TEST_CASE("kernel larger than the image is rejected") {
    Image img(4, 4, 1, 0.5);
    CHECK_THROWS_AS(convolve2d(img, box_kernel(4)), DimensionError);
}

TEST_CASE("kernel invariants") {
    CHECK_NOTHROW(validate_kernel(gaussian_kernel(2.0), true, false));
    CHECK_NOTHROW(validate_kernel(box_kernel(3), true, false));
    CHECK_NOTHROW(validate_kernel(laplacian3_kernel(), false, true));
    Kernel bad = box_kernel(1);
    bad.weights[0] += 1e-6;
    CHECK_THROWS_AS(validate_kernel(bad, true, false), NumericError);
}

TEST_CASE("thread count does not change results") {
    const Image img = testutil::random_image(33, 29, 3, 11);
    const Kernel k = gaussian_kernel(1.7);
    set_max_threads(1);
    const Image serial = convolve2d(img, k);
    set_max_threads(4);
    const Image parallel = convolve2d(img, k);
    set_max_threads(0);
    CHECK(serial.data == parallel.data);
}

}  // TEST_SUITE
