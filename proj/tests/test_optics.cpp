#include <doctest.h>

#include <cmath>
#include <random>

#include "fsdepth/error.hpp"
#include "fsdepth/optics.hpp"
#include "helpers.hpp"

using namespace fsdepth;

namespace {

LensConfig default_lens() { return LensConfig{}; }

}  // namespace

TEST_SUITE("optics") {

TEST_CASE("coc is zero at the in-focus plane") {
    CHECK(coc_diameter_px(1.0, 1.0, default_lens()) == 0.0);
    CHECK(coc_diameter_px(2.4, 2.4, default_lens()) == 0.0);
}

TEST_CASE("coc hand-evaluated example: f=25mm f/2, focus 1m, depth 2m") {
    const LensConfig lens = default_lens();
    // (0.0125 * 0.025 * 1.0 / 0.975) * |0.5 - 1.0| / 1e-5
    const double expected = (0.0125 * 0.025 * 1.0 / 0.975) * 0.5 / 1e-5;
    CHECK(coc_diameter_px(2.0, 1.0, lens) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(coc_diameter_px(2.0, 1.0, lens) == doctest::Approx(16.03).epsilon(1e-3));
}

TEST_CASE("coc saturates toward the diopter asymptote for distant scenes") {
    const LensConfig lens = default_lens();
    const double asymptote = (0.0125 * 0.025 * 1.0 / 0.975) * 1.0 / 1e-5;  // ~32.05 px
    CHECK(coc_diameter_px(1e9, 1.0, lens) == doctest::Approx(asymptote).epsilon(1e-6));
}

TEST_CASE("coc is linear in the diopter offset") {
    const LensConfig lens = default_lens();
    const double focus = 1.2;
    for (double offset : {0.05, 0.11, 0.31}) {
        const double d1 = 1.0 / (1.0 / focus - offset);
        const double d2 = 1.0 / (1.0 / focus - 2.0 * offset);
        const double c1 = coc_diameter_px(d1, focus, lens);
        const double c2 = coc_diameter_px(d2, focus, lens);
        CHECK(std::abs(c2 - 2.0 * c1) <= 1e-12 * std::max(1.0, c2));
    }
}

TEST_CASE("depth below focal length is a domain error") {
    CHECK_THROWS_AS(coc_diameter_px(0.01, 1.0, default_lens()), DomainError);
    CHECK_THROWS_AS(coc_diameter_px(1.0, 0.01, default_lens()), DomainError);
}

TEST_CASE("coc gradient: kink convention and hand-evaluated value") {
    const LensConfig lens = default_lens();
    CHECK(coc_depth_gradient(1.0, 1.0, lens) == 0.0);
    // sign(0.5-1.0) = -1, so dc/dd = 3.2051e-4 * (-1) * (-0.25) / 1e-5
    const double expected = (0.0125 * 0.025 / 0.975) * 0.25 / 1e-5;
    CHECK(coc_depth_gradient(2.0, 1.0, lens) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(coc_depth_gradient(2.0, 1.0, lens) == doctest::Approx(8.01).epsilon(1e-3));
}

TEST_CASE("coc gradient matches central finite differences away from the kink") {
    const LensConfig lens = default_lens();
    std::mt19937_64 rng(2024);
    const double h = 1e-6;
    int checked = 0;
    while (checked < 100) {
        const double depth = 0.8 + 8.0 * testutil::uniform01(rng);
        const double focus = 0.8 + 4.2 * testutil::uniform01(rng);
        if (std::abs(1.0 / depth - 1.0 / focus) < 1e-2) continue;  // keep clear of the kink
        const double analytic = coc_depth_gradient(depth, focus, lens);
        const double fd = (coc_diameter_px(depth + h, focus, lens) -
                           coc_diameter_px(depth - h, focus, lens)) /
                          (2.0 * h);
        CHECK(std::abs(analytic - fd) <= 1e-6 * std::max(std::abs(analytic), std::abs(fd)));
        ++checked;
    }
}

TEST_CASE("dof limits: hand-evaluated diopter half-width at 1 px threshold") {
    const LensConfig lens = default_lens();
    const DofLimits lim = dof_limits(1.0, lens, 1.0);
    const double w = 1.0 * 1e-5 / (0.0125 * 0.025 * 1.0 / 0.975);  // ~0.0312 diopters
    CHECK(lim.near_m == doctest::Approx(1.0 / (1.0 + w)).epsilon(1e-12));
    CHECK(lim.far_m == doctest::Approx(1.0 / (1.0 - w)).epsilon(1e-12));
    CHECK(lim.near_m == doctest::Approx(0.9697).epsilon(1e-3));
    CHECK(lim.far_m == doctest::Approx(1.0322).epsilon(1e-3));
}

TEST_CASE("dof limits shrink to the focus plane as the threshold vanishes") {
    const LensConfig lens = default_lens();
    const DofLimits lim = dof_limits(1.6, lens, 1e-12);
    CHECK(lim.near_m == doctest::Approx(1.6).epsilon(1e-9));
    CHECK(lim.far_m == doctest::Approx(1.6).epsilon(1e-9));
}

TEST_CASE("dof far limit goes hyperfocal") {
    const LensConfig lens = default_lens();
    // half-width >= 0.2 diopters swallows 1/5 m
    const double threshold = 0.21 * coc_px_per_diopter(5.0, lens);
    CHECK(std::isinf(dof_limits(5.0, lens, threshold).far_m));
}

TEST_CASE("coc at the dof limits reproduces the threshold") {
    const LensConfig lens = default_lens();
    for (double focus : {0.8, 1.2, 5.0}) {
        const double threshold = 2.5;
        const DofLimits lim = dof_limits(focus, lens, threshold);
        CHECK(std::abs(coc_diameter_px(lim.near_m, focus, lens) - threshold) <= 1e-9);
        if (!std::isinf(lim.far_m))
            CHECK(std::abs(coc_diameter_px(lim.far_m, focus, lens) - threshold) <= 1e-9);
    }
}

TEST_CASE("default schedule matches the six canonical distances") {
    const FocusSchedule s = default_schedule();
    REQUIRE(s.size() == 6);
    CHECK(s.distances_m.front() == 0.8);
    CHECK(s.distances_m.back() == 5.0);
    CHECK(s.distances_m == std::vector<double>{0.8, 1.0, 1.2, 1.6, 2.4, 5.0});
    CHECK_NOTHROW(validate_schedule(s, DepthRange{}));

    // adjacent diopter gaps, hand-computed
    const double expected[5] = {0.25, 0.1667, 0.2083, 0.2083, 0.2167};
    for (int i = 0; i < 5; ++i) {
        const double gap = 1.0 / s.distances_m[i] - 1.0 / s.distances_m[i + 1];
        CHECK(gap == doctest::Approx(expected[i]).epsilon(5e-4));
    }
}

TEST_CASE("schedule invariants reject non-increasing distances") {
    CHECK_THROWS_AS(validate_schedule(FocusSchedule{{1.0, 1.0}}, DepthRange{}), DomainError);
    CHECK_THROWS_AS(validate_schedule(FocusSchedule{{1.2, 0.8}}, DepthRange{}), DomainError);
    CHECK_THROWS_AS(validate_schedule(FocusSchedule{{}}, DepthRange{}), DomainError);
    CHECK_THROWS_AS(validate_schedule(FocusSchedule{{0.5}}, DepthRange{}), DomainError);
}

TEST_CASE("tiling audit at the contact-calibrated threshold") {
    const LensConfig lens = default_lens();
    const FocusSchedule schedule = default_schedule();
    const double threshold = contact_coc_threshold(schedule, lens);

    // calibration: mean half width = half the mean diopter gap (~0.105)
    double mean_scale = 0.0;
    for (double d : schedule.distances_m) mean_scale += coc_px_per_diopter(d, lens);
    mean_scale /= 6.0;
    CHECK(threshold / mean_scale == doctest::Approx(0.105).epsilon(1e-2));

    const TilingReport report =
        check_schedule_tiling(schedule, lens, threshold, DepthRange{});
    REQUIRE(report.pairs.size() == 5);
    for (const auto& pair : report.pairs) {
        // independent recomputation of the signed gap
        const double d_i = schedule.distances_m[pair.index];
        const double d_n = schedule.distances_m[pair.index + 1];
        const double w_i = threshold / coc_px_per_diopter(d_i, lens);
        const double w_n = threshold / coc_px_per_diopter(d_n, lens);
        const double expected = (1.0 / d_i - 1.0 / d_n) - (w_i + w_n);
        CHECK(pair.gap_diopters == doctest::Approx(expected).epsilon(1e-12));
        CHECK(std::abs(pair.gap_diopters) <= 0.045);
    }
}

TEST_CASE("tiling audit with a vanishing threshold reports the full spacing") {
    const LensConfig lens = default_lens();
    const FocusSchedule schedule = default_schedule();
    const TilingReport report = check_schedule_tiling(schedule, lens, 1e-9, DepthRange{});
    for (const auto& pair : report.pairs) {
        const double spacing = 1.0 / schedule.distances_m[pair.index] -
                               1.0 / schedule.distances_m[pair.index + 1];
        CHECK(pair.gap_diopters == doctest::Approx(spacing).epsilon(1e-6));
    }
}

TEST_CASE("tiling audit coverage booleans are reported faithfully") {
    const LensConfig lens = default_lens();
    const FocusSchedule schedule = default_schedule();
    const double threshold = contact_coc_threshold(schedule, lens);
    const TilingReport report =
        check_schedule_tiling(schedule, lens, threshold, DepthRange{0.7, 10.0});

    // independent: near limit of the closest slice at this calibration
    const double w0 = threshold / coc_px_per_diopter(0.8, lens);
    const double near = 1.0 / (1.0 / 0.8 + w0);
    CHECK(report.near_limit_m == doctest::Approx(near).epsilon(1e-12));
    CHECK(report.covers_near == (near <= 0.7));
    CHECK(report.covers_far == (report.far_limit_m >= 10.0));
    CHECK(report.covers_far);  // 0.2 - w < 0.1 diopters pushes the far limit past 10 m
}

TEST_CASE("lens invariants") {
    LensConfig lens = default_lens();
    CHECK_NOTHROW(validate_lens(lens, DepthRange{}));
    lens.f_number = -1.0;
    CHECK_THROWS_AS(validate_lens(lens, DepthRange{}), DomainError);
    lens = default_lens();
    lens.focal_length_m = 0.8;  // not shorter than d_min
    CHECK_THROWS_AS(validate_lens(lens, DepthRange{}), DomainError);
}

}  // TEST_SUITE
