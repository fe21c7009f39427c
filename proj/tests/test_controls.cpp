#include <doctest.h>

#include "microswim/common.hpp"
#include "microswim/controls.hpp"

using namespace microswim;
namespace ctl = microswim::controls;

namespace {

ctl::ControlSpec field_spec_lateral_only(double bound, int points, double horizon) {
    ctl::ControlSpec spec;
    spec.horizon = horizon;
    spec.channels = {
        {.name = "u1", .fixed = bound},
        {.name = "u2", .fixed = std::nullopt, .points = points, .degree = 3, .lower = -bound, .upper = bound},
        {.name = "u3", .fixed = 0.0},
    };
    return spec;
}

ctl::ControlSpec arm_spec(double lo, double hi, int points, double horizon, bool periodic) {
    ctl::ControlSpec spec;
    spec.horizon = horizon;
    spec.channels = {
        {.name = "left", .fixed = std::nullopt, .points = points, .degree = 2, .lower = lo, .upper = hi, .periodic = periodic},
        {.name = "right", .fixed = std::nullopt, .points = points, .degree = 2, .lower = lo, .upper = hi, .periodic = periodic},
    };
    return spec;
}

}  // namespace

TEST_SUITE("controls") {
    TEST_CASE("decision dimension accounting") {
        CHECK(field_spec_lateral_only(0.01, 40, 3.0).decision_dim() == 40);
        CHECK(arm_spec(0.25, 1.0, 10, 4.0, true).decision_dim() == 18);
        CHECK(arm_spec(0.25, 1.0, 10, 4.0, false).decision_dim() == 20);
    }

    TEST_CASE("midpoint coordinates decode to the zero control") {
        const auto spec = field_spec_lateral_only(0.01, 12, 3.0);
        const auto set = ctl::decode(Vec::Constant(12, 0.5), spec);
        REQUIRE(set.curves.size() == 3);
        for (double t : {0.0, 0.7, 1.9, 3.0}) {
            CHECK(set.curves[0].eval(t) == doctest::Approx(0.01).epsilon(1e-15));
            CHECK(std::abs(set.curves[1].eval(t)) < 1e-15);
            CHECK(set.curves[2].eval(t) == 0.0);
        }
    }

    TEST_CASE("all-ones decision vector saturates the upper bound") {
        const auto spec = field_spec_lateral_only(0.01, 12, 3.0);
        const auto set = ctl::decode(Vec::Ones(12), spec);
        for (double t : {0.0, 1.1, 3.0}) CHECK(set.curves[1].eval(t) == doctest::Approx(0.01).epsilon(1e-13));
    }

    TEST_CASE("fixed channels ignore the decision vector") {
        const auto spec = field_spec_lateral_only(0.01, 8, 2.0);
        Rng rng(6);
        for (int trial = 0; trial < 10; ++trial) {
            Vec x(8);
            for (int i = 0; i < 8; ++i) x[i] = rng.uniform();
            const auto set = ctl::decode(x, spec);
            CHECK(set.curves[0].eval(rng.uniform(0, 2)) == doctest::Approx(0.01).epsilon(1e-15));
            CHECK(set.curves[2].eval(rng.uniform(0, 2)) == 0.0);
        }
    }

    TEST_CASE("periodic channels pin the last control point to the first") {
        const auto spec = arm_spec(0.25, 1.0, 10, 4.0, true);
        Rng rng(9);
        Vec x(18);
        for (int i = 0; i < 18; ++i) x[i] = rng.uniform();
        const auto set = ctl::decode(x, spec);
        for (const auto& curve : set.curves) {
            CHECK(curve.points.back() == curve.points.front());
            CHECK(curve.eval(0.0) == doctest::Approx(curve.eval(4.0)).epsilon(1e-15));
        }
    }

    TEST_CASE("decode rejects dimension mismatches and off-cube coordinates") {
        const auto spec = field_spec_lateral_only(0.01, 12, 3.0);
        CHECK_THROWS_AS(ctl::decode(Vec::Constant(11, 0.5), spec), DimensionError);
        Vec x = Vec::Constant(12, 0.5);
        x[3] = 1.2;
        CHECK_THROWS_AS(ctl::decode(x, spec), DomainError);
    }

    TEST_CASE("decode then encode round-trips the decision vector") {
        const auto spec = arm_spec(0.225, 1.0, 10, 4.0, true);
        Rng rng(41);
        for (int trial = 0; trial < 50; ++trial) {
            Vec x(18);
            for (int i = 0; i < 18; ++i) x[i] = rng.uniform();
            const Vec back = ctl::encode(ctl::decode(x, spec), spec);
            CHECK((back - x).lpNorm<Eigen::Infinity>() < 1e-15);
        }
    }

    TEST_CASE("decoded controls respect their box bounds everywhere") {
        const auto spec = field_spec_lateral_only(0.01, 16, 3.0);
        Rng rng(101);
        for (int trial = 0; trial < 1000; ++trial) {
            Vec x(16);
            for (int i = 0; i < 16; ++i) x[i] = rng.uniform();
            const auto set = ctl::decode(x, spec);
            const double t = rng.uniform(0, 3);
            CHECK(std::abs(set.curves[1].eval(t)) <= 0.01 + 1e-12);
        }
    }

    TEST_CASE("rate_violation is zero for constant arms") {
        CHECK(ctl::rate_violation(bspline::constant_curve(0.5, 0, 4), 0.4) == 0.0);
    }

    TEST_CASE("rate_violation reports the excess of a known ramp") {
        // slope 0.5 over [0, 4] with cap 0.4 leaves an excess of 0.1
        const auto knots = bspline::clamped_uniform_knots(0, 4, 4, 1);
        const bspline::BSplineCurve ramp(1, knots, {0.0, 0.5, 1.0, 1.5, 2.0});
        CHECK(ctl::rate_violation(ramp, 0.4) == doctest::Approx(0.1).epsilon(1e-12));
        CHECK(ctl::rate_violation(ramp, 0.6) == 0.0);
    }

    TEST_CASE("rate bound dominates densely sampled derivatives") {
        Rng rng(67);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> pts(10);
            for (auto& p : pts) p = rng.uniform(0.25, 1.0);
            const bspline::BSplineCurve curve(2, bspline::clamped_uniform_knots(0, 4, 8, 2), pts);
            const double bound = ctl::rate_bound(curve);
            const auto d = curve.derivative();
            for (int s = 0; s <= 1000; ++s) {
                const double t = 4.0 * s / 1000;
                CHECK(std::abs(d.eval(t)) <= bound + 1e-12);
            }
        }
    }
}
