#include <catch2/catch_amalgamated.hpp>

#include "wavetrace/geometry.hpp"

#include <random>

using namespace wavetrace;
using Catch::Approx;

TEST_CASE("circle frame and curvature") {
    auto c = BoundaryCurve::circle(1.0);
    CHECK(c.total_length() == Approx(2 * pi).epsilon(1e-12));
    auto f = c.frame(0.0);
    CHECK(f.point.x == Approx(1.0).margin(1e-12));
    CHECK(f.point.y == Approx(0.0).margin(1e-12));
    CHECK(f.inward_normal.x == Approx(-1.0).margin(1e-12));
    CHECK(f.curvature == Approx(1.0).epsilon(1e-12));

    auto c2 = BoundaryCurve::circle(2.0);
    CHECK(c2.total_length() == Approx(4 * pi).epsilon(1e-12));
}

TEST_CASE("ellipse perimeter matches adaptive quadrature oracle") {
    auto e = BoundaryCurve::ellipse(2.0, 1.0);
    // oracle: fine Richardson-refined trapezoid of the speed integrand
    auto speed = [](double t) {
        return std::hypot(2.0 * std::sin(t), 1.0 * std::cos(t));
    };
    auto trap = [&](size_t N) {
        double s = 0;
        for (size_t i = 0; i < N; ++i) s += speed(2 * pi * i / N);
        return s * 2 * pi / N;
    };
    double oracle = trap(1 << 16);
    CHECK(e.total_length() == Approx(oracle).epsilon(1e-11));
    CHECK(e.total_length() == Approx(9.688448).epsilon(1e-6));
}

TEST_CASE("ellipse curvature at the minor-axis vertex") {
    auto e = BoundaryCurve::ellipse(2.0, 1.0);
    double s_top = e.s_of_theta(pi / 2);
    auto f = e.frame(s_top);
    CHECK(f.point.x == Approx(0.0).margin(1e-10));
    CHECK(f.point.y == Approx(1.0).margin(1e-12));
    CHECK(f.curvature == Approx(0.25).epsilon(1e-10));  // b/a^2
}

TEST_CASE("unit tangent and orthogonal inward normal at random points") {
    auto fcurve = BoundaryCurve::fourier(1.0, {0.0, 0.0, 0.05}, {0.0, 0.02});
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> us(0.0, fcurve.total_length());
    double h = 1e-6;
    for (int t = 0; t < 100; ++t) {
        double s = us(rng);
        auto f = fcurve.frame(s);
        CHECK(std::abs(f.tangent.norm() - 1.0) < 1e-12);
        CHECK(std::abs(f.tangent.dot(f.inward_normal)) < 1e-12);
        // |q'(s)| = 1: finite-difference speed in arclength
        Vec2 qp = (fcurve.point(s + h) - fcurve.point(s - h)) / (2 * h);
        CHECK(qp.norm() == Approx(1.0).margin(1e-8));
        // closedness
        Vec2 a = fcurve.point(s), b = fcurve.point(s + fcurve.total_length());
        CHECK((a - b).norm() < 1e-10);
    }
}

TEST_CASE("boundary jets: unit circle graph series") {
    auto c = BoundaryCurve::circle(1.0);
    // 1 - sqrt(1-x^2) = x^2/2 + x^4/8 + ...: f'' = 1, f'''' = 3
    for (double s0 : {0.0, 1.1, 4.0}) {
        auto j = c.boundary_jets(s0, 4);
        CHECK(j[0] == Approx(0.0).margin(1e-12));
        CHECK(j[1] == Approx(0.0).margin(1e-12));
        CHECK(j[2] == Approx(1.0).epsilon(1e-9));
        CHECK(j[3] == Approx(0.0).margin(1e-8));
        CHECK(j[4] == Approx(3.0).epsilon(1e-7));
    }
}

TEST_CASE("boundary jets: ellipse f''(0) equals curvature") {
    auto e = BoundaryCurve::ellipse(2.0, 1.0);
    double s_top = e.s_of_theta(pi / 2);
    auto j = e.boundary_jets(s_top, 2);
    CHECK(j[2] == Approx(0.25).epsilon(1e-9));
    // generic point: f'' == kappa
    double s = 0.37 * e.total_length();
    CHECK(e.boundary_jets(s, 2)[2] == Approx(e.frame(s).curvature).epsilon(1e-8));
}

TEST_CASE("boundary jets of a perturbed circle match a finite-difference oracle") {
    // r(theta) = 1 + 0.05 cos(3 theta); graph over the tangent at theta=0
    auto c = BoundaryCurve::fourier(1.0, {0.0, 0.0, 0.05}, {});
    double s0 = c.s_of_theta(0.0);
    auto f = c.frame(s0);
    auto jets = c.boundary_jets(s0, 6);
    // oracle: evaluate eta(xi) by projecting curve points into the frame and
    // fitting high-order central differences on a uniform xi grid
    auto eta_of_xi = [&](double xi_target) {
        // solve for s with xi(s) = xi_target by bisection around s0
        double lo = s0 - 0.8, hi = s0 + 0.8;
        auto xi = [&](double s) { return (c.point(s) - f.point).dot(f.tangent); };
        while (xi(lo) > xi_target) lo -= 0.2;
        while (xi(hi) < xi_target) hi += 0.2;
        for (int i = 0; i < 80; ++i) {
            double mid = 0.5 * (lo + hi);
            (xi(mid) < xi_target ? lo : hi) = mid;
        }
        double s = 0.5 * (lo + hi);
        return (c.point(s) - f.point).dot(f.inward_normal);
    };
    double h = 0.05;
    // 9-point central difference stencil for f'' at 0
    std::vector<double> v(9);
    for (int i = -4; i <= 4; ++i) v[i + 4] = eta_of_xi(i * h);
    double f2 = (-1.0 / 560 * (v[0] + v[8]) + 8.0 / 315 * (v[1] + v[7]) -
                 1.0 / 5 * (v[2] + v[6]) + 8.0 / 5 * (v[3] + v[5]) - 205.0 / 72 * v[4]) /
                (h * h);
    CHECK(jets[2] == Approx(f2).margin(2e-6));
}

TEST_CASE("reparametrization is idempotent") {
    auto c = BoundaryCurve::fourier(1.0, {0.01, 0.0, 0.05}, {0.02});
    auto c2 = arclength_reparametrize(c, 1e-11);
    CHECK(c2.total_length() == Approx(c.total_length()).epsilon(1e-11));
    for (double s : {0.1, 1.7, 3.3}) {
        CHECK((c2.point(s) - c.point(s)).norm() < 1e-9);
    }
}

TEST_CASE("non-simple curves are rejected") {
    // r(theta) = 1 + 1.2 cos(2 theta) goes negative -> rejected
    CHECK_THROWS_AS(BoundaryCurve::fourier(1.0, {0.0, 1.2}, {}), NonSimpleCurve);
}

TEST_CASE("convexity check") {
    CHECK(BoundaryCurve::ellipse(2.0, 1.0).convex());
    CHECK_FALSE(BoundaryCurve::fourier(1.0, {0.0, 0.0, 0.2}, {}).convex());
}

TEST_CASE("jet order cap") {
    auto c = BoundaryCurve::circle(1.0);
    CHECK_THROWS_AS(c.boundary_jets(0.0, 30), OrderUnavailable);
}
