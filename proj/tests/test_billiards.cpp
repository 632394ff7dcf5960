#include <catch2/catch_amalgamated.hpp>

#include "wavetrace/billiards.hpp"

#include <random>

using namespace wavetrace;
using Catch::Approx;

namespace {
const BoundaryCurve& unit_circle() {
    static auto c = BoundaryCurve::circle(1.0);
    return c;
}
const BoundaryCurve& ell21() {
    static auto c = BoundaryCurve::ellipse(2.0, 1.0);
    return c;
}
}  // namespace

TEST_CASE("closed length functional on the circle") {
    CHECK(length(unit_circle(), {0.0, pi}) == Approx(4.0).epsilon(1e-12));
    CHECK(length(unit_circle(), {0.0, 2 * pi / 3, 4 * pi / 3}) ==
          Approx(3 * std::sqrt(3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(length(unit_circle(), {0.0, 0.0}), SingularConfig);
}

TEST_CASE("gradient vanishes on regular polygons and matches finite differences") {
    auto g = length_gradient(unit_circle(), {0.0, pi / 2, pi, 3 * pi / 2});
    CHECK(g.lpNorm<Eigen::Infinity>() < 1e-12);

    // 2-link config: equal-and-opposite components by reflection symmetry
    auto g2 = length_gradient(unit_circle(), {0.0, pi - 0.3});
    CHECK(g2[0] == Approx(-g2[1]).margin(1e-12));

    // random non-critical config on the ellipse vs central differences
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, ell21().total_length());
    for (int t = 0; t < 5; ++t) {
        PolygonConfig cfg = {u(rng), u(rng), u(rng)};
        try {
            detail::check_nonsingular(ell21(), cfg, {});
        } catch (const SingularConfig&) {
            continue;
        }
        auto g3 = length_gradient(ell21(), cfg);
        double h = 1e-6;
        for (int j = 0; j < 3; ++j) {
            PolygonConfig cp = cfg, cm = cfg;
            cp[j] += h;
            cm[j] -= h;
            double fd = (length(ell21(), cp) - length(ell21(), cm)) / (2 * h);
            CHECK(std::abs(g3[j] - fd) < 1e-6);
        }
    }
}

TEST_CASE("Hessian: circle diameter and finite-difference oracle") {
    auto [H, b] = length_hessian(unit_circle(), {0.0, pi});
    CHECK(H(0, 0) == Approx(-1.0).margin(1e-10));
    CHECK(H(0, 1) == Approx(1.0).margin(1e-10));
    CHECK(H(1, 1) == Approx(-1.0).margin(1e-10));
    CHECK(H.determinant() == Approx(0.0).margin(1e-10));
    CHECK(b[0] == Approx(0.5).margin(1e-10));

    // FD Hessian on a generic ellipse config
    PolygonConfig cfg = {0.3, 3.1, 6.0};
    auto [He, be] = length_hessian(ell21(), cfg);
    double h = 1e-4;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            PolygonConfig cpp = cfg, cpm = cfg, cmp = cfg, cmm = cfg;
            cpp[i] += h;
            cpp[j] += h;
            cpm[i] += h;
            cpm[j] -= h;
            cmp[i] -= h;
            cmp[j] += h;
            cmm[i] -= h;
            cmm[j] -= h;
            double fd = (length(ell21(), cpp) - length(ell21(), cpm) - length(ell21(), cmp) +
                         length(ell21(), cmm)) /
                        (4 * h * h);
            CHECK(std::abs(He(i, j) - fd) < 1e-5);
        }

    // minor-axis orbit: non-degenerate, known entries
    double P = ell21().total_length();
    auto orb = find_periodic_orbit(ell21(), 2, {0.25 * P, 0.75 * P});
    CHECK(std::abs(orb.det_hessian) > 1e-3);
    CHECK(orb.det_hessian == Approx(-0.75).epsilon(1e-8));
}

TEST_CASE("billiard map on the circle") {
    auto s1 = billiard_map(unit_circle(), {0.0, 0.0});
    CHECK(s1.phi == Approx(pi).margin(1e-9));
    CHECK(s1.p == Approx(0.0).margin(1e-10));

    double p0 = std::sin(pi / 4);
    auto s2 = billiard_map(unit_circle(), {0.0, p0});
    CHECK(s2.phi == Approx(pi / 2).margin(1e-9));
    CHECK(s2.p == Approx(p0).epsilon(1e-9));
    CHECK_THROWS_AS(billiard_map(unit_circle(), {0.0, 1.0}), GrazingRay);
}

TEST_CASE("ellipse billiard conserves the Joachimsthal invariant over 50 iterates") {
    // J = <D x, v> with D = diag(1/a^2, 1/b^2), x the point, v the unit direction
    const double a = 2.0, b = 1.0;
    auto J = [&](const BilliardState& st) {
        CurveFrame f = ell21().frame(st.phi);
        double c = std::sqrt(1 - st.p * st.p);
        Vec2 v = st.p * f.tangent + c * f.inward_normal;
        return (f.point.x / (a * a)) * v.x + (f.point.y / (b * b)) * v.y;
    };
    BilliardState st{0.7, 0.31};
    double j0 = J(st);
    for (int it = 0; it < 50; ++it) {
        st = billiard_map(ell21(), st);
        CHECK(std::abs(J(st) - std::abs(j0) * (j0 > 0 ? 1 : -1)) < 1e-9);
    }
}

TEST_CASE("billiard map is symplectic (unit Jacobian) at random states") {
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> up(-0.8, 0.8);
    for (const BoundaryCurve* c : {&unit_circle(), &ell21()}) {
        std::uniform_real_distribution<double> us(0.0, c->total_length());
        for (int t = 0; t < 12; ++t) {
            BilliardState st{us(rng), up(rng)};
            double h = 1e-6;
            auto fp = billiard_map(*c, {st.phi + h, st.p});
            auto fm = billiard_map(*c, {st.phi - h, st.p});
            auto gp = billiard_map(*c, {st.phi, st.p + h});
            auto gm = billiard_map(*c, {st.phi, st.p - h});
            double det = ((fp.phi - fm.phi) * (gp.p - gm.p) - (gp.phi - gm.phi) * (fp.p - fm.p)) /
                         (4 * h * h);
            CHECK(det == Approx(1.0).margin(2e-5));
        }
    }
}

TEST_CASE("orbit search on the circle: triangle found, diameter degenerate") {
    auto orbs = find_periodic_orbits(unit_circle(), 3);
    bool triangle = false;
    for (auto& o : orbs)
        if (std::abs(o.length - 3 * std::sqrt(3.0)) < 1e-9) triangle = true;
    CHECK(triangle);

    auto diams = find_periodic_orbits(unit_circle(), 2);
    REQUIRE(!diams.empty());
    CHECK(diams[0].length == Approx(4.0).epsilon(1e-10));
    CHECK(diams[0].stability == Stability::degenerate);
}

TEST_CASE("ellipse axes: Poincare data, stability, Hessian identity") {
    double P = ell21().total_length();
    auto minor = find_periodic_orbit(ell21(), 2, {0.25 * P, 0.75 * P});
    CHECK(minor.length == Approx(4.0).epsilon(1e-10));
    CHECK(minor.stability == Stability::elliptic);
    CHECK(minor.det_i_minus_p == Approx(3.0).epsilon(1e-8));
    CHECK(minor.det_i_minus_p == Approx(minor.det_i_minus_p_monodromy).margin(1e-6));
    CHECK(minor.elliptic_angle == Approx(2 * pi / 3).epsilon(1e-6));

    auto major = find_periodic_orbit(ell21(), 2, {0.0, 0.5 * P});
    CHECK(major.length == Approx(8.0).epsilon(1e-10));
    CHECK(major.stability == Stability::hyperbolic);
    CHECK(major.det_i_minus_p == Approx(major.det_i_minus_p_monodromy).margin(2e-4));

    PeriodicOrbit diam;
    diam.vertices = {0.0, pi};
    diam.hessian = Eigen::MatrixXd::Zero(2, 2);
    diam.hessian << -1, 1, 1, -1;
    diam.b_offdiag = {0.5, 0.5};
    diam.det_hessian = 0.0;
    CHECK_THROWS_AS(poincare_data(unit_circle(), diam), DegenerateOrbit);
}

TEST_CASE("time reversal invariance of orbit data") {
    // non-integrable perturbed circle: generic 3-orbit is non-degenerate
    auto c = BoundaryCurve::fourier(1.0, {0.0, 0.03, 0.02}, {});
    double P = c.total_length();
    auto orb = find_periodic_orbit(c, 3, {0.0, P / 3, 2 * P / 3});
    PolygonConfig rev = orb.vertices;
    std::reverse(rev.begin(), rev.end());
    auto orb2 = find_periodic_orbit(c, 3, rev);
    CHECK(orb2.length == Approx(orb.length).epsilon(1e-12));
    auto [H1, b1] = length_hessian(c, orb.vertices);
    auto [H2, b2] = length_hessian(c, rev);
    CHECK(std::abs(orb.det_hessian) > 1e-8);  // non-degenerate on this table
    CHECK(H1.determinant() == Approx(H2.determinant()).epsilon(1e-9));
    CHECK(orb2.det_i_minus_p == Approx(orb.det_i_minus_p).epsilon(1e-8));
}

TEST_CASE("angle extension: cos angle ~ -1/2 kappa |gap| with our normal convention") {
    // paper's Prop (see docs): with the inward normal we measure the slope of
    // cos angle(q(phi')-q(phi), nu_{q(phi)}) in |phi'-phi| and compare kappa/2
    auto& c = ell21();
    double s0 = 1.1;
    double kappa = c.frame(s0).curvature;
    auto cosang = [&](double gap) {
        CurveFrame f = c.frame(s0);
        Vec2 d = c.point(s0 + gap) - f.point;
        return d.dot(f.inward_normal) / d.norm();
    };
    // slope fit on shrinking gaps
    double g1 = 1e-3, g2 = 5e-4;
    double slope = (cosang(g1) - cosang(g2)) / (g1 - g2);
    CHECK(slope == Approx(0.5 * kappa).epsilon(1e-2));
}

TEST_CASE("length spectrum of the unit circle up to 7") {
    auto spec = enumerate_length_spectrum(unit_circle(), 7.0);
    auto has = [&](double L, int p, int q) {
        for (auto& e : spec)
            if (e.rotation == std::make_pair(p, q) && std::abs(e.length - L) < 1e-8) return true;
        return false;
    };
    CHECK(has(4.0, 1, 2));
    CHECK(has(2 * 3 * std::sin(pi / 3), 1, 3));
    CHECK(has(2 * 4 * std::sin(pi / 4), 1, 4));
    CHECK(has(2 * 5 * std::sin(pi / 5), 1, 5));
    CHECK(has(2 * 6 * std::sin(pi / 6), 1, 6));
    // (2,5) has length 10 sin(2 pi/5) ~ 9.51 > 7: must be absent
    CHECK_FALSE(has(2 * 5 * std::sin(2 * pi / 5), 2, 5));
    CHECK(has(2 * pi, 0, 1));  // boundary length
    // every transversal entry satisfies the gradient postcondition
    for (auto& e : spec)
        if (e.orbit)
            CHECK(length_gradient(unit_circle(), e.orbit->vertices).lpNorm<Eigen::Infinity>() <
                  1e-11);
}

TEST_CASE("length spectrum of the ellipse includes both axes") {
    auto spec = enumerate_length_spectrum(ell21(), 9.0, {}, 8);
    bool minor = false, major = false;
    for (auto& e : spec) {
        if (std::abs(e.length - 4.0) < 1e-8) minor = true;
        if (std::abs(e.length - 8.0) < 1e-8) major = true;
    }
    CHECK(minor);
    CHECK(major);
    CHECK_THROWS_AS(enumerate_length_spectrum(BoundaryCurve::fourier(1.0, {0.0, 0.0, 0.2}, {}), 7.0),
                    NonConvexCurve);
}

TEST_CASE("interior length gradient vanishes on orbit chords") {
    double P = ell21().total_length();
    auto orb = find_periodic_orbit(ell21(), 2, {0.25 * P, 0.75 * P});
    Vec2 mid = (ell21().point(orb.vertices[0]) + ell21().point(orb.vertices[1])) * 0.5;
    Vec2 g = interior_length_gradient(ell21(), mid, orb.vertices[0], orb.vertices[1]);
    CHECK(g.norm() < 1e-9);
}
