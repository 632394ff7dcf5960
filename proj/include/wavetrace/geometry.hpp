#pragma once

// Smooth closed plane curves in arclength parametrization: evaluation frames
// (point, tangent, inward normal, signed curvature), high-order arclength
// jets, and local graph jets over the tangent line.
//
// Conventions: curves are parametrized counter-clockwise; the inward normal
// is the 90-degree ccw rotation of the unit tangent; curvature is positive
// for a convex boundary (unit circle has kappa = +1). Graph jets are taken in
// the frame whose abscissa is the tangent and whose ordinate is the inward
// normal, so f(0) = f'(0) = 0 and f''(0) = kappa.

#include "common.hpp"
#include "jets.hpp"

#include <cstdint>
#include <cstdio>
#include <optional>

namespace wavetrace {

enum class CurveShape { circle, ellipse, fourier, graph_pair };

struct CurveFrame {
    Vec2 point;
    Vec2 tangent;
    Vec2 inward_normal;
    double curvature = 0.0;
};

class BoundaryCurve {
  public:
    // --- constructors -------------------------------------------------------

    static BoundaryCurve circle(double radius, double reparam_tol = 1e-11) {
        BoundaryCurve c;
        c.shape_ = CurveShape::circle;
        c.r0_ = radius;
        c.build(reparam_tol);
        return c;
    }

    static BoundaryCurve ellipse(double a, double b, double reparam_tol = 1e-11) {
        BoundaryCurve c;
        c.shape_ = CurveShape::ellipse;
        c.ea_ = a;
        c.eb_ = b;
        c.build(reparam_tol);
        return c;
    }

    // r(theta) = r0 + sum_j cos_coef[j-1] cos(j theta) + sin_coef[j-1] sin(j theta)
    static BoundaryCurve fourier(double r0, std::vector<double> cos_coef,
                                 std::vector<double> sin_coef, double reparam_tol = 1e-11) {
        BoundaryCurve c;
        c.shape_ = CurveShape::fourier;
        c.r0_ = r0;
        c.fc_ = std::move(cos_coef);
        c.fs_ = std::move(sin_coef);
        c.build(reparam_tol);
        return c;
    }

    // Declared reflection symmetries of the shape (used by orbit dedup).
    bool symmetric_x() const {  // invariant under y -> -y
        if (shape_ == CurveShape::circle || shape_ == CurveShape::ellipse) return true;
        for (double b : fs_)
            if (b != 0.0) return false;
        return true;
    }
    bool symmetric_y() const {  // invariant under x -> -x
        if (shape_ == CurveShape::circle || shape_ == CurveShape::ellipse) return true;
        for (size_t j = 0; j < fc_.size(); j += 2)
            if (fc_[j] != 0.0) return false;  // odd harmonics break it
        for (size_t j = 1; j < fs_.size(); j += 2)
            if (fs_[j] != 0.0) return false;
        return true;
    }

    // --- arclength interface ------------------------------------------------

    double total_length() const { return length_; }
    double reparam_tol() const { return tol_; }
    CurveShape shape() const { return shape_; }

    double theta_of_s(double s) const {
        s = wrap(s, length_);
        // bracket on the table, then Newton on A(theta) = s
        size_t lo = size_t((s / length_) * (sgrid_.size() - 1));
        while (lo + 1 < sgrid_.size() && sgrid_[lo + 1] < s) ++lo;
        while (lo > 0 && sgrid_[lo] > s) --lo;
        double t0 = tgrid_[lo], t1 = tgrid_[lo + 1];
        double th = t0 + (t1 - t0) * (s - sgrid_[lo]) /
                             std::max(sgrid_[lo + 1] - sgrid_[lo], 1e-300);
        for (int it = 0; it < 8; ++it) {
            double f = arc_from(lo, th) + sgrid_[lo] - s;
            double d = speed(th);
            double step = f / d;
            th -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(th))) break;
        }
        return th;
    }

    double s_of_theta(double theta) const {
        theta = wrap(theta, 2 * pi);
        size_t lo = std::min(size_t(theta / (2 * pi) * (tgrid_.size() - 1)), tgrid_.size() - 2);
        return sgrid_[lo] + arc_from(lo, theta);
    }

    CurveFrame frame(double s) const {
        double th = theta_of_s(s);
        Vec2 q = raw_point(th), d1 = raw_d1(th), d2 = raw_d2(th);
        double sp = d1.norm();
        Vec2 T = d1 / sp;
        CurveFrame f;
        f.point = q;
        f.tangent = T;
        f.inward_normal = T.rot90();
        f.curvature = d1.cross(d2) / (sp * sp * sp);
        return f;
    }

    Vec2 point(double s) const { return raw_point(theta_of_s(s)); }

    // d^m q / d s^m for m = 0..order, as series coefficients times m!
    // (i.e. the Taylor coefficients of q(s0 + u) in u are returned).
    std::pair<Jet1<long double>, Jet1<long double>> arclength_jets(double s0, int order) const {
        if (order > max_jet_order) throw OrderUnavailable("arclength jet order cap exceeded");
        double th0 = theta_of_s(s0);
        auto [xj, yj] = raw_jets(th0, order + 1);
        // s(theta0+v) - s0 as a series in v, then invert and compose
        Jet1<long double> d1x = xj.derivative(), d1y = yj.derivative();
        Jet1<long double> sp = jet_sqrt(d1x * d1x + d1y * d1y);  // speed series, order
        Jet1<long double> svj(order + 1);                        // arclength increment series
        for (int m = 0; m <= order; ++m) svj.c[m + 1] = sp[m] / (long double)(m + 1);
        Jet1<long double> v_of_u = jet_revert(svj);  // v(u), u = s - s0
        std::vector<long double> xc = xj.c, yc = yj.c;
        // recenter: compose x(theta0 + v(u)) -- xj is already a series in v
        Jet1<long double> X = v_of_u.compose_outer(xc);
        Jet1<long double> Y = v_of_u.compose_outer(yc);
        X.c.resize(order + 1);
        Y.c.resize(order + 1);
        return {X, Y};
    }

    // Taylor coefficients a_0..a_order of the boundary as a graph over the
    // tangent line at s0 (ordinate = inward normal): f(xi) = sum a_m xi^m,
    // with a_0 = a_1 = 0 and 2 a_2 = curvature. Returns the f^{(m)}(0) values.
    std::vector<double> boundary_jets(double s0, int order) const {
        auto [X, Y] = arclength_jets(s0, order + 2);
        CurveFrame f = frame(s0);
        Jet1<long double> xi(X.order()), eta(X.order());
        for (int m = 0; m <= X.order(); ++m) {
            long double dx = X[m] - (m == 0 ? (long double)f.point.x : 0.0L);
            long double dy = Y[m] - (m == 0 ? (long double)f.point.y : 0.0L);
            xi.c[m] = dx * (long double)f.tangent.x + dy * (long double)f.tangent.y;
            eta.c[m] = dx * (long double)f.inward_normal.x + dy * (long double)f.inward_normal.y;
        }
        // graph series: eta as a function of xi; xi'(0) = 1
        Jet1<long double> u_of_xi = jet_revert(xi);
        Jet1<long double> g = u_of_xi.compose_outer(eta.c);
        std::vector<double> out(order + 1, 0.0);
        double fact = 1.0;
        for (int m = 0; m <= order; ++m) {
            if (m > 0) fact *= m;
            out[m] = double(g[m]) * fact;
        }
        out[0] = 0.0;
        out[1] = 0.0;  // tangency by construction
        return out;
    }

    bool convex(int samples = 720) const {
        for (int i = 0; i < samples; ++i)
            if (frame(length_ * i / samples).curvature <= 0.0) return false;
        return true;
    }

    double area(int samples = 1 << 14) const {  // shoelace on the raw curve
        double A = 0.0;
        for (int i = 0; i < samples; ++i) {
            Vec2 p = raw_point(2 * pi * i / samples), q = raw_point(2 * pi * (i + 1) / samples);
            A += p.cross(q);
        }
        return 0.5 * A;
    }

    // Stable identifier for operator dumps and manifests.
    std::string describe() const {
        char buf[256];
        switch (shape_) {
            case CurveShape::circle:
                std::snprintf(buf, sizeof buf, "circle(%.17g)", r0_);
                return buf;
            case CurveShape::ellipse:
                std::snprintf(buf, sizeof buf, "ellipse(%.17g,%.17g)", ea_, eb_);
                return buf;
            default: {
                std::string s = shape_ == CurveShape::graph_pair ? "graph_pair[" : "fourier[";
                std::snprintf(buf, sizeof buf, "%.17g", r0_);
                s += buf;
                for (double c : fc_) {
                    std::snprintf(buf, sizeof buf, ",c%.17g", c);
                    s += buf;
                }
                for (double c : fs_) {
                    std::snprintf(buf, sizeof buf, ",s%.17g", c);
                    s += buf;
                }
                return s + "]";
            }
        }
    }

    void rebuild(double reparam_tol) { build(reparam_tol); }

    // All supported shapes are star-shaped about the origin.
    bool contains(const Vec2& x) const {
        if (shape_ == CurveShape::ellipse)
            return (x.x / ea_) * (x.x / ea_) + (x.y / eb_) * (x.y / eb_) < 1.0;
        double th = std::atan2(x.y, x.x);
        return x.norm() < radius(th);
    }

    // Raw-parameter access (used by the graph-pair fit and tests).
    Vec2 raw_point(double th) const {
        switch (shape_) {
            case CurveShape::ellipse: return {ea_ * std::cos(th), eb_ * std::sin(th)};
            default: {
                double r = radius(th);
                return {r * std::cos(th), r * std::sin(th)};
            }
        }
    }

    static constexpr int max_jet_order = 24;

  private:
    friend BoundaryCurve graph_pair_curve(const std::vector<double>&, const std::vector<double>&,
                                          double, int, double);

    CurveShape shape_ = CurveShape::circle;
    double r0_ = 1.0, ea_ = 1.0, eb_ = 1.0;
    std::vector<double> fc_, fs_;
    // graph-pair metadata (the realized curve itself is the Fourier data)
    std::vector<double> gp_fplus_, gp_fminus_;
    double gp_separation_ = 0.0;

    double tol_ = 1e-11;
    double length_ = 0.0;
    std::vector<double> tgrid_, sgrid_;  // uniform theta grid, cumulative arclength

    double radius(double th) const {
        double r = r0_;
        for (size_t j = 0; j < fc_.size(); ++j) r += fc_[j] * std::cos((j + 1) * th);
        for (size_t j = 0; j < fs_.size(); ++j) r += fs_[j] * std::sin((j + 1) * th);
        return r;
    }
    double radius_d(double th, int m) const {  // m-th theta derivative of r
        double r = 0.0;
        for (size_t j = 0; j < fc_.size(); ++j) {
            double w = std::pow(double(j + 1), m);
            double ph = (j + 1) * th + m * pi / 2;
            r += fc_[j] * w * std::cos(ph);
        }
        for (size_t j = 0; j < fs_.size(); ++j) {
            double w = std::pow(double(j + 1), m);
            double ph = (j + 1) * th + m * pi / 2;
            r += fs_[j] * w * std::sin(ph);
        }
        return r;
    }

    Vec2 raw_d1(double th) const {
        switch (shape_) {
            case CurveShape::ellipse: return {-ea_ * std::sin(th), eb_ * std::cos(th)};
            default: {
                double r = radius(th), rp = radius_d(th, 1);
                return {rp * std::cos(th) - r * std::sin(th), rp * std::sin(th) + r * std::cos(th)};
            }
        }
    }
    Vec2 raw_d2(double th) const {
        switch (shape_) {
            case CurveShape::ellipse: return {-ea_ * std::cos(th), -eb_ * std::sin(th)};
            default: {
                double r = radius(th), rp = radius_d(th, 1), rpp = radius_d(th, 2);
                return {rpp * std::cos(th) - 2 * rp * std::sin(th) - r * std::cos(th),
                        rpp * std::sin(th) + 2 * rp * std::cos(th) - r * std::sin(th)};
            }
        }
    }

    double speed(double th) const { return raw_d1(th).norm(); }

    // Series of x(th0+v), y(th0+v) to the given order.
    std::pair<Jet1<long double>, Jet1<long double>> raw_jets(double th0, int order) const {
        using LJ = Jet1<long double>;
        // series of sin(phase + freq v): c_m = freq^m sin(phase + m pi/2)/m!
        auto lsin = [&](long double freq, long double phase) {
            LJ out(order);
            long double w = 1.0L;
            for (int m = 0; m <= order; ++m) {
                out.c[m] = w * std::sin(phase + m * (long double)pi / 2.0L);
                w *= freq / (long double)(m + 1);
            }
            return out;
        };
        auto lcos = [&](long double freq, long double phase) {
            return lsin(freq, phase + (long double)pi / 2.0L);
        };
        if (shape_ == CurveShape::ellipse) {
            LJ X = lcos(1.0L, th0) * (long double)ea_;
            LJ Y = lsin(1.0L, th0) * (long double)eb_;
            return {X, Y};
        }
        LJ r(order, (long double)r0_);
        for (size_t j = 0; j < fc_.size(); ++j)
            r = r + lcos((long double)(j + 1), (long double)((j + 1) * th0)) * (long double)fc_[j];
        for (size_t j = 0; j < fs_.size(); ++j)
            r = r + lsin((long double)(j + 1), (long double)((j + 1) * th0)) * (long double)fs_[j];
        LJ X = r * lcos(1.0L, th0);
        LJ Y = r * lsin(1.0L, th0);
        return {X, Y};
    }

    // Composite 5-point Gauss-Legendre arclength from tgrid_[lo] to theta.
    double arc_from(size_t lo, double theta) const {
        static const double gx[5] = {-0.906179845938664, -0.538469310105683, 0.0,
                                     0.538469310105683, 0.906179845938664};
        static const double gw[5] = {0.236926885056189, 0.478628670499366, 0.568888888888889,
                                     0.478628670499366, 0.236926885056189};
        double a = tgrid_[lo], b = theta;
        double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (int i = 0; i < 5; ++i) acc += gw[i] * speed(mid + half * gx[i]);
        return acc * half;
    }

    void check_simple() const {
        const int N = 256;
        std::vector<Vec2> p(N);
        for (int i = 0; i < N; ++i) p[i] = raw_point(2 * pi * i / N);
        auto seg_isect = [](Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
            auto o = [](Vec2 u, Vec2 v, Vec2 w) { return (v - u).cross(w - u); };
            double o1 = o(a, b, c), o2 = o(a, b, d), o3 = o(c, d, a), o4 = o(c, d, b);
            return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0));
        };
        for (int i = 0; i < N; ++i)
            for (int j = i + 2; j < N; ++j) {
                if (i == 0 && j == N - 1) continue;  // adjacent around the seam
                if (seg_isect(p[i], p[(i + 1) % N], p[j], p[(j + 1) % N]))
                    throw NonSimpleCurve("self-intersection detected on the sample grid");
            }
    }

    void build(double tol) {
        tol_ = tol;
        if (shape_ != CurveShape::ellipse) {
            // positivity of r guards against degenerate polar curves
            for (int i = 0; i < 720; ++i)
                if (radius(2 * pi * i / 720.0) <= 0.0)
                    throw NonSimpleCurve("polar radius must stay positive");
        } else if (ea_ <= 0 || eb_ <= 0) {
            throw NonSimpleCurve("ellipse semi-axes must be positive");
        }
        check_simple();
        size_t N = 2048;
        double prev = -1.0;
        for (int round = 0; round < 8; ++round, N *= 2) {
            tgrid_.resize(N + 1);
            sgrid_.assign(N + 1, 0.0);
            for (size_t i = 0; i <= N; ++i) tgrid_[i] = 2 * pi * double(i) / double(N);
            for (size_t i = 0; i < N; ++i) sgrid_[i + 1] = sgrid_[i] + arc_from(i, tgrid_[i + 1]);
            length_ = sgrid_[N];
            if (prev >= 0 && std::abs(length_ - prev) <= 0.05 * tol * length_) return;
            prev = length_;
        }
        throw ToleranceNotMet("arclength table refinement stalled");
    }
};

// Rebuild the arclength table of a curve at the requested tolerance.
// Idempotent: a curve is already arclength-parametrized, so reparametrizing
// changes nothing beyond table resolution.
inline BoundaryCurve arclength_reparametrize(const BoundaryCurve& raw, double reparam_tol) {
    BoundaryCurve c = raw;
    c.rebuild(reparam_tol);
    return c;
}

// eval_frame operation of the module interface.
inline CurveFrame eval_frame(const BoundaryCurve& curve, double s) { return curve.frame(s); }

}  // namespace wavetrace
