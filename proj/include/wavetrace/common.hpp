#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>
#include <array>
#include <cmath>

namespace wavetrace {

using cplx = std::complex<double>;
using std::size_t;

constexpr double pi = 3.14159265358979323846264338327950288;

struct Vec2 {
    double x = 0.0, y = 0.0;
    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}
    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    Vec2 normalized() const { double n = norm(); return {x / n, y / n}; }
    // 90-degree counter-clockwise rotation; maps the tangent of a ccw curve
    // to the inward normal.
    Vec2 rot90() const { return {-y, x}; }
};
inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Error taxonomy. Each numerical precondition failure throws one of these.
#define WAVETRACE_ERROR(NAME)                                        \
    struct NAME : std::runtime_error {                               \
        explicit NAME(const std::string& what_)                      \
            : std::runtime_error(std::string(#NAME ": ") + what_) {} \
    }

WAVETRACE_ERROR(NonSimpleCurve);
WAVETRACE_ERROR(ToleranceNotMet);
WAVETRACE_ERROR(OrderUnavailable);
WAVETRACE_ERROR(SingularConfig);
WAVETRACE_ERROR(GrazingRay);
WAVETRACE_ERROR(NoIntersection);
WAVETRACE_ERROR(NoConvergence);
WAVETRACE_ERROR(DegenerateOrbit);
WAVETRACE_ERROR(NonConvexCurve);
WAVETRACE_ERROR(DomainError);
WAVETRACE_ERROR(RangeError);
WAVETRACE_ERROR(DiagonalError);
WAVETRACE_ERROR(ResolutionError);
WAVETRACE_ERROR(TargetTooClose);
WAVETRACE_ERROR(SolveFailure);
WAVETRACE_ERROR(TruncationError);
WAVETRACE_ERROR(IllConditionedFit);
WAVETRACE_ERROR(RegimeError);
WAVETRACE_ERROR(DegenerateHessian);
WAVETRACE_ERROR(JetOrderUnavailable);
WAVETRACE_ERROR(DegenerateAngle);
WAVETRACE_ERROR(IsolationViolation);
WAVETRACE_ERROR(DegenerateOrbitFamily);
WAVETRACE_ERROR(ConfigError);

#undef WAVETRACE_ERROR

inline double wrap(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0) r += period;
    return r;
}

// Smallest cyclic distance on a circle of the given period.
inline double cyclic_gap(double a, double b, double period) {
    double d = std::abs(wrap(a - b, period));
    return std::min(d, period - d);
}

// C-infinity step: 0 for u <= 0, 1 for u >= 1, monotone in between.
inline double smoothstep_cinf(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    double f = std::exp(-1.0 / u);
    double g = std::exp(-1.0 / (1.0 - u));
    return f / (f + g);
}

// Even plateau bump: 1 on |x| <= plat, 0 for |x| >= full, smooth between.
inline double plateau_bump(double x, double plat, double full) {
    double ax = std::abs(x);
    if (ax <= plat) return 1.0;
    if (ax >= full) return 0.0;
    return smoothstep_cinf((full - ax) / (full - plat));
}

}  // namespace wavetrace
