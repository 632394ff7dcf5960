#pragma once

// Bessel and Hankel functions of complex argument (orders 0, 1 plus integer
// recurrences), Bessel zeros, WKB symbols, and the free Helmholtz Green's
// function G0 = (i/4) H0^(1)(zeta |x-y|), normalized so (Lap + zeta^2) G0 = -delta.

#include "common.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <mutex>

namespace wavetrace {

namespace detail {

using lreal = long double;
using lcplx = std::complex<long double>;

constexpr lreal lc_pi = 3.14159265358979323846264338327950288L;
constexpr lreal euler_gamma = 0.57721566490153286060651209008240243L;

// Power-series evaluation of J0, Y0, J1, Y1 for |z| <= 13.
// Long-double accumulation keeps the alternating-series cancellation
// (up to ~e^13) below the 1e-10 relative target.
inline void series_j0y0j1y1(lcplx z, lcplx& J0, lcplx& Y0, lcplx& J1, lcplx& Y1) {
    const lcplx q = z * z * 0.25L;  // z^2/4
    lcplx term(1.0L, 0.0L);         // (-1)^m q^m / (m!)^2
    lcplx j0 = term;
    lcplx y0s = 0.0L;  // sum_{m>=1} (-1)^{m+1} H_m q^m/(m!)^2
    lreal Hm = 0.0L;
    lcplx termj1(1.0L, 0.0L);  // (-1)^m q^m/(m!(m+1)!)
    lcplx j1s = termj1;
    lcplx y1s = termj1 * (-2.0L * euler_gamma);  // sum (psi(m+1)+psi(m+2)) (-q)^m/(m!(m+1)!) ; psi(1)+psi(2) = -2g+1
    y1s += termj1;                               // H_0 + H_1 = 1 at m=0
    for (int m = 1; m < 80; ++m) {
        term *= -q / lcplx(lreal(m) * lreal(m));
        j0 += term;
        Hm += 1.0L / lreal(m);
        y0s += -term * Hm;  // (-1)^{m+1} = -(-1)^m
        termj1 *= -q / lcplx(lreal(m) * lreal(m + 1));
        j1s += termj1;
        // psi(m+1)+psi(m+2) = -2g + H_m + H_{m+1}
        y1s += termj1 * (-2.0L * euler_gamma + 2.0L * Hm + 1.0L / lreal(m + 1));
        if (std::abs(term) < 1e-25L * std::abs(j0) &&
            std::abs(termj1) < 1e-25L * (std::abs(j1s) + 1e-30L))
            break;
    }
    const lcplx logz2 = std::log(z * 0.5L);
    J0 = j0;
    Y0 = (2.0L / lc_pi) * ((logz2 + euler_gamma) * j0 + y0s);
    J1 = 0.5L * z * j1s;
    // Y1 = (2/pi) ln(z/2) J1 - 2/(pi z) - (z/(2 pi)) sum (psi(k+1)+psi(k+2)) (-q)^k/(k!(k+1)!)
    Y1 = (2.0L / lc_pi) * logz2 * J1 - 2.0L / (lc_pi * z) - (z / (2.0L * lc_pi)) * y1s;
}

// Large-|z| Hankel symbol h_nu(z) = H_nu^(1)(z) e^{-iz}, nu in {0,1},
// via the adaptively truncated asymptotic series (optimal truncation error
// ~ e^{-2|z|}, below 1e-11 for |z| >= 13).
inline lcplx hankel_symbol_asym(int nu, lcplx z) {
    const lreal mu = 4.0L * nu * nu;
    lcplx sum(1.0L, 0.0L);
    lcplx term(1.0L, 0.0L);
    lreal last = std::numeric_limits<lreal>::max();
    for (int m = 1; m < 60; ++m) {
        const lreal odd = lreal(2 * m - 1);
        term *= lcplx(0.0L, 1.0L) * lcplx(mu - odd * odd) / (8.0L * lreal(m) * z);
        const lreal mag = std::abs(term);
        if (mag >= last) break;  // divergent tail reached
        sum += term;
        last = mag;
        if (mag < 1e-22L * std::abs(sum)) break;
    }
    const lcplx pref = std::sqrt(lcplx(2.0L) / (lc_pi * z)) *
                       std::exp(lcplx(0.0L, -(lreal(nu) * lc_pi / 2.0L + lc_pi / 4.0L)));
    return pref * sum;
}

constexpr double hankel_switch_radius = 13.0;

// J and Y series pieces exposed for the Kress log-split: returns J0, J1 and
// Ytilde_nu(z) = Y_nu(z) - (2/pi) ln(z/2) J_nu(z), which are analytic in z^2
// apart from the 1/z pole of Ytilde_1.
inline void series_logsplit(lcplx z, lcplx& J0, lcplx& J1, lcplx& Yt0, lcplx& Yt1) {
    const lcplx q = z * z * 0.25L;
    lcplx term(1.0L, 0.0L);
    lcplx j0 = term;
    lcplx y0s = 0.0L;
    lreal Hm = 0.0L;
    lcplx termj1(1.0L, 0.0L);
    lcplx j1s = termj1;
    lcplx y1s = termj1 * (1.0L - 2.0L * euler_gamma);
    for (int m = 1; m < 80; ++m) {
        term *= -q / lcplx(lreal(m) * lreal(m));
        j0 += term;
        Hm += 1.0L / lreal(m);
        y0s += -term * Hm;
        termj1 *= -q / lcplx(lreal(m) * lreal(m + 1));
        j1s += termj1;
        y1s += termj1 * (-2.0L * euler_gamma + 2.0L * Hm + 1.0L / lreal(m + 1));
        if (std::abs(term) < 1e-25L * std::abs(j0)) break;
    }
    J0 = j0;
    J1 = 0.5L * z * j1s;
    Yt0 = (2.0L / lc_pi) * (euler_gamma * j0 + y0s);
    Yt1 = -2.0L / (lc_pi * z) - (z / (2.0L * lc_pi)) * y1s;
}

}  // namespace detail

// H_nu^(1)(z) e^{-iz} for nu in {0,1}; the bounded WKB factor used by all
// layer-potential kernels. Valid on Im z >= 0 (principal branch).
inline cplx hankel1_symbol(int nu, cplx z) {
    if (nu != 0 && nu != 1) throw DomainError("hankel1_symbol: order must be 0 or 1");
    if (z == cplx(0.0, 0.0)) throw DomainError("hankel1_symbol: z = 0");
    if (z.imag() < -1e-12 * std::max(1.0, std::abs(z.real())))
        throw DomainError("hankel1_symbol: Im z < 0");
    detail::lcplx lz(z.real(), z.imag());
    if (std::abs(z) > detail::hankel_switch_radius) {
        detail::lcplx h = detail::hankel_symbol_asym(nu, lz);
        return cplx(double(h.real()), double(h.imag()));
    }
    detail::lcplx J0, Y0, J1, Y1;
    detail::series_j0y0j1y1(lz, J0, Y0, J1, Y1);
    detail::lcplx H = (nu == 0) ? J0 + detail::lcplx(0.0L, 1.0L) * Y0
                                : J1 + detail::lcplx(0.0L, 1.0L) * Y1;
    detail::lcplx h = H * std::exp(detail::lcplx(0.0L, -1.0L) * lz);
    return cplx(double(h.real()), double(h.imag()));
}

// H_nu^(1)(z), nu in {0,1}. Relative accuracy ~1e-11 over |z| in [1e-6, 1e4].
inline cplx hankel1(int nu, cplx z) {
    cplx h = hankel1_symbol(nu, z);
    return h * std::exp(cplx(0.0, 1.0) * z);
}

// Both orders at once (shared series work / shared prefactors).
inline void hankel1_pair(cplx z, cplx& H0, cplx& H1) {
    detail::lcplx lz(z.real(), z.imag());
    if (std::abs(z) <= detail::hankel_switch_radius) {
        detail::lcplx J0, Y0, J1, Y1;
        detail::series_j0y0j1y1(lz, J0, Y0, J1, Y1);
        detail::lcplx h0 = J0 + detail::lcplx(0.0L, 1.0L) * Y0;
        detail::lcplx h1 = J1 + detail::lcplx(0.0L, 1.0L) * Y1;
        H0 = cplx(double(h0.real()), double(h0.imag()));
        H1 = cplx(double(h1.real()), double(h1.imag()));
        return;
    }
    detail::lcplx ez = std::exp(detail::lcplx(0.0L, 1.0L) * lz);
    detail::lcplx h0 = detail::hankel_symbol_asym(0, lz) * ez;
    detail::lcplx h1 = detail::hankel_symbol_asym(1, lz) * ez;
    H0 = cplx(double(h0.real()), double(h0.imag()));
    H1 = cplx(double(h1.real()), double(h1.imag()));
}

// J_nu(z), nu in {0,1}, complex z with Im z >= 0 (series / half-sum of the
// two Hankel asymptotic branches).
inline cplx besselj01(int nu, cplx z) {
    if (nu != 0 && nu != 1) throw DomainError("besselj01: order must be 0 or 1");
    detail::lcplx lz(z.real(), z.imag());
    if (std::abs(z) <= detail::hankel_switch_radius) {
        detail::lcplx J0, Y0, J1, Y1;
        detail::series_j0y0j1y1(lz, J0, Y0, J1, Y1);
        detail::lcplx v = nu == 0 ? J0 : J1;
        return cplx(double(v.real()), double(v.imag()));
    }
    // H^(2)_nu(z) = conj-branch asymptotic series (valid for -2pi < arg z < pi)
    const double mu = 4.0 * nu * nu;
    detail::lcplx sum1(1.0L, 0.0L), term1(1.0L, 0.0L);
    detail::lcplx sum2(1.0L, 0.0L), term2(1.0L, 0.0L);
    detail::lreal last = std::numeric_limits<detail::lreal>::max();
    for (int m = 1; m < 60; ++m) {
        const detail::lreal odd = detail::lreal(2 * m - 1);
        detail::lcplx f = detail::lcplx(mu - odd * odd) / (8.0L * detail::lreal(m) * lz);
        term1 *= detail::lcplx(0.0L, 1.0L) * f;
        term2 *= detail::lcplx(0.0L, -1.0L) * f;
        detail::lreal mag = std::abs(term1);
        if (mag >= last) break;
        sum1 += term1;
        sum2 += term2;
        last = mag;
        if (mag < 1e-22L * std::abs(sum1)) break;
    }
    detail::lcplx pref = std::sqrt(detail::lcplx(2.0L) / (detail::lc_pi * lz));
    detail::lcplx w(0.0L, -(detail::lreal(nu) * detail::lc_pi / 2.0L + detail::lc_pi / 4.0L));
    detail::lcplx ez = detail::lcplx(0.0L, 1.0L) * lz;
    detail::lcplx H1v = pref * std::exp(w + ez) * sum1;
    detail::lcplx H2v = pref * std::exp(-w - ez) * sum2;
    detail::lcplx J = 0.5L * (H1v + H2v);
    return cplx(double(J.real()), double(J.imag()));
}

// Ytilde_nu(z) = Y_nu(z) - (2/pi) ln(z/2) J_nu(z) (smooth log-split remainder).
inline cplx bessel_ytilde01(int nu, cplx z) {
    if (nu != 0 && nu != 1) throw DomainError("bessel_ytilde01: order must be 0 or 1");
    detail::lcplx lz(z.real(), z.imag());
    if (std::abs(z) <= detail::hankel_switch_radius) {
        detail::lcplx J0, J1, Yt0, Yt1;
        detail::series_logsplit(lz, J0, J1, Yt0, Yt1);
        detail::lcplx v = nu == 0 ? Yt0 : Yt1;
        return cplx(double(v.real()), double(v.imag()));
    }
    cplx J = besselj01(nu, z);
    cplx Y = (hankel1(nu, z) - J) / cplx(0.0, 1.0);
    return Y - (2.0 / pi) * std::log(z * 0.5) * J;
}

// WKB amplitude a_nu(z) = H_nu^(1)(z) e^{-iz} i^nu; the i^nu strips the
// order-dependent phase so a_nu ~ sqrt(2/(pi z)) e^{-i pi/4} for all nu.
inline cplx wkb_amplitude(int nu, cplx z) {
    if (std::abs(z) < 0.1) throw DomainError("wkb_amplitude: |z| below WKB regime threshold 0.1");
    cplx inu = (nu % 4 == 0) ? cplx(1, 0) : (nu % 4 == 1) ? cplx(0, 1)
               : (nu % 4 == 2)            ? cplx(-1, 0)
                                          : cplx(0, -1);
    return hankel1_symbol(nu, z) * inu;
}

// Taylor coefficients of the symbols h0, h1 about z0 up to the given order,
// from h0' = -(h1 + i h0), h1' = h0 - h1/z - i h1. Exact given (h0,h1)(z0);
// used by the oscillatory-integral jet machinery.
inline void hankel_symbol_jets(cplx z0, int order, std::vector<cplx>& c0, std::vector<cplx>& c1) {
    c0.assign(order + 1, 0.0);
    c1.assign(order + 1, 0.0);
    c0[0] = hankel1_symbol(0, z0);
    c1[0] = hankel1_symbol(1, z0);
    std::vector<cplx> w(order + 1, 0.0);  // series of h1/(z0+u)
    for (int m = 0; m < order; ++m) {
        w[m] = (c1[m] - (m > 0 ? w[m - 1] : cplx(0.0))) / z0;
        cplx d0 = -(c1[m] + cplx(0.0, 1.0) * c0[m]);
        cplx d1 = c0[m] - w[m] - cplx(0.0, 1.0) * c1[m];
        c0[m + 1] = d0 / double(m + 1);
        c1[m + 1] = d1 / double(m + 1);
    }
}

// ---------------------------------------------------------------------------
// Real Bessel J_n, J_n', and zeros.
// ---------------------------------------------------------------------------

inline double bessel_j0(double x) { return hankel1(0, cplx(std::abs(x), 0.0)).real(); }
inline double bessel_j1(double x) {
    double v = hankel1(1, cplx(std::abs(x), 0.0)).real();
    return x >= 0 ? v : -v;
}

namespace detail {

// J_0..J_nmax at real x > 0. Upward recurrence where stable (n < x),
// Miller's backward recurrence with the Neumann-series normalization
// J0 + 2 J2 + 2 J4 + ... = 1 for n >= x.
inline std::vector<double> bessel_jn_table(int nmax, double x) {
    std::vector<double> J(nmax + 1, 0.0);
    if (x <= 0.0) {
        J[0] = 1.0;
        return J;
    }
    const int n_up = std::min<int>(nmax, int(x));
    J[0] = bessel_j0(x);
    if (nmax >= 1) J[1] = bessel_j1(x);
    for (int n = 1; n < n_up; ++n) J[n + 1] = (2.0 * n / x) * J[n] - J[n - 1];
    if (n_up >= nmax) return J;
    // Miller from well above max(nmax, x); the offset must clear the
    // Airy transition zone so the start transient decays below 1e-16.
    int top = std::max(nmax, int(x));
    int start = top + 20 + int(12.0 * std::cbrt(double(std::max(top, 1))));
    if (start % 2) ++start;
    lreal jp = 0.0L, jc = 1e-30L;
    lreal norm = 0.0L;
    std::vector<lreal> tmp(nmax + 1, 0.0L);
    for (int n = start; n >= 1; --n) {
        lreal jm = (2.0L * n / (lreal)x) * jc - jp;
        jp = jc;
        jc = jm;
        if (std::abs(jc) > 1e280L) {  // rescale to avoid overflow
            jc *= 1e-280L;
            jp *= 1e-280L;
            norm *= 1e-280L;
            for (auto& t : tmp) t *= 1e-280L;
        }
        int m = n - 1;
        if (m <= nmax) tmp[m] = jc;
        if (m >= 2 && m % 2 == 0) norm += 2.0L * jc;
    }
    norm += jc;  // J0 term
    for (int n = 0; n <= nmax; ++n) {
        double v = double(tmp[n] / norm);
        if (n <= n_up)
            continue;  // keep the upward values where they are stable
        J[n] = v;
    }
    return J;
}

}  // namespace detail

// J_n(x) for integer n >= 0, real x >= 0.
inline double bessel_j(int n, double x) {
    if (n < 0) throw RangeError("bessel_j: n < 0");
    if (n > 2000) throw RangeError("bessel_j: n too large");
    if (n == 0) return bessel_j0(x);
    if (n == 1) return bessel_j1(x);
    return detail::bessel_jn_table(n, x)[n];
}

inline double bessel_j_prime(int n, double x) {
    if (n == 0) return -bessel_j1(x);
    if (x == 0.0) return n == 1 ? 0.5 : 0.0;
    auto J = detail::bessel_jn_table(n + 1, x);
    return J[n - 1] - (double(n) / x) * J[n];
}

namespace detail {

inline double mcmahon_zero(int n, int m) {
    const double mu = 4.0 * double(n) * double(n);
    const double b = (double(m) + 0.5 * n - 0.25) * pi;
    const double e = 8.0 * b;
    double j = b - (mu - 1.0) / e - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e * e);
    j -= 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * std::pow(e, 5));
    return j;
}

// Negated zeros of the Airy function Ai, for the uniform (Olver-type)
// transition-region estimates j_{n,m} ~ n + (-a_m) (n/2)^{1/3} + ...
inline constexpr double airy_neg_zero[10] = {
    2.33810741045977, 4.08794944413097, 5.52055982809555, 6.78670809007176, 7.94413358712085,
    9.02265085334098, 10.0401743415581, 11.0085243037332, 11.9360155632363, 12.8287767528658};

inline double olver_zero(int n, int m) {
    const double c = std::cbrt(double(n) / 2.0);
    const double am = airy_neg_zero[std::min(m, 10) - 1];
    return double(n) + am * c + 0.3 * am * am * c * c / double(n);
}

// Refine a bracketed zero of J_n by safeguarded Newton.
inline double refine_zero(int n, double lo, double hi) {
    double flo = bessel_j(n, lo);
    double x = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
        double f = bessel_j(n, x);
        if ((f > 0) == (flo > 0))
            lo = x;
        else
            hi = x;
        double fp = bessel_j_prime(n, x);
        double xn = x - f / fp;
        if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
        if (std::abs(xn - x) < 1e-14 * x) return xn;
        x = xn;
    }
    return x;
}

}  // namespace detail

// m-th positive zero of J_n, accurate to ~1e-12 relative. Zeros are found by
// upward marching with sign brackets (consecutive zeros are separated by more
// than 3, so a 1.4-step scan cannot skip one) and cached per order.
inline double bessel_zero(int n, int m) {
    if (n < 0 || n > 600) throw RangeError("bessel_zero: n out of range [0,600]");
    if (m < 1) throw RangeError("bessel_zero: m must be >= 1");
    static std::map<int, std::vector<double>> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto& zs = cache[n];
    while (int(zs.size()) < m) {
        double a, fa;
        if (zs.empty()) {
            // J_n > 0 on (0, j_{n,1}); start just past the turning point
            double guess = (n < 2) ? detail::mcmahon_zero(n, 1) : detail::olver_zero(n, 1);
            a = std::max(0.5 * guess, double(n) + 1e-6);
            fa = bessel_j(n, a);
        } else {
            a = zs.back() + 0.4;
            fa = bessel_j(n, a);
        }
        bool found = false;
        for (int it = 0; it < 4000 && !found; ++it) {
            double b = a + 1.4;
            double fb = bessel_j(n, b);
            if ((fa > 0) != (fb > 0)) {
                double z = detail::refine_zero(n, a, b);
                if (std::abs(bessel_j(n, z)) > 1e-9)
                    throw NoConvergence("bessel_zero: refinement failed at n=" +
                                        std::to_string(n));
                zs.push_back(z);
                found = true;
            }
            a = b;
            fa = fb;
        }
        if (!found) throw NoConvergence("bessel_zero: scan failed at n=" + std::to_string(n));
    }
    return zs[m - 1];
}

// All Dirichlet eigen-wavenumbers of the unit disc up to lambda_max:
// {(j_{n,m}, multiplicity)}, multiplicity 2 for n >= 1. Sorted ascending.
inline std::vector<std::pair<double, int>> disc_dirichlet_spectrum(double lambda_max) {
    std::vector<std::pair<double, int>> out;
    for (int n = 0;; ++n) {
        double first = bessel_zero(n, 1);
        if (first > lambda_max) break;
        for (int m = 1;; ++m) {
            double z = (m == 1) ? first : bessel_zero(n, m);
            if (z > lambda_max) break;
            out.emplace_back(z, n == 0 ? 1 : 2);
        }
        if (n == 600) throw RangeError("disc_dirichlet_spectrum: order cap reached");
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------
// Integer-order functions of complex argument (disc oracles).
// ---------------------------------------------------------------------------

// J_0..J_nmax at complex z (Miller backward recurrence, complex normalization).
inline std::vector<cplx> bessel_jn_complex(int nmax, cplx z) {
    if (std::abs(z) < 1e-12) {
        std::vector<cplx> J(nmax + 1, 0.0);
        J[0] = 1.0;
        return J;
    }
    int top = std::max(nmax, int(std::abs(z)));
    int start = top + 20 + int(12.0 * std::cbrt(double(std::max(top, 1))));
    if (start % 2) ++start;
    std::vector<cplx> J(nmax + 1, 0.0);
    detail::lcplx lz(z.real(), z.imag());
    detail::lcplx jp = 0.0L, jc = 1e-30L, norm = 0.0L;
    std::vector<detail::lcplx> tmp(nmax + 1, 0.0L);
    for (int n = start; n >= 1; --n) {
        detail::lcplx jm = (2.0L * detail::lreal(n) / lz) * jc - jp;
        jp = jc;
        jc = jm;
        if (std::abs(jc) > 1e280L) {
            jc *= 1e-280L;
            jp *= 1e-280L;
            norm *= 1e-280L;
            for (auto& t : tmp) t *= 1e-280L;
        }
        int m = n - 1;
        if (m <= nmax) tmp[m] = jc;
        if (m >= 2 && m % 2 == 0) norm += 2.0L * jc;
    }
    norm += jc;
    for (int n = 0; n <= nmax; ++n) {
        detail::lcplx v = tmp[n] / norm;
        J[n] = cplx(double(v.real()), double(v.imag()));
    }
    return J;
}

// H^(1)_0..nmax at complex z by upward recurrence (stable: Y dominates).
inline std::vector<cplx> hankel1_n_complex(int nmax, cplx z) {
    std::vector<cplx> H(nmax + 1);
    H[0] = hankel1(0, z);
    if (nmax >= 1) H[1] = hankel1(1, z);
    for (int n = 1; n < nmax; ++n) H[n + 1] = (2.0 * double(n) / z) * H[n] - H[n - 1];
    return H;
}

// ---------------------------------------------------------------------------
// Spectral parameter and free Green's function.
// ---------------------------------------------------------------------------

enum class SpectralScaling { constant, logarithmic };

// Complex wavenumber k + i tau s(k), s = 1 (constant) or log k (logarithmic).
struct SpectralParameter {
    double k = 1.0;
    double tau = 0.0;
    SpectralScaling scaling = SpectralScaling::constant;

    SpectralParameter() = default;
    SpectralParameter(double k_, double tau_, SpectralScaling sc = SpectralScaling::constant)
        : k(k_), tau(tau_), scaling(sc) {
        if (k <= 0.0) throw DomainError("SpectralParameter: k must be > 0");
        if (tau < 0.0) throw DomainError("SpectralParameter: tau must be >= 0");
        if (scaling == SpectralScaling::logarithmic && k < 2.0)
            throw DomainError("SpectralParameter: logarithmic scaling requires k >= 2");
    }
    double imag_part() const {
        return scaling == SpectralScaling::logarithmic ? tau * std::log(k) : tau;
    }
    cplx zeta() const { return {k, imag_part()}; }
    // Same tau/scaling at a different wavenumber (mu integration).
    SpectralParameter at(double k2) const { return SpectralParameter(k2, tau, scaling); }
};

// G0(zeta, x, y) = (i/4) H0^(1)(zeta |x-y|); satisfies (Lap + zeta^2) G0 = -delta.
inline cplx free_green(const SpectralParameter& sp, const Vec2& x, const Vec2& y) {
    double r = (x - y).norm();
    if (r == 0.0) throw DiagonalError("free_green: x == y");
    return cplx(0.0, 0.25) * hankel1(0, sp.zeta() * r);
}

// d/dnu_y G0(zeta, x, q) with nu the unit inward normal at q:
// (i/4) zeta H1^(1)(zeta |x-q|) cos angle(x - q, nu_q).
inline cplx free_green_normal_derivative(const SpectralParameter& sp, const Vec2& x,
                                         const Vec2& q, const Vec2& normal_at_q) {
    Vec2 d = x - q;
    double r = d.norm();
    if (r == 0.0) throw DiagonalError("free_green_normal_derivative: x == q");
    double c = d.dot(normal_at_q) / r;
    return cplx(0.0, 0.25) * sp.zeta() * hankel1(1, sp.zeta() * r) * c;
}

}  // namespace wavetrace
