#pragma once

// Wave invariants by higher-order stationary phase on the boundary-cycled
// oscillatory integrals of the smoothed trace.
//
// The (t, mu~) pair of the smoothed-trace phase (1 - mu~) t + mu~ L(phi)
// reduces exactly when rho_hat == 1 near the orbit length: its Hessian block
// [[0,-1],[-1,0]] pairs t only with mu~, the amplitude carries no t
// dependence on the plateau, so every mu~-derivative term drops from the Wick
// sums. What remains is a phi-only expansion with phase L(phi) and amplitude
//   A(w) = prod_{j<M} [(i/2) zeta h1(zeta l_j) c_j] * [(i/8) l_M h0(zeta l_M) c_M]
//          * e^{-tau s(k) (L(w) - rL)}
// (h_nu = H_nu^(1) e^{-iz} symbols, c_j the double-layer cosines), and the
// overall value
//   I_M(k) = (-1)^M 2 k zeta(k) rho_hat(rL) (2 pi/k)^{(M+2)/2}
//            |det H|^{-1/2} e^{i pi sgn(H)/4} e^{ikrL} k^{-tau s rL}
//            sum_j a_j k^{-j},
// summed over the distinct cyclic/reversal reorderings of the orbit tuple.
// Demodulating by e^{ikrL} k^{-tau s rL} 2 pi matches trace::fit_expansion, so
// the pipeline and the matrix-quadrature trace estimate the same B_j.

#include "billiards.hpp"
#include "jets.hpp"
#include "layers.hpp"
#include "trace.hpp"

#include <map>

namespace wavetrace {

// ---------------------------------------------------------------------------
// Stationary phase with Gaussian (Wick) moments.
// ---------------------------------------------------------------------------

struct OscillatoryIntegralJet {
    int dim = 0;      // number of transverse variables
    int codim = 0;    // q: codimension of the critical manifold (= dim here)
    double critical_value = 0.0;  // phase value at the critical point
    MJet phase;       // jets to order 2R+2; gradient vanishes at 0
    MJet amplitude;   // jets to order 2R
    Eigen::MatrixXcd hessian;  // phase Hessian (possibly complex scaling)
};

struct StationaryPhaseResult {
    std::vector<cplx> a;  // coefficients of k^{-j}, j = 0..R
    cplx value = 0.0;     // evaluated sum including the prefactor and carrier
    cplx prefactor = 0.0; // (2 pi/k)^{q/2} |det H|^{-1/2} e^{i pi sgn/4} e^{ik Phi0}
};

namespace detail {

// Hessian data of an MJet phase: H_ab = (1 + delta_ab) c_{e_a + e_b}.
inline Eigen::MatrixXcd phase_hessian(const MJet& phase) {
    int nv = phase.basis->nvars();
    Eigen::MatrixXcd H(nv, nv);
    for (int a = 0; a < nv; ++a)
        for (int b = a; b < nv; ++b) {
            std::vector<int> e(nv, 0);
            e[a] += 1;
            e[b] += 1;
            cplx c = phase.c[phase.basis->rank(e)];
            H(a, b) = H(b, a) = (a == b) ? 2.0 * c : c;
        }
    return H;
}

// signature of a real symmetric matrix
inline int signature(const Eigen::MatrixXcd& H) {
    Eigen::MatrixXd Hr = H.real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hr);
    int s = 0;
    for (int i = 0; i < Hr.rows(); ++i) s += es.eigenvalues()(i) > 0 ? 1 : -1;
    return s;
}

}  // namespace detail

// Expansion of int e^{ik Phi(x)} A(x) dx about a non-degenerate critical
// point at x = 0:  (2 pi/k)^{q/2} |det H|^{-1/2} e^{i pi sgn H/4} e^{ik Phi0}
//   sum_j k^{-j} a_j,  a_j = sum_{|alpha| = 2(p+j)} i^{2p+j} [g^p A / p!]_alpha
//   mu_{H^{-1}}(alpha), g = Phi - Phi0 - quadratic part.
inline StationaryPhaseResult stationary_phase(const OscillatoryIntegralJet& jet, double k,
                                              int R) {
    const int q = jet.dim;
    if (2 * R + 2 > jet.phase.basis->degree())
        throw JetOrderUnavailable("stationary_phase: phase jets shallower than 2R+2");
    Eigen::MatrixXcd H = jet.hessian.size() ? jet.hessian : detail::phase_hessian(jet.phase);
    double scale = H.cwiseAbs().maxCoeff();
    cplx detH = H.determinant();
    if (std::abs(detH) < 1e-10 * std::pow(std::max(scale, 1e-30), q))
        throw DegenerateHessian("stationary_phase: |det H| below the degeneracy guard");
    Eigen::MatrixXcd Hinv = H.inverse();

    // moments live in a larger basis: degrees up to 2(p + j) <= 6R (p <= 2j)
    const int big_deg = std::max(2 * R + 2, 6 * std::max(R, 1));
    auto big = MonomialBasis::get(q, big_deg);
    std::vector<std::vector<cplx>> C(q, std::vector<cplx>(q));
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) C[a][b] = Hinv(a, b);
    auto mu = gaussian_moments(*big, C);

    // embed phase/amplitude into the big basis
    auto embed = [&](const MJet& src) {
        MJet dst(big);
        dst.c[0] = 0.0;
        for (int i = 0; i < src.basis->size(); ++i) {
            if (src.c[i] == cplx(0.0)) continue;
            int rank = big->rank(src.basis->exponents(i));
            dst.c[rank] = src.c[i];
        }
        return dst;
    };
    MJet A = embed(jet.amplitude);
    MJet g = embed(jet.phase);
    g.c[0] = 0.0;
    // remove the quadratic part: keep degrees >= 3
    g = g.truncate_below(3);

    StationaryPhaseResult out;
    out.a.assign(R + 1, 0.0);
    MJet gp(big, 1.0);  // g^p / p!
    const cplx iu(0.0, 1.0);
    for (int p = 0; p <= 2 * R; ++p) {
        if (p > 0) gp = gp * g * (1.0 / double(p));
        MJet term = gp * A;
        for (int j = 0; j <= R; ++j) {
            if (j < (p + 1) / 2) continue;  // |alpha| >= 3p forces j >= p/2
            int deg = 2 * (p + j);
            if (deg > big_deg) continue;
            cplx S = 0.0;
            for (int i = big->degree_begin(deg); i < big->degree_end(deg); ++i)
                if (term.c[i] != cplx(0.0)) S += term.c[i] * mu[i];
            out.a[j] += std::pow(iu, 2 * p + j) * S;
        }
    }
    cplx sqrtdet = std::sqrt(cplx(std::abs(detH), 0.0));
    int sgn = detail::signature(H);
    out.prefactor = std::pow(cplx(2 * pi / k, 0.0), 0.5 * q) / sqrtdet *
                    std::exp(cplx(0, pi * sgn / 4.0)) *
                    std::exp(cplx(0, 1) * k * jet.critical_value);
    cplx sum = 0.0;
    for (int j = 0; j <= R; ++j) sum += out.a[j] * std::pow(k, -j);
    out.value = out.prefactor * sum;
    return out;
}

// ---------------------------------------------------------------------------
// Hankel cutoff transform identities (Prop INTFORM / INTFORMR regime).
// ---------------------------------------------------------------------------

enum class HankelTransformVariant { flat, offset };

struct HankelTransformResult {
    cplx numeric = 0.0;
    cplx closed_form = 0.0;
    double residual = 0.0;
};

namespace detail {

// adaptive panel quadrature of f on [a,b] with 20-point Gauss-Legendre panels
template <class F>
cplx gl_panels(F&& f, double a, double b, int panels) {
    static const double gx[10] = {0.076526521133497, 0.227785851141645, 0.373706088715420,
                                  0.510867001950827, 0.636053680726515, 0.746331906460151,
                                  0.839116971822219, 0.912234428251326, 0.963971927277914,
                                  0.993128599185095};
    static const double gw[10] = {0.152753387130726, 0.149172986472604, 0.142096109318382,
                                  0.131688638449177, 0.118194531961518, 0.101930119817240,
                                  0.083276741576704, 0.062672048334109, 0.040601429800387,
                                  0.017614007139152};
    cplx acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        double pa = a + (b - a) * p / panels, pb = a + (b - a) * (p + 1) / panels;
        double mid = 0.5 * (pa + pb), half = 0.5 * (pb - pa);
        for (int i = 0; i < 10; ++i) {
            acc += gw[i] * half * (f(mid + half * gx[i]) + f(mid - half * gx[i]));
        }
    }
    return acc;
}

}  // namespace detail

// flat: int_0^inf chi(k^{-delta} x) cos(a x) H0^(1)(b x) dx  -> 1/sqrt(b^2-a^2)
// offset(r): int_0^inf chi(k^{-delta} u) cos(a u) H0^(1)(b sqrt(r^2+u^2)) du
//   -> e^{i r sqrt(b^2-a^2)} / sqrt(b^2-a^2)   (Weyl identity; the principal
//   branch with Im sqrt > 0 decays, fixing the sign left loose by the paper).
inline HankelTransformResult hankel_cutoff_transform(double a, cplx b, double k, double delta,
                                                     HankelTransformVariant variant =
                                                         HankelTransformVariant::flat,
                                                     double r = 0.0) {
    if (!(a > -1.0 && a < 1.0)) throw DomainError("hankel_cutoff_transform: a must be in (-1,1)");
    if (!(b.real() >= 1.0 && b.imag() > 0.0))
        throw DomainError("hankel_cutoff_transform: need Re b >= 1, Im b > 0");
    if (!(delta > 0.5 && delta < 1.0))
        throw DomainError("hankel_cutoff_transform: delta must be in (1/2,1)");
    if (std::abs(b - cplx(a, 0.0)) < std::pow(k, delta - 1.0))
        throw RegimeError("hankel_cutoff_transform: |a - b| below the separation scale");
    const double X = std::pow(k, delta);
    auto chi = [&](double x) { return plateau_bump(x / X, 0.5, 1.0); };

    HankelTransformResult out;
    cplx s = std::sqrt(b * b - a * a);  // principal branch: Im s > 0 here
    if (variant == HankelTransformVariant::flat) {
        // split off [0,1] with geometric refinement into the log singularity
        auto f = [&](double x) { return chi(x) * std::cos(a * x) * hankel1(0, b * x); };
        cplx acc = 0.0;
        double lo = 1e-9;
        for (double hi = 2e-9; lo < 1.0; lo = hi, hi = std::min(1.0, hi * 2.0))
            acc += detail::gl_panels(f, lo, hi, 1);
        acc += detail::gl_panels(f, 1.0, X, std::max(32, int(X)));
        out.numeric = acc;
        out.closed_form = 1.0 / s;
    } else {
        if (!(r > 0.0)) throw DomainError("hankel_cutoff_transform: offset variant needs r > 0");
        auto f = [&](double u) {
            return chi(u) * std::cos(a * u) * hankel1(0, b * std::sqrt(r * r + u * u));
        };
        out.numeric = detail::gl_panels(f, 0.0, X, std::max(32, int(X)));
        out.closed_form = std::exp(cplx(0, 1) * r * s) / s;
    }
    out.residual = std::abs(out.numeric - out.closed_form);
    return out;
}

// ---------------------------------------------------------------------------
// Orbit oscillatory integral and wave invariants.
// ---------------------------------------------------------------------------

struct OrbitIntegralOptions {
    double tau = 0.0;  // damping along k + i tau log k (0: pure oscillatory)
    SpectralScaling scaling = SpectralScaling::logarithmic;
};

// Assemble the phi-block jet of the smoothed-trace integrand for gamma^r at
// wavenumber k: phase = closed polygon length, amplitude = kernel symbols.
// The (t, mu~) block is reduced exactly (see the header comment); the full
// Hessian accessor below reports the unreduced structure for verification.
inline OscillatoryIntegralJet build_orbit_integral(const BoundaryCurve& curve,
                                                   const PeriodicOrbit& orbit, int r,
                                                   const TraceWindow& window, int R, double k,
                                                   const OrbitIntegralOptions& opt = {}) {
    const int m = orbit.links();
    const int M = r * m;
    const int deg = 2 * R + 2;
    if (deg > BoundaryCurve::max_jet_order - 2)
        throw JetOrderUnavailable("build_orbit_integral: jet order beyond the curve cap");
    double scale_damp = opt.scaling == SpectralScaling::logarithmic ? std::log(k) : 1.0;
    cplx zeta(k, opt.tau * scale_damp);
    const double rL = r * orbit.length;
    if (window.rho_hat(rL) != 1.0)
        throw DomainError("build_orbit_integral: rL must sit on the window plateau");

    auto basis = MonomialBasis::get(M, deg);
    // per-vertex arclength jets of position and tangent
    std::vector<MJet> X(M), Y(M), Tx(M), Ty(M);
    for (int v = 0; v < M; ++v) {
        double s0 = orbit.vertices[v % m];
        auto [xj, yj] = curve.arclength_jets(s0, deg + 1);
        auto dx = xj.derivative(), dy = yj.derivative();
        auto promote_ld = [&](const Jet1<long double>& j1, int var) {
            Jet1<cplx> jc(deg);
            for (int i = 0; i <= deg && i <= j1.order(); ++i)
                jc.c[i] = cplx(double(j1[i]), 0.0);
            return promote(jc, basis, var);
        };
        X[v] = promote_ld(xj, v);
        Y[v] = promote_ld(yj, v);
        Tx[v] = promote_ld(dx, v);
        Ty[v] = promote_ld(dy, v);
    }

    MJet phase(basis, 0.0);
    MJet amp(basis, 1.0);
    for (int e = 0; e < M; ++e) {
        int u = e, v = (e + 1) % M;
        MJet dx = X[u] - X[v], dy = Y[u] - Y[v];
        MJet l = jet_sqrt(dx * dx + dy * dy);
        phase += l;
        // cos angle(q_u - q_v, nu_v); nu = rot90(T) = (-Ty, Tx)
        MJet cosv = (dx * (Ty[v] * (-1.0)) + dy * Tx[v]) * jet_recip(l);
        if (e < M - 1) {
            // N-kernel symbol (i/2) zeta h1(zeta l) c
            std::vector<cplx> c0, c1;
            hankel_symbol_jets(zeta * l.value(), deg, c0, c1);
            // compose h1 at zeta*l: argument series = zeta*(l - l0) about z0
            MJet zarg = l * zeta;
            MJet h1 = zarg.compose_outer(c1);
            amp = amp * (h1 * cosv * (cplx(0.0, 0.5) * zeta));
        } else {
            // closing W-kernel symbol (i/8) l h0(zeta l) c
            std::vector<cplx> c0, c1;
            hankel_symbol_jets(zeta * l.value(), deg, c0, c1);
            MJet zarg = l * zeta;
            MJet h0 = zarg.compose_outer(c0);
            amp = amp * (h0 * cosv * l * cplx(0.0, 0.125));
        }
    }
    if (opt.tau > 0.0) {
        // e^{-tau s(k) (L(w) - rL)}; the critical value k^{-tau s rL} is kept
        // in the demodulation carrier, not the amplitude
        MJet ex = (phase - phase.value()) * cplx(-opt.tau * scale_damp, 0.0);
        amp = amp * jet_exp(ex);
    }

    OscillatoryIntegralJet jet;
    jet.dim = M;
    jet.codim = M;
    // the critical value is the closed polygon length (= rL by construction);
    // the gradient vanishes at the orbit by the Snell conditions
    jet.critical_value = phase.value().real();
    jet.phase = phase;
    jet.phase.c[0] = 0.0;
    jet.amplitude = amp;
    jet.hessian = detail::phase_hessian(jet.phase);
    return jet;
}

// Full (t, mu~, phi) Hessian of the unreduced phase (1-mu~) t + mu~ L(phi):
// [[0,-1],[-1,0]] ⊕ H_phi; exposed for the structural checks.
inline Eigen::MatrixXd full_phase_hessian(const OscillatoryIntegralJet& jet) {
    int M = jet.dim;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M + 2, M + 2);
    H(0, 1) = H(1, 0) = -1.0;
    for (int a = 0; a < M; ++a)
        for (int b = 0; b < M; ++b) H(2 + a, 2 + b) = jet.hessian(a, b).real();
    return H;
}

struct WaveInvariantEntry {
    int j = 0;
    cplx B = 0.0;
};

struct WaveInvariantTable {
    std::string orbit_id;
    int r = 1;
    std::vector<WaveInvariantEntry> entries;
    double tau = 0.0;
    double delta = 0.75;
    int M_used = 0;
    double residual = 0.0;
};

namespace detail {

// distinct cyclic shifts and reversals of the r-fold orbit tuple
inline int critical_multiplicity(const PeriodicOrbit& orbit, int r) {
    const int m = orbit.links();
    const int M = r * m;
    std::vector<std::vector<double>> tuples;
    std::vector<double> base(M);
    for (int i = 0; i < M; ++i) base[i] = orbit.vertices[i % m];
    auto add = [&](std::vector<double> t) {
        for (auto& u : tuples) {
            bool same = true;
            for (int i = 0; i < M; ++i) same = same && std::abs(u[i] - t[i]) < 1e-12;
            if (same) return;
        }
        tuples.push_back(std::move(t));
    };
    for (int s = 0; s < M; ++s) {
        std::vector<double> t(M);
        for (int i = 0; i < M; ++i) t[i] = base[(i + s) % M];
        add(t);
        std::reverse(t.begin(), t.end());
        add(t);
    }
    return int(tuples.size());
}

}  // namespace detail

// Wave invariants of gamma^r from the stationary-phase model of the smoothed
// trace: evaluates I_M(k) on a geometric k-ladder, demodulates with the same
// carrier as trace::fit_expansion, and fits sum B_j k^{-j}. For bouncing
// balls the cyclic/reversal multiplicity is m and B_{gamma^r} + B_{gamma^-r}
// is real-valued at tau = 0.
inline WaveInvariantTable wave_invariants(const BoundaryCurve& curve, const PeriodicOrbit& orbit,
                                          int r, int J, double tau = 0.0, double delta = 0.75,
                                          double k0 = 2.5e3, int ladder = 9) {
    if (orbit.stability == Stability::degenerate)
        throw DegenerateOrbit("wave_invariants: orbit is degenerate");
    for (double v : orbit.vertices)
        if (curve.frame(v).curvature == 0.0)
            throw DegenerateOrbit("wave_invariants: zero curvature at a reflection point");
    const int m = orbit.links();
    const int M = r * m;
    const double rL = r * orbit.length;
    const int R = J + 1;
    TraceWindow window(rL, 0.4, tau);

    OrbitIntegralOptions opt;
    opt.tau = tau;

    int mult = detail::critical_multiplicity(orbit, r);
    std::vector<double> ks(ladder);
    std::vector<cplx> vals(ladder);
    for (int i = 0; i < ladder; ++i) ks[i] = k0 * std::pow(2.3, double(i) / (ladder - 1));
    for (int i = 0; i < ladder; ++i) {
        double k = ks[i];
        auto jet = build_orbit_integral(curve, orbit, r, window, R, k, opt);
        auto sp = stationary_phase(jet, k, R);
        double s = opt.scaling == SpectralScaling::logarithmic ? std::log(k) : 1.0;
        cplx zeta(k, tau * s);
        // sp.value carries the phi-block (2 pi/k)^{M/2} |det H|^{-1/2} and the
        // e^{ikrL} carrier; the exactly reduced (t, mu~) block contributes one
        // more (2 pi/k) and unit |det|; the damping at the critical point is
        // k^{-tau s rL} (kept out of the amplitude jets).
        cplx pref = ((M % 2) ? -2.0 : 2.0) * k * zeta * (2 * pi / k) *
                    std::exp(-tau * s * rL);
        vals[i] = double(mult) * pref * sp.value;
    }
    auto fit = fit_expansion(ks, vals, rL, tau, J + 1, opt.scaling);
    WaveInvariantTable table;
    table.orbit_id = curve.describe();
    table.r = r;
    table.tau = tau;
    table.delta = delta;
    table.M_used = M;
    table.residual = fit.residual;
    for (int j = 0; j <= J; ++j) table.entries.push_back({j, fit.B[j]});
    return table;
}

// ---------------------------------------------------------------------------
// The explicit bouncing-ball formula display and its readings.
// ---------------------------------------------------------------------------

enum class WtfAlphaReading { half_angle, half_cos };  // 2-2cos(alpha/2) vs 2-cos(alpha)... see docs

// Literal evaluation of the bouncing-ball display:
//   B_{gamma^r,j-1} + B_{gamma^{-r},j-1} =
//     r { 2 (h11)^j f2j + [ 2 (h11)^j / (2 - 2 cos-term) +
//         (h11)^{j-2} sum_q (h1q)^3 ] f3 f2jm1 }
// with cos-term = cos(alpha/2) (half_angle) or cos(alpha)/2 (half_cos); the
// display is ambiguous and both readings are exposed for the comparison
// report, never hard-coded downstream.
inline double wtf_eval(int r, int j, double h11, const std::vector<double>& h1q, double alpha,
                       double f3, double f2j, double f2jm1,
                       WtfAlphaReading reading = WtfAlphaReading::half_angle) {
    if (!(alpha > 0.0 && alpha < 2 * pi)) throw DegenerateAngle("wtf_eval: alpha outside (0, 2pi)");
    double denom = reading == WtfAlphaReading::half_angle ? 2.0 - 2.0 * std::cos(alpha / 2)
                                                          : 2.0 - std::cos(alpha);
    if (std::abs(denom) < 1e-12) throw DegenerateAngle("wtf_eval: vanishing angle denominator");
    double sum3 = 0.0;
    for (double v : h1q) sum3 += v * v * v;
    double corr = 2.0 * std::pow(h11, j) / denom + std::pow(h11, j - 2) * sum3;
    return r * (2.0 * std::pow(h11, j) * f2j + corr * f3 * f2jm1);
}

}  // namespace wavetrace
