#pragma once

// Regularized resolvent traces along logarithmic spectral curves:
//   T_rho(k) = int rho(k - mu) (mu + i tau s(mu)) T(mu + i tau s(mu)) dmu,
// with rho(z) = int rho_hat(t) e^{izt} dt and rho_hat a plateau bump around a
// single length-spectrum element. Implements the exact Bessel-zero spectral
// oracle for the unit disc, the boundary-cycled trace of the multiple
// reflection terms G_M, and the power-law coefficient fit of demodulated
// k-scans.
//
// Normalization (pinned by stationary phase and the layer tests): for a
// non-degenerate bouncing ball gamma with Hessian H of the closed length,
//   T_{M=rm,rho}(k) ~ e^{ikrL} k^{-tau rL} 2 pi rho_hat(rL)
//                     * |det H|^{-1/2} e^{i pi sgn(H)/4} (1 + B_1/k + ...);
// fit_expansion demodulates by e^{ikL} k^{-tau L} 2 pi, so B_0 =
// +|det H|^{-1/2} e^{i pi sgn(H)/4} at leading order.
//
// The tau-damping k^{-tau L} shrinks the orbit signal while the smoothing
// window's Gevrey tails decay only like e^{-c sqrt(eps |x|)}; keep tau L
// around 1-2 so the low-mu damping ratio stays inside the tail suppression.

#include "billiards.hpp"
#include "layers.hpp"
#include "specfun.hpp"

namespace wavetrace {

struct TraceWindow {
    double L_center = 4.0;
    double epsilon = 0.4;
    double tau = 0.0;
    SpectralScaling scaling = SpectralScaling::logarithmic;
    int t_samples = 4096;  // rho quadrature grid

    TraceWindow() = default;
    TraceWindow(double L, double eps, double tau_,
                SpectralScaling sc = SpectralScaling::logarithmic)
        : L_center(L), epsilon(eps), tau(tau_), scaling(sc) {
        if (L - eps <= 0.0)
            throw DomainError("TraceWindow: supp rho_hat must stay in the positive half line");
        if (eps <= 0.0 || tau_ < 0.0) throw DomainError("TraceWindow: bad parameters");
    }

    // plateau bump: 1 on [L - eps/2, L + eps/2], supported in [L - eps, L + eps]
    double rho_hat(double t) const { return plateau_bump(t - L_center, epsilon / 2, epsilon); }

    double s_of_k(double k) const {
        return scaling == SpectralScaling::logarithmic ? std::log(k) : 1.0;
    }

    // rho(zeta) = int rho_hat(t) e^{i zeta t} dt (composite Simpson; the
    // integrand is entire so the fixed grid resolves it to ~1e-13)
    cplx rho(cplx zeta) const {
        const int n = t_samples | 1;  // odd count for Simpson
        const double a = L_center - epsilon, b = L_center + epsilon;
        const double h = (b - a) / (n - 1);
        cplx acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double t = a + i * h;
            double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * rho_hat(t) * std::exp(cplx(0, 1) * zeta * t);
        }
        return acc * (h / 3.0);
    }

    // numerically determined decay radius: the smallest probed X with
    // |rho(+-x)| <= thr * |rho(0)| on a geometric ladder x >= X
    double spectral_radius(double thr) const {
        double scale = std::abs(rho(0.0));
        for (double X = 1.0; X < 4000.0; X *= 1.25) {
            bool small = true;
            for (double x = X; x < 2.2 * X && small; x *= 1.07)
                small = std::abs(rho(cplx(x, 0.0))) <= thr * scale &&
                        std::abs(rho(cplx(-x, 0.0))) <= thr * scale;
            if (small) return X;
        }
        return 4000.0;
    }
};

// Window isolation: no other length-spectrum element may fall in supp rho_hat.
// Boundary-length multiples count as spectrum elements.
inline void check_isolation(const TraceWindow& w, const BoundaryCurve& curve,
                            const BilliardParams& par = {}) {
    auto spec = enumerate_length_spectrum(curve, w.L_center + w.epsilon + 0.5, par);
    for (auto& e : spec) {
        if (std::abs(e.length - w.L_center) < 1e-6) continue;  // the targeted length
        if (e.length > w.L_center - w.epsilon && e.length < w.L_center + w.epsilon)
            throw IsolationViolation("length " + std::to_string(e.length) +
                                     " lies inside the window support");
    }
}

// ---------------------------------------------------------------------------
// Disc spectral oracle: Tr 1 R_rho(k + i tau s(k)) = sum_j rho(k - j_{n,m} +
// i tau s(k)) with multiplicity 2 for n >= 1 (the rho(k + lambda) branch is
// O(k^{-infty}) since supp rho_hat sits in the positive half line).
// ---------------------------------------------------------------------------

inline cplx spectral_trace_disc(const TraceWindow& w, double k, double lambda_max,
                                bool conjugate_branch = false) {
    if (lambda_max < k + 10.0 / w.epsilon)
        throw TruncationError("spectral_trace_disc: lambda_max < k + 10/epsilon");
    const auto& spec = disc_dirichlet_spectrum(lambda_max);
    cplx c(0.0, w.tau * w.s_of_k(k));
    cplx acc = 0.0;
    for (auto& [lam, mult] : spec) {
        acc += double(mult) * w.rho(cplx(k - lam, 0.0) + c);
        if (conjugate_branch) acc += double(mult) * w.rho(cplx(k + lam, 0.0) + c);
    }
    return acc;
}

// k-scan with the eigenvalue sum swapped under the t-integral:
// sum_j rho(k - lam_j + ic) = int rho_hat(t) e^{i(k + ic)t} Z(t) dt with
// Z(t) = sum_j mult_j e^{-i lam_j t} computed once.
inline std::vector<cplx> spectral_trace_disc_scan(const TraceWindow& w,
                                                  const std::vector<double>& ks,
                                                  double lambda_max) {
    for (double k : ks)
        if (lambda_max < k + 10.0 / w.epsilon)
            throw TruncationError("spectral_trace_disc_scan: lambda_max too small");
    const auto& spec = disc_dirichlet_spectrum(lambda_max);
    const int n = w.t_samples | 1;
    const double a = w.L_center - w.epsilon, b = w.L_center + w.epsilon;
    const double h = (b - a) / (n - 1);
    std::vector<cplx> Z(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double t = a + i * h;
        cplx z = 0.0;
        for (auto& [lam, mult] : spec) z += double(mult) * std::exp(cplx(0, -lam * t));
        Z[i] = z * w.rho_hat(t);
    }
    std::vector<cplx> out(ks.size(), 0.0);
    for (size_t m = 0; m < ks.size(); ++m) {
        cplx zeta(ks[m], w.tau * w.s_of_k(ks[m]));
        cplx acc = 0.0;
        for (int i = 0; i < n; ++i) {
            double t = a + i * h;
            double wt = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += wt * Z[i] * std::exp(cplx(0, 1) * zeta * t);
        }
        out[m] = acc * (h / 3.0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Boundary-cycled traces of the multiple-reflection terms.
// ---------------------------------------------------------------------------

struct BemTraceOptions {
    double mu_halfrange = 150.0;    // |mu - k| window of the smoothing integral
    double mu_step = 0.35;          // resolves the difference carriers (bandwidth ~ eps)
    double window_halfwidth = 0.0;  // fixed vertex window; 0 = mu-adaptive sizing
    double window_sigmas = 10.0;    // supergauss scale w0 in stationary-Gaussian sigmas
    double plateau_frac = 0.6;      // plateau fraction (bump taper only)
    int ppw = 5;
    double mu_min = 4.0;
};

// T_M(mu) for the requested orders at one spectral point: T_0 is the
// (area x smoothed free-diagonal) term, T_M = (-1)^M 2 Tr[N^{M-1} W] for
// M >= 1 on the orbit-windowed node set.
namespace detail {

// diagonal finite part of G0 at spectral value zeta (complex argument allowed)
inline cplx free_diag(cplx zeta) {
    constexpr double gamma_e = 0.57721566490153286;
    return cplx(0, 0.25) * (1.0 + cplx(0, 2.0 / pi) * (std::log(zeta * 0.5) + gamma_e));
}

inline void bem_terms_at_mu(const BoundaryCurve& curve, const SpectralParameter& smu,
                            const OrbitWindows& w, int Mmax, std::vector<cplx>& out) {
    out.assign(Mmax + 1, 0.0);
    cplx zeta = smu.zeta();
    out[0] = curve.area() * free_diag(zeta);
    if (Mmax == 0) return;
    Eigen::MatrixXcd N, W;
    windowed_matrices_NW(curve, smu, w, N, W, /*link_mask=*/true);
    Eigen::MatrixXcd cur = W;
    for (int M = 1; M <= Mmax; ++M) {
        if (M >= 2) cur = N * cur;
        out[M] = (M % 2 ? -2.0 : 2.0) * cur.trace();
    }
}

}  // namespace detail

struct BemTraceScan {
    std::vector<double> k;
    std::vector<std::vector<cplx>> value;  // value[m][ik] for M = M_list[m]
};

// rho-smoothed trace terms Tr 1 G_{M,rho}(k + i tau log k) on a k-scan.
// A shared mu-grid serves all k samples; the integrand rho(k - mu) T_M(mu)
// has only difference carriers (bandwidth ~ epsilon), so the grid step needs
// to resolve eps-scale oscillation only.
inline BemTraceScan bem_trace_scan(const BoundaryCurve& curve, const TraceWindow& w,
                                   const PeriodicOrbit& orbit, const std::vector<int>& M_list,
                                   const std::vector<double>& ks,
                                   const BemTraceOptions& opt = {}) {
    if (ks.empty()) throw DomainError("bem_trace_scan: empty k list");
    for (int M : M_list)
        if (M > 8) throw DomainError("bem_trace_scan: M above the default cap 8");
    const int Mmax = *std::max_element(M_list.begin(), M_list.end());
    const double kmin = *std::min_element(ks.begin(), ks.end());
    const double kmax = *std::max_element(ks.begin(), ks.end());
    double mu_lo = std::max(opt.mu_min, kmin - opt.mu_halfrange);
    double mu_hi = kmax + opt.mu_halfrange;
    int nmu = int(std::ceil((mu_hi - mu_lo) / opt.mu_step));

    // vertex windows sized per mu: the stationary Gaussian has width
    // sigma(mu) = 1/sqrt(mu lambda_min(H)); the plateau must cover several
    // sigma or the clipped tails pollute the subleading coefficients with
    // mu^{-1/2} artifacts. Windows may not overlap neighbouring vertices.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(orbit.hessian);
    double lam_min = es.eigenvalues().cwiseAbs().minCoeff();
    if (lam_min <= 0.0) throw DegenerateOrbit("bem_trace_scan: singular orbit Hessian");
    double min_gap = curve.total_length();
    for (size_t a = 0; a < orbit.vertices.size(); ++a)
        for (size_t b = a + 1; b < orbit.vertices.size(); ++b)
            min_gap = std::min(min_gap, cyclic_gap(orbit.vertices[a], orbit.vertices[b],
                                                   curve.total_length()));
    auto window_for = [&](double mu) {
        double hw = opt.window_halfwidth;
        if (hw <= 0.0) {
            double sigma = 1.0 / std::sqrt(mu * lam_min);
            // node range 1.6 w0 with w0 = sigmas * sigma; capped so windows
            // stay clear of neighbouring vertices (short cross-window paths
            // are weakly damped and leak through the smoothing tails)
            hw = std::min(1.6 * opt.window_sigmas * sigma, 0.45 * min_gap);
        }
        return make_orbit_windows(curve, orbit.vertices, mu, hw, opt.plateau_frac, opt.ppw,
                                  WindowTaper::supergauss);
    };

    std::vector<std::vector<cplx>> terms(nmu);
    for (int imu = 0; imu < nmu; ++imu) {
        double mu = mu_lo + (imu + 0.5) * (mu_hi - mu_lo) / nmu;
        SpectralParameter smu(mu, w.tau, w.scaling);
        OrbitWindows win = window_for(mu);
        detail::bem_terms_at_mu(curve, smu, win, Mmax, terms[imu]);
    }
    BemTraceScan scan;
    scan.k = ks;
    scan.value.assign(M_list.size(), std::vector<cplx>(ks.size(), 0.0));
    const double dmu = (mu_hi - mu_lo) / nmu;
    // smooth envelope over the mu range: removes truncation boundary terms
    auto envelope = [&](double mu, double kctr) {
        double half = opt.mu_halfrange;
        return plateau_bump(mu - kctr, 0.6 * half, half);
    };
    // The free (M = 0) term is evaluated on the contour mu - iY: rho is entire
    // and the free diagonal has no poles, so the shift is exact and damps the
    // non-oscillatory integrand by e^{-Y t} inside the smoothing. The matrix
    // terms stay on the real grid (their junk is handled by the link mask).
    const double Yshift = 5.0;
    for (size_t ik = 0; ik < ks.size(); ++ik) {
        for (int imu = 0; imu < nmu; ++imu) {
            double mu = mu_lo + (imu + 0.5) * dmu;
            double env = envelope(mu, ks[ik]);
            if (env == 0.0) continue;
            cplx rr = w.rho(cplx(ks[ik] - mu, 0.0));
            SpectralParameter smu(mu, w.tau, w.scaling);
            cplx weight = env * rr * smu.zeta() * dmu;
            for (size_t m = 0; m < M_list.size(); ++m) {
                if (M_list[m] == 0) {
                    cplx muc(mu, -Yshift);
                    cplx zc = w.scaling == SpectralScaling::logarithmic
                                  ? muc + cplx(0, 1) * w.tau * std::log(muc)
                                  : muc + cplx(0, w.tau);
                    scan.value[m][ik] += env * w.rho(cplx(ks[ik] - mu, Yshift)) * zc *
                                         detail::free_diag(zc) * curve.area() * dmu;
                } else if (std::abs(rr) > 1e-15) {
                    scan.value[m][ik] += weight * terms[imu][M_list[m]];
                }
            }
        }
    }
    return scan;
}

inline cplx bem_trace_term(const BoundaryCurve& curve, const TraceWindow& w,
                           const PeriodicOrbit& orbit, double k, int M,
                           const BemTraceOptions& opt = {}) {
    auto scan = bem_trace_scan(curve, w, orbit, {M}, {k}, opt);
    return scan.value[0][0];
}

// ---------------------------------------------------------------------------
// Coefficient extraction from demodulated k-scans.
// ---------------------------------------------------------------------------

struct FitResult {
    std::vector<cplx> B;         // coefficients of k^{-j}, j = 0..J
    double residual = 0.0;       // rms of the demodulated fit residual
    std::vector<double> cov;     // covariance proxy (diagonal)
    std::vector<cplx> demod;     // demodulated samples
};

// Least-squares fit of demodulated trace samples to sum_j B_j k^{-j}.
// Demodulation uses the exact carrier e^{ikL} k^{-tau L s-scale} and the
// plateau normalization 2 pi rho_hat(L) = 2 pi.
inline FitResult fit_expansion(const std::vector<double>& ks, const std::vector<cplx>& values,
                               double L, double tau, int J,
                               SpectralScaling scaling = SpectralScaling::logarithmic,
                               bool degenerate_family = false) {
    if (degenerate_family)
        throw DegenerateOrbitFamily(
            "fit_expansion: power-law model assumes a non-degenerate isolated ray");
    if (int(ks.size()) < 2 * J + 2)
        throw IllConditionedFit("fit_expansion: need at least 2J+2 samples");
    double kmin = *std::min_element(ks.begin(), ks.end());
    double kmax = *std::max_element(ks.begin(), ks.end());
    if (kmax < 1.9 * kmin)
        throw IllConditionedFit("fit_expansion: samples must span at least one octave");

    FitResult out;
    out.demod.resize(ks.size());
    for (size_t i = 0; i < ks.size(); ++i) {
        double s = scaling == SpectralScaling::logarithmic ? std::log(ks[i]) : 1.0;
        cplx carrier = std::exp(cplx(0, 1) * ks[i] * L) * std::exp(-tau * s * L);
        out.demod[i] = values[i] / (carrier * 2.0 * pi);
    }
    // scaled basis (kmin/k)^j for conditioning
    Eigen::MatrixXcd X(ks.size(), J + 1);
    for (size_t i = 0; i < ks.size(); ++i)
        for (int j = 0; j <= J; ++j) X(i, j) = std::pow(kmin / ks[i], j);
    Eigen::VectorXcd y(ks.size());
    for (size_t i = 0; i < ks.size(); ++i) y[i] = out.demod[i];
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double cond = svd.singularValues()(0) / svd.singularValues()(J);
    if (cond > 1e10) throw IllConditionedFit("fit_expansion: design matrix condition > 1e10");
    Eigen::VectorXcd c = svd.solve(y);
    Eigen::VectorXcd r = X * c - y;
    out.residual = std::sqrt(r.squaredNorm() / double(ks.size()));
    out.B.resize(J + 1);
    out.cov.resize(J + 1);
    for (int j = 0; j <= J; ++j) {
        out.B[j] = c[j] * std::pow(kmin, j);  // unscale: c_j (kmin/k)^j = B_j k^{-j}
        // covariance proxy: sigma^2 (X^* X)^{-1} diagonal, via the SVD
        double acc = 0.0;
        for (int m = 0; m <= J; ++m) {
            double sv = svd.singularValues()(m);
            acc += std::norm(svd.matrixV()(j, m)) / (sv * sv);
        }
        out.cov[j] = out.residual * out.residual * acc * std::pow(kmin, 2.0 * j);
    }
    return out;
}

}  // namespace wavetrace
