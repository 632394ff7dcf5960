#pragma once

// Boundary integral machinery for the Dirichlet Helmholtz problem:
//   N(zeta) f(q) = 2 int dnu_{q'} G0(zeta, q, q') f(q') ds(q'),
//   S(zeta) f(q) = int G0(zeta, q, q') f(q') ds(q'),
// with G0 = (i/4) H0^(1)(zeta |x-y|). Nystrom discretization on equispaced
// arclength nodes; the weakly singular kernels are assembled with a
// Kress/Martensen log-split (kernel = A ln(4 sin^2(pi (s-s')/P)) + B with A, B
// smooth periodic), which keeps the disc eigenvalue test at 1e-7 and better.
//
// Kernel conventions (pinned by the disc test): the double-layer cosine sits
// at the second (integration) argument, the diagonal of N/2h is
// +kappa(s)/(2 pi), and on the unit disc the N eigenvalue on e^{in theta} is
//   lambda_n(zeta) = 1 - i pi zeta Jn'(zeta) Hn^(1)(zeta).

#include "billiards.hpp"
#include "geometry.hpp"
#include "specfun.hpp"

#include <Eigen/Dense>

#include <functional>

namespace wavetrace {

// Smooth even bump equal to 1 on [-1/2,1/2], supported in [-1,1], and the
// cutoff exponent delta of the N0/N1 split scale h = k^{delta-1}.
struct CutoffSpec {
    double delta = 0.75;
    CutoffSpec() = default;
    explicit CutoffSpec(double d) : delta(d) {
        if (!(d > 0.5 && d < 1.0)) throw DomainError("CutoffSpec: delta must lie in (1/2, 1)");
    }
    double chi(double x) const { return plateau_bump(x, 0.5, 1.0); }
};

enum class OperatorKind { N, N0, N1, S };

struct BoundaryOperator {
    std::vector<double> nodes;  // equispaced arclength nodes
    double h = 0.0;             // node spacing (trapezoid weight)
    Eigen::MatrixXcd matrix;    // Nystrom matrix (weights folded in)
    SpectralParameter sp;
    OperatorKind kind = OperatorKind::N;
    std::string curve_id;
    int n() const { return int(nodes.size()); }
};

namespace detail {

struct NodeFrame {
    Vec2 q, T, nu;
    double kappa;
};

inline std::vector<NodeFrame> node_frames(const BoundaryCurve& curve,
                                          const std::vector<double>& nodes) {
    std::vector<NodeFrame> F(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        CurveFrame f = curve.frame(nodes[i]);
        F[i] = {f.point, f.tangent, f.inward_normal, f.curvature};
    }
    return F;
}

}  // namespace detail

// Kernel of N(zeta) between boundary points; continuous across the diagonal
// with value +kappa(s)/(2 pi).
inline cplx n_kernel(const BoundaryCurve& curve, const SpectralParameter& sp, double s,
                     double sp2) {
    cplx zeta = sp.zeta();
    CurveFrame a = curve.frame(s), b = curve.frame(sp2);
    Vec2 d = a.point - b.point;
    double l = d.norm();
    if (l < 1e-9 * curve.total_length()) {
        // analytic diagonal limit (small-gap series of H1 against cos-angle)
        return cplx(b.curvature / (2 * pi), 0.0);
    }
    double c = d.dot(b.inward_normal) / l;
    return cplx(0.0, 0.5) * zeta * hankel1(1, zeta * l) * c;
}

inline cplx s_kernel(const BoundaryCurve& curve, const SpectralParameter& sp, double s,
                     double sp2) {
    cplx zeta = sp.zeta();
    Vec2 d = curve.point(s) - curve.point(sp2);
    double l = d.norm();
    if (l == 0.0) throw DiagonalError("s_kernel: log-singular on the diagonal");
    return cplx(0.0, 0.25) * hankel1(0, zeta * l);
}

// Interior-integral return kernel int_{R^2} G0(q,x) dnu_{q'} G0(x,q') dx
// = (1/2 zeta) d/dzeta [dnu_{q'} G0(zeta, q, q')] = (i/8) l H0(zeta l) cos-angle
// (resolvent-square identity R0^2 = dR0/d(zeta^2) with R0 = (-Lap - zeta^2)^{-1}):
// the closed form behind Prop-COMP-style compositions away from endpoints.
inline cplx return_kernel_duality(const BoundaryCurve& curve, const SpectralParameter& sp,
                                  double s, double sp2) {
    cplx zeta = sp.zeta();
    CurveFrame a = curve.frame(s), b = curve.frame(sp2);
    Vec2 d = a.point - b.point;
    double l = d.norm();
    if (l == 0.0) return 0.0;
    double c = d.dot(b.inward_normal) / l;
    return cplx(0.0, 0.125) * l * hankel1(0, zeta * l) * c;
}

namespace detail {

// Kress quadrature weights for int_0^P ln(4 sin^2(pi (s-s')/P)) f(s') ds' on
// n equispaced nodes: weight R_{|i-j|}.
inline std::vector<double> kress_weights(int n, double P) {
    std::vector<double> R(n, 0.0);
    for (int m = 0; m < n; ++m) {
        double acc = 0.0;
        for (int k = 1; k < n / 2; ++k) acc += std::cos(2 * pi * k * m / n) / k;
        R[m] = -(4 * pi / n) * acc - (4 * pi / (n * n)) * std::cos(pi * m);
        R[m] *= P / (2 * pi);  // period scaling
    }
    return R;
}

// Log-split pieces of the N kernel: N = A ln(4 sin^2(pi (s-s')/P)) + B.
inline void n_kernel_split(const BoundaryCurve& curve, const SpectralParameter& sp,
                           const NodeFrame& a, const NodeFrame& b, double s, double sp2, cplx& A,
                           cplx& B) {
    const double P = curve.total_length();
    cplx zeta = sp.zeta();
    Vec2 d = a.q - b.q;
    double l = d.norm();
    double u = pi * (s - sp2) / P;
    double sn = 2.0 * std::abs(std::sin(u));
    if (l < 1e-9 * P) {
        A = 0.0;
        B = cplx(b.kappa / (2 * pi), 0.0);
        return;
    }
    double c = d.dot(b.nu) / l;
    cplx z = zeta * l;
    cplx J1 = besselj01(1, z);
    cplx Yt1 = bessel_ytilde01(1, z);
    // H1 = J1 (1 + (2i/pi) ln(z/2)) + i Yt1, ln(l) = ln(l/sn) + ln(sn);
    // ln(sn) = (1/2) ln(4 sin^2) goes to the log-weighted part A.
    A = -(zeta * c / (2 * pi)) * J1;
    cplx logpart = std::log(zeta * 0.5) + std::log(l / sn);
    B = cplx(0.0, 0.5) * zeta * c *
        (J1 * (1.0 + cplx(0.0, 2.0 / pi) * logpart) + cplx(0.0, 1.0) * Yt1);
}

// Log-split of the single-layer kernel S = G0.
inline void s_kernel_split(const BoundaryCurve& curve, const SpectralParameter& sp,
                           const NodeFrame& a, const NodeFrame& b, double s, double sp2, cplx& A,
                           cplx& B) {
    const double P = curve.total_length();
    cplx zeta = sp.zeta();
    Vec2 d = a.q - b.q;
    double l = d.norm();
    if (l < 1e-9 * P) {
        // z -> 0: J0 = 1, Ytilde0(0) = 2 gamma/pi, ln(l/sn) -> ln(P/(2 pi))
        constexpr double gamma_e = 0.57721566490153286;
        A = cplx(-1.0 / (4 * pi), 0.0);
        cplx logpart = std::log(zeta * 0.5) + std::log(P / (2 * pi));
        B = cplx(0.0, 0.25) *
            (1.0 + cplx(0.0, 2.0 / pi) * logpart + cplx(0.0, 1.0) * cplx(2.0 * gamma_e / pi, 0.0));
        return;
    }
    double u = pi * (s - sp2) / P;
    double sn = 2.0 * std::abs(std::sin(u));
    cplx z = zeta * l;
    cplx J0 = besselj01(0, z);
    cplx Yt0 = bessel_ytilde01(0, z);
    A = -J0 / (4 * pi);
    cplx logpart = std::log(zeta * 0.5) + std::log(l / sn);
    B = cplx(0.0, 0.25) * (J0 * (1.0 + cplx(0.0, 2.0 / pi) * logpart) + cplx(0.0, 1.0) * Yt0);
}

}  // namespace detail

inline std::pair<BoundaryOperator, BoundaryOperator> split(const BoundaryOperator& Nop,
                                                           const CutoffSpec& cutoff,
                                                           const BoundaryCurve& curve);

// Nystrom assembly. The resolution rule n >= 8 k P / (2 pi) (eight points per
// wavelength) is enforced; kress=false falls back to the plain trapezoid.
inline BoundaryOperator assemble(const BoundaryCurve& curve, const SpectralParameter& sp,
                                 int n_nodes, OperatorKind kind,
                                 const CutoffSpec& cutoff = CutoffSpec(), bool kress = true) {
    const double P = curve.total_length();
    if (double(n_nodes) < 8.0 * sp.k * P / (2 * pi) * 0.999)
        throw ResolutionError("assemble: need n >= 8 k P / (2 pi) nodes");
    if (n_nodes % 2) throw ResolutionError("assemble: node count must be even");
    if (kind == OperatorKind::S && !kress)
        throw DiagonalError("plain trapezoid cannot integrate the S log singularity");
    if (kind == OperatorKind::N0 || kind == OperatorKind::N1) {
        auto full = assemble(curve, sp, n_nodes, OperatorKind::N, cutoff, kress);
        auto [n0, n1] = split(full, cutoff, curve);
        return kind == OperatorKind::N0 ? std::move(n0) : std::move(n1);
    }
    BoundaryOperator op;
    op.sp = sp;
    op.kind = kind;
    op.h = P / n_nodes;
    op.curve_id = curve.describe();
    op.nodes.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) op.nodes[i] = i * op.h;
    auto F = detail::node_frames(curve, op.nodes);
    op.matrix.resize(n_nodes, n_nodes);
    if (!kress) {
        for (int i = 0; i < n_nodes; ++i)
            for (int j = 0; j < n_nodes; ++j) {
                Vec2 d = F[i].q - F[j].q;
                double l = d.norm();
                cplx val;
                if (i == j)
                    val = cplx(F[j].kappa / (2 * pi), 0.0);
                else
                    val = cplx(0.0, 0.5) * sp.zeta() * hankel1(1, sp.zeta() * l) *
                          (d.dot(F[j].nu) / l);
                op.matrix(i, j) = op.h * val;
            }
        return op;
    }
    auto R = detail::kress_weights(n_nodes, P);
    for (int i = 0; i < n_nodes; ++i)
        for (int j = 0; j < n_nodes; ++j) {
            cplx A, B;
            if (kind == OperatorKind::N)
                detail::n_kernel_split(curve, sp, F[i], F[j], op.nodes[i], op.nodes[j], A, B);
            else
                detail::s_kernel_split(curve, sp, F[i], F[j], op.nodes[i], op.nodes[j], A, B);
            op.matrix(i, j) = R[std::abs(i - j)] * A + op.h * B;
        }
    return op;
}

// Multiplicative partition N = N0 + N1 by chi(k^{1-delta} |q - q'|), applied
// entrywise to the assembled matrix (exact partition of unity).
inline std::pair<BoundaryOperator, BoundaryOperator> split(const BoundaryOperator& Nop,
                                                           const CutoffSpec& cutoff,
                                                           const BoundaryCurve& curve) {
    if (Nop.kind != OperatorKind::N) throw DomainError("split: operator must be kind N");
    BoundaryOperator N0 = Nop, N1 = Nop;
    N0.kind = OperatorKind::N0;
    N1.kind = OperatorKind::N1;
    const double scale = std::pow(Nop.sp.k, 1.0 - cutoff.delta);
    auto F = detail::node_frames(curve, Nop.nodes);
    for (int i = 0; i < Nop.n(); ++i)
        for (int j = 0; j < Nop.n(); ++j) {
            double l = (F[i].q - F[j].q).norm();
            double chi = cutoff.chi(scale * l);
            N0.matrix(i, j) = chi * Nop.matrix(i, j);
            N1.matrix(i, j) = Nop.matrix(i, j) - N0.matrix(i, j);  // exact partition
        }
    return {std::move(N0), std::move(N1)};
}

// Single / double layer potentials evaluated at interior targets.
enum class LayerKind { single, double_layer };

inline std::vector<cplx> layer_eval(const BoundaryCurve& curve, const SpectralParameter& sp,
                                    const std::vector<cplx>& density,
                                    const std::vector<Vec2>& targets, LayerKind kind,
                                    int n_nodes) {
    const double P = curve.total_length();
    const double h = P / n_nodes;
    std::vector<double> nodes(n_nodes);
    for (int i = 0; i < n_nodes; ++i) nodes[i] = i * h;
    if (int(density.size()) != n_nodes)
        throw DomainError("layer_eval: density must be sampled on the node grid");
    auto F = detail::node_frames(curve, nodes);
    std::vector<cplx> out(targets.size(), 0.0);
    for (size_t t = 0; t < targets.size(); ++t) {
        // quadrature validity: target must keep clear of the boundary
        double dist = std::numeric_limits<double>::max();
        for (auto& f : F) dist = std::min(dist, (targets[t] - f.q).norm());
        if (dist <= 2 * pi / n_nodes) throw TargetTooClose("layer_eval: target within 2 pi / n");
        cplx acc = 0.0;
        for (int j = 0; j < n_nodes; ++j) {
            if (kind == LayerKind::single)
                acc += free_green(sp, targets[t], F[j].q) * density[j];
            else
                acc += free_green_normal_derivative(sp, targets[t], F[j].q, F[j].nu) * density[j];
        }
        out[t] = acc * h;
    }
    return out;
}

enum class GreenMethod { direct_solve, neumann_series };

// Dirichlet Green's function G_Omega(zeta, x, y) by layer potentials:
// G = G0 + Dl mu with mu = -2 (I + N)^{-1} r G0(., y); the Neumann-series
// variant truncates (I+N)^{-1} = sum (-1)^m N^m at M0.
inline cplx dirichlet_green(const BoundaryCurve& curve, const SpectralParameter& sp, Vec2 x,
                            Vec2 y, GreenMethod method = GreenMethod::direct_solve, int M0 = 12,
                            const BoundaryOperator* pre = nullptr) {
    const double P = curve.total_length();
    int n = int(std::ceil(8.0 * sp.k * P / (2 * pi))) + 16;
    if (n % 2) ++n;
    BoundaryOperator local;
    if (!pre) {
        local = assemble(curve, sp, n, OperatorKind::N);
        pre = &local;
    }
    auto F = detail::node_frames(curve, pre->nodes);
    Eigen::VectorXcd rhs(pre->n());
    for (int j = 0; j < pre->n(); ++j) rhs[j] = -2.0 * free_green(sp, F[j].q, y);
    Eigen::VectorXcd mu;
    if (method == GreenMethod::direct_solve) {
        Eigen::MatrixXcd A =
            Eigen::MatrixXcd::Identity(pre->n(), pre->n()) + pre->matrix;
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        double rc = lu.rcond();
        if (rc < 1e-12)
            throw SolveFailure("dirichlet_green: I + N ill-conditioned (near real resonance)");
        mu = lu.solve(rhs);
    } else {
        mu = rhs;
        Eigen::VectorXcd term = rhs;
        for (int m = 1; m <= M0; ++m) {
            term = pre->matrix * term;
            mu += (m % 2 ? -1.0 : 1.0) * term;
        }
    }
    cplx G = free_green(sp, x, y);
    for (int j = 0; j < pre->n(); ++j)
        G += pre->h * free_green_normal_derivative(sp, x, F[j].q, F[j].nu) * mu[j];
    return G;
}

// ---------------------------------------------------------------------------
// Interior return operator by explicit 2-D quadrature (Prop-COMP composition).
// ---------------------------------------------------------------------------

// Interior cutoff: a smooth strip indicator around the chord [a, b] times a
// direction window (angle of x - q' against the chord direction).
struct ReturnCutoff {
    Vec2 a, b;               // chord endpoints (orbit link)
    double halfwidth = 0.0;  // transverse half width (default 4 k^{-1/2})
    double dir_cos = 0.8;    // direction window: cos angle >= dir_cos
    int ppw = 6;             // interior points per wavelength
    bool zero = false;       // zero cutoff (for the trivial test)
};

// Single entry of Sl^tr chi Dl by tensor quadrature over the strip. The strip
// runs the full chord (the stationary manifold is the whole segment, so any
// longitudinal clipping removes trace mass proportionally); it is clipped to
// the interior of Omega and tapered smoothly in the transverse direction.
inline cplx boundary_return_entry(const BoundaryCurve& curve, const SpectralParameter& sp,
                                  const ReturnCutoff& rc, double s, double sp2) {
    if (rc.zero) return 0.0;
    if (rc.ppw < 6) throw ResolutionError("boundary_return: need >= 6 points per wavelength");
    Vec2 chord = rc.b - rc.a;
    double L = chord.norm();
    Vec2 el = chord / L, et = el.rot90();
    double w = rc.halfwidth > 0 ? rc.halfwidth : 4.0 / std::sqrt(sp.k);
    double hh = 2 * pi / (sp.k * rc.ppw);
    // overshoot the segment slightly; the Omega clip trims the ends
    double over = 2 * w;
    int nl = std::max(8, int(std::ceil((L + 2 * over) / hh)));
    int nt = std::max(8, int(std::ceil(2 * w / hh)));
    CurveFrame fq = curve.frame(s), fq2 = curve.frame(sp2);
    cplx acc = 0.0;
    const double eps = 1e-9;
    for (int i = 0; i < nl; ++i) {
        double t = -over + (L + 2 * over) * (i + 0.5) / nl;
        for (int j = 0; j < nt; ++j) {
            double u = -w + 2 * w * (j + 0.5) / nt;
            double wt = plateau_bump(u, w / 2, w);
            Vec2 x = rc.a + t * el + u * et;
            if (!curve.contains(x)) continue;
            Vec2 d1 = x - fq.point, d2 = x - fq2.point;
            if (d1.norm() < eps || d2.norm() < eps) continue;
            double cosdir = std::abs(d2.normalized().dot(el));
            double wd = plateau_bump(1.0 - cosdir, 0.5 * (1.0 - rc.dir_cos), 1.0 - rc.dir_cos);
            double chi = wt * wd;
            if (chi == 0.0) continue;
            acc += chi * free_green(sp, fq.point, x) *
                   free_green_normal_derivative(sp, x, fq2.point, fq2.inward_normal);
        }
    }
    return acc * ((L + 2 * over) / nl) * (2.0 * w / nt);
}

// Full n x n return operator (feasible at moderate k; the quadrature cost is
// n^2 times the strip grid).
inline BoundaryOperator boundary_return(const BoundaryCurve& curve, const SpectralParameter& sp,
                                        const ReturnCutoff& rc, int n_nodes) {
    const double P = curve.total_length();
    BoundaryOperator op;
    op.sp = sp;
    op.kind = OperatorKind::S;  // boundary-to-boundary composition
    op.h = P / n_nodes;
    op.curve_id = curve.describe();
    op.nodes.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) op.nodes[i] = i * op.h;
    op.matrix.resize(n_nodes, n_nodes);
    for (int i = 0; i < n_nodes; ++i)
        for (int j = 0; j < n_nodes; ++j)
            op.matrix(i, j) = boundary_return_entry(curve, sp, rc, op.nodes[i], op.nodes[j]);
    return op;
}

// ---------------------------------------------------------------------------
// Orbit-windowed node sets (the chi_{d gamma} micro-localization).
// ---------------------------------------------------------------------------

struct OrbitWindows {
    std::vector<double> nodes;  // arclength positions
    std::vector<double> taper;  // smooth window value at each node
    std::vector<int> block;     // orbit-vertex window index per node
    int n_blocks = 0;
    double h = 0.0;  // spacing

    // phase-space part of the chi_{d gamma} cutoff: a kernel factor may only
    // connect consecutive windows of the orbit's cyclic vertex order (both
    // orientations); same-window links carry the undamped near-diagonal junk
    bool link_allowed(int i, int j) const {
        if (n_blocks < 2) return true;
        int d = std::abs(block[i] - block[j]);
        return d == 1 || d == n_blocks - 1;
    }
};

enum class WindowTaper {
    bump,       // compactly supported plateau bump
    supergauss  // exp(-(off/w0)^8): machine-zero tails, superpolynomial edge
                // suppression, and all jets through order 7 vanish at 0 so
                // stationary-phase coefficients up to k^{-3} are untouched
};

// Equispaced nodes covering +-half_width around each orbit vertex, tapered
// smoothly to zero at the edges.
inline OrbitWindows make_orbit_windows(const BoundaryCurve& curve,
                                       const std::vector<double>& vertices, double mu_max,
                                       double half_width, double plateau_frac = 0.5, int ppw = 5,
                                       WindowTaper kind = WindowTaper::bump) {
    OrbitWindows w;
    w.h = 2 * pi / (mu_max * ppw);
    w.n_blocks = int(vertices.size());
    int m = int(std::ceil(2 * half_width / w.h));
    const double P = curve.total_length();
    const double w0 = half_width / 1.6;  // supergauss scale: e^{-1.6^8} ~ 4e-19 at the edge
    for (size_t v = 0; v < vertices.size(); ++v) {
        for (int i = 0; i < m; ++i) {
            double off = -half_width + (i + 0.5) * (2 * half_width) / m;
            double t = kind == WindowTaper::bump
                           ? plateau_bump(off, plateau_frac * half_width, half_width)
                           : std::exp(-std::pow(off / w0, 8.0));
            w.nodes.push_back(wrap(vertices[v] + off, P));
            w.taper.push_back(t);
            w.block.push_back(int(v));
        }
    }
    return w;
}

// Windowed kernel matrices (plain trapezoid with the taper as row weight).
enum class WindowedKernel { N, W_duality };

// Assemble both windowed kernels at once, sharing the Hankel evaluations of
// each unordered node pair (the hot path of the trace scans).
inline void windowed_matrices_NW(const BoundaryCurve& curve, const SpectralParameter& sp,
                                 const OrbitWindows& w, Eigen::MatrixXcd& N, Eigen::MatrixXcd& W,
                                 bool link_mask = false) {
    const int m = int(w.nodes.size());
    auto F = detail::node_frames(curve, w.nodes);
    cplx zeta = sp.zeta();
    N.setZero(m, m);
    W.setZero(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = i; j < m; ++j) {
            if (link_mask && !w.link_allowed(i, j)) continue;
            Vec2 d = F[i].q - F[j].q;
            double l = d.norm();
            if (l < 1e-12) {
                N(i, j) = w.taper[i] * w.h * cplx(F[j].kappa / (2 * pi), 0.0);
                N(j, i) = w.taper[j] * w.h * cplx(F[i].kappa / (2 * pi), 0.0);
                continue;
            }
            cplx H0, H1;
            hankel1_pair(zeta * l, H0, H1);
            double cj = d.dot(F[j].nu) / l;   // cos angle at the second argument
            double ci = -d.dot(F[i].nu) / l;  // for the transposed pair
            N(i, j) = w.taper[i] * w.h * cplx(0.0, 0.5) * zeta * H1 * cj;
            N(j, i) = w.taper[j] * w.h * cplx(0.0, 0.5) * zeta * H1 * ci;
            W(i, j) = w.taper[i] * w.h * cplx(0.0, 0.125) * l * H0 * cj;
            W(j, i) = w.taper[j] * w.h * cplx(0.0, 0.125) * l * H0 * ci;
        }
}

inline Eigen::MatrixXcd windowed_matrix(const BoundaryCurve& curve, const SpectralParameter& sp,
                                        const OrbitWindows& w, WindowedKernel which) {
    Eigen::MatrixXcd N, W;
    windowed_matrices_NW(curve, sp, w, N, W);
    return which == WindowedKernel::N ? N : W;
}

// ---------------------------------------------------------------------------
// Tail-decay experiment: Frobenius norms of the rho-smoothed, orbit-windowed
// powers  rho * [ N(mu + i tau log mu)^{M0} W(mu + i tau log mu) ].
// ---------------------------------------------------------------------------

struct TailDecayRow {
    double k = 0.0, tau = 0.0;
    int M0 = 0;
    double frobenius = 0.0;
};

inline std::vector<TailDecayRow> tail_decay(const BoundaryCurve& curve,
                                            const std::vector<double>& k_list,
                                            const std::vector<int>& M0_list,
                                            const std::vector<double>& tau_list,
                                            const std::vector<double>& orbit_vertices,
                                            const std::function<cplx(cplx)>& rho,
                                            double mu_halfrange = 60.0, double mu_step = 0.35,
                                            double window_halfwidth = 0.9) {
    std::vector<TailDecayRow> rows;
    int M0max = *std::max_element(M0_list.begin(), M0_list.end());
    for (double tau : tau_list) {
        for (double k : k_list) {
            double mu_lo = std::max(4.0, k - mu_halfrange);
            double mu_hi = k + mu_halfrange;
            int nmu = int(std::ceil((mu_hi - mu_lo) / mu_step));
            OrbitWindows w = make_orbit_windows(curve, orbit_vertices, mu_hi, window_halfwidth);
            const int m = int(w.nodes.size());
            std::vector<Eigen::MatrixXcd> acc(M0max + 1, Eigen::MatrixXcd::Zero(m, m));
            for (int imu = 0; imu < nmu; ++imu) {
                double mu = mu_lo + (imu + 0.5) * (mu_hi - mu_lo) / nmu;
                SpectralParameter smu(mu, tau, SpectralScaling::logarithmic);
                cplx weight = rho(cplx(k - mu, 0.0)) * smu.zeta() * ((mu_hi - mu_lo) / nmu);
                if (std::abs(weight) < 1e-16) continue;
                Eigen::MatrixXcd N, W;
                windowed_matrices_NW(curve, smu, w, N, W, /*link_mask=*/true);
                Eigen::MatrixXcd cur = W;
                acc[0] += weight * cur;
                for (int M0 = 1; M0 <= M0max; ++M0) {
                    cur = N * cur;
                    acc[M0] += weight * cur;
                }
            }
            for (int M0 : M0_list)
                rows.push_back({k, tau, M0, std::sqrt(acc[M0].squaredNorm())});
        }
    }
    return rows;
}

}  // namespace wavetrace
