#pragma once

// Billiard dynamics on a smooth convex (or mildly non-convex) table: the
// closed-polygon length functional with analytic gradient and Hessian, the
// billiard map in Birkhoff coordinates (arclength, tangential momentum),
// periodic-orbit search by damped Newton, Poincare data via the
// Kozlov-Treshchev Hessian identity, and length-spectrum enumeration.
//
// The length functional closes the polygon: L = sum_j |q(phi_j) - q(phi_{j+1})|
// with cyclic indexing, so Snell polygons are exactly its critical points and
// dL/dphi_j = T(phi_j) . [e_{j,j-1} + e_{j,j+1}] with e_{j,i} the unit vector
// from q(phi_i) to q(phi_j). This vanishes on regular polygons of the disc,
// which fixes the sign convention left open by the two-angle form.

#include "common.hpp"
#include "geometry.hpp"

#include <Eigen/Dense>

#include <functional>
#include <map>
#include <numeric>
#include <random>

namespace wavetrace {

struct BilliardParams {
    double collision_gap_rel = 1e-6;  // times perimeter
    double grazing_guard = 1e-8;
    double newton_tol = 1e-12;
    double degen_tol = 1e-10;
    double dedup_tol = 1e-8;
    double monodromy_step = 1e-5;
    double cross_tol = 1e-6;
};

using PolygonConfig = std::vector<double>;  // vertex arclength values, M >= 2

struct BilliardState {
    double phi = 0.0;  // arclength
    double p = 0.0;    // tangential momentum = sin(angle from inward normal)
};

enum class Stability { elliptic, hyperbolic, degenerate };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::elliptic: return "elliptic";
        case Stability::hyperbolic: return "hyperbolic";
        default: return "degenerate";
    }
}

struct PeriodicOrbit {
    PolygonConfig vertices;
    double length = 0.0;
    Eigen::MatrixXd hessian;
    std::vector<double> b_offdiag;
    double det_hessian = 0.0;
    double det_i_minus_p = 0.0;            // Kozlov-Treshchev value
    double det_i_minus_p_monodromy = 0.0;  // finite-difference cross-check
    Stability stability = Stability::degenerate;
    double elliptic_angle = 0.0;  // alpha with eigenvalues e^{+-i alpha}
    std::pair<int, int> rotation{0, 0};
    Eigen::MatrixXd inverse_hessian;
    Eigen::Matrix2d monodromy = Eigen::Matrix2d::Zero();
    int links() const { return int(vertices.size()); }
};

namespace detail {

inline void check_nonsingular(const BoundaryCurve& curve, const PolygonConfig& cfg,
                              const BilliardParams& par) {
    if (cfg.size() < 2) throw SingularConfig("config needs at least 2 vertices");
    const double gap = par.collision_gap_rel * curve.total_length();
    const size_t M = cfg.size();
    for (size_t j = 0; j < M; ++j)
        if (cyclic_gap(cfg[j], cfg[(j + 1) % M], curve.total_length()) <= gap)
            throw SingularConfig("consecutive vertices closer than collision gap");
}

}  // namespace detail

inline double length(const BoundaryCurve& curve, const PolygonConfig& cfg,
                     const BilliardParams& par = {}) {
    detail::check_nonsingular(curve, cfg, par);
    const size_t M = cfg.size();
    double L = 0.0;
    for (size_t j = 0; j < M; ++j)
        L += (curve.point(cfg[j]) - curve.point(cfg[(j + 1) % M])).norm();
    return L;
}

inline Eigen::VectorXd length_gradient(const BoundaryCurve& curve, const PolygonConfig& cfg,
                                       const BilliardParams& par = {}) {
    detail::check_nonsingular(curve, cfg, par);
    const size_t M = cfg.size();
    std::vector<CurveFrame> F(M);
    for (size_t j = 0; j < M; ++j) F[j] = curve.frame(cfg[j]);
    Eigen::VectorXd g(M);
    for (size_t j = 0; j < M; ++j) {
        Vec2 eprev = (F[j].point - F[(j + M - 1) % M].point).normalized();
        Vec2 enext = (F[j].point - F[(j + 1) % M].point).normalized();
        g[j] = F[j].tangent.dot(eprev + enext);
    }
    return g;
}

// Hessian of the closed length functional and the per-edge mixed partials b_j
// (b_j = d^2 |q(phi_j) - q(phi_{j+1})| / dphi_j dphi_{j+1}).
inline std::pair<Eigen::MatrixXd, std::vector<double>> length_hessian(
    const BoundaryCurve& curve, const PolygonConfig& cfg, const BilliardParams& par = {}) {
    detail::check_nonsingular(curve, cfg, par);
    const size_t M = cfg.size();
    std::vector<CurveFrame> F(M);
    for (size_t j = 0; j < M; ++j) F[j] = curve.frame(cfg[j]);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(M, M);
    std::vector<double> b(M, 0.0);
    for (size_t j = 0; j < M; ++j) {
        size_t k = (j + 1) % M;
        Vec2 d = F[j].point - F[k].point;
        double l = d.norm();
        Vec2 e = d / l;
        double tj = F[j].tangent.dot(e), tk = F[k].tangent.dot(e);
        double djj = F[j].curvature * F[j].inward_normal.dot(e) + (1.0 - tj * tj) / l;
        double dkk = -F[k].curvature * F[k].inward_normal.dot(e) + (1.0 - tk * tk) / l;
        double djk = -(F[j].tangent.dot(F[k].tangent) - tj * tk) / l;
        b[j] = djk;
        H(j, j) += djj;
        H(k, k) += dkk;
        H(j, k) += djk;
        H(k, j) += djk;
    }
    return {H, b};
}

// One step of the billiard map in Birkhoff coordinates.
inline BilliardState billiard_map(const BoundaryCurve& curve, const BilliardState& st,
                                  const BilliardParams& par = {}) {
    if (std::abs(st.p) >= 1.0) throw GrazingRay("input |p| >= 1");
    CurveFrame f0 = curve.frame(st.phi);
    double c = std::sqrt(1.0 - st.p * st.p);
    Vec2 d = st.p * f0.tangent + c * f0.inward_normal;
    Vec2 x0 = f0.point;

    // locate the next transversal intersection of the ray x0 + t d
    const int K = 2048;
    const double P = curve.total_length();
    const double tmin = 1e-9 * P;
    double best_t = -1.0, best_th = 0.0;
    auto h = [&](double th) { return d.cross(curve.raw_point(th) - x0); };
    double prev_th = 0.0, prev_h = h(0.0);
    for (int i = 1; i <= K; ++i) {
        double th = 2 * pi * i / K;
        double cur = h(th);
        if ((prev_h > 0) != (cur > 0)) {
            double a = prev_th, bth = th;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (a + bth);
                ((h(mid) > 0) == (prev_h > 0) ? a : bth) = mid;
            }
            double th_star = 0.5 * (a + bth);
            double t = (curve.raw_point(th_star) - x0).dot(d);
            if (t > tmin && (curve.raw_point(th_star) - (x0 + t * d)).norm() < 1e-7 * P) {
                if (best_t < 0 || t < best_t) {
                    best_t = t;
                    best_th = th_star;
                }
            }
        }
        prev_th = th;
        prev_h = cur;
    }
    if (best_t < 0) throw NoIntersection("ray found no forward boundary intersection");
    double s1 = curve.s_of_theta(best_th);
    CurveFrame f1 = curve.frame(s1);
    double p1 = d.dot(f1.tangent);
    if (std::abs(p1) >= 1.0 - par.grazing_guard) throw GrazingRay("next intersection grazes");
    return {s1, p1};
}

// Orbit canonicalization: minimal representative under cyclic shifts and
// reversal (vertex values sorted lexicographically after rotation).
namespace detail {

inline PolygonConfig canonical_config(const BoundaryCurve& curve, PolygonConfig cfg) {
    const double P = curve.total_length();
    for (auto& v : cfg) v = wrap(v, P);
    const size_t M = cfg.size();
    PolygonConfig best;
    auto consider = [&](PolygonConfig c) {
        // rotate so the smallest vertex comes first
        size_t i0 = std::min_element(c.begin(), c.end()) - c.begin();
        std::rotate(c.begin(), c.begin() + i0, c.end());
        if (best.empty() || std::lexicographical_compare(c.begin(), c.end(), best.begin(), best.end()))
            best = c;
    };
    for (size_t s = 0; s < M; ++s) {
        PolygonConfig c(cfg.begin(), cfg.end());
        std::rotate(c.begin(), c.begin() + s, c.end());
        consider(c);
        std::reverse(c.begin(), c.end());
        consider(c);
    }
    return best;
}

inline bool match_under_shift(const PolygonConfig& a, const PolygonConfig& b, double P,
                              double tol) {
    for (int rev = 0; rev < 2; ++rev) {
        PolygonConfig vb = b;
        if (rev) std::reverse(vb.begin(), vb.end());
        for (size_t s = 0; s < vb.size(); ++s) {
            bool ok = true;
            for (size_t j = 0; j < vb.size() && ok; ++j)
                ok = cyclic_gap(a[j], vb[(j + s) % vb.size()], P) < tol;
            if (ok) return true;
        }
    }
    return false;
}

inline bool same_orbit(const BoundaryCurve& curve, const PeriodicOrbit& a, const PeriodicOrbit& b,
                       double tol) {
    if (a.links() != b.links()) return false;
    if (std::abs(a.length - b.length) > tol * (1.0 + a.length)) return false;
    const double P = curve.total_length();
    const double vtol = 1e-5 * P + tol;
    if (curve.shape() == CurveShape::circle) {
        // rotational family: compare the cyclic gap patterns only
        auto gaps = [&](const PolygonConfig& v) {
            PolygonConfig g(v.size());
            for (size_t j = 0; j < v.size(); ++j)
                g[j] = wrap(v[(j + 1) % v.size()] - v[j], P);
            return g;
        };
        return match_under_shift(gaps(a.vertices), gaps(b.vertices), P, vtol);
    }
    if (match_under_shift(a.vertices, b.vertices, P, vtol)) return true;
    // declared reflection symmetries: s -> wrap(c - s)
    std::vector<double> refl;
    if (curve.symmetric_x()) refl.push_back(0.0);
    if (curve.symmetric_y()) refl.push_back(2.0 * curve.s_of_theta(pi / 2));
    for (double c : refl) {
        PolygonConfig vb = b.vertices;
        for (auto& v : vb) v = wrap(c - v, P);
        if (match_under_shift(a.vertices, vb, P, vtol)) return true;
    }
    return false;
}

}  // namespace detail

// Poincare data from the Hessian identity and the finite-difference monodromy.
inline void poincare_data(const BoundaryCurve& curve, PeriodicOrbit& orbit,
                          const BilliardParams& par = {}) {
    const int M = orbit.links();
    double scale = orbit.hessian.cwiseAbs().maxCoeff();
    if (std::abs(orbit.det_hessian) < par.degen_tol * std::pow(std::max(scale, 1e-30), M))
        throw DegenerateOrbit("length Hessian is singular");
    orbit.inverse_hessian = orbit.hessian.inverse();

    double prodb = 1.0;
    for (double bj : orbit.b_offdiag) prodb *= bj;
    orbit.det_i_minus_p = -orbit.det_hessian / prodb;

    // monodromy by centered differences of the M-step billiard map
    auto advance = [&](BilliardState st) {
        for (int j = 0; j < M; ++j) st = billiard_map(curve, st, par);
        return st;
    };
    // starting state: first vertex, momentum toward the second vertex
    CurveFrame f0 = curve.frame(orbit.vertices[0]);
    Vec2 e = (curve.point(orbit.vertices[1 % M]) - f0.point).normalized();
    BilliardState base{orbit.vertices[0], e.dot(f0.tangent)};
    const double P = curve.total_length();
    // arclength differences are taken on the circle (trajectories may wrap)
    auto cyc_diff = [&](double a, double b) { return wrap(a - b + P / 2, P) - P / 2; };
    auto jac = [&](double h) {
        Eigen::Matrix2d J;
        BilliardState sp = advance({base.phi + h, base.p});
        BilliardState sm = advance({base.phi - h, base.p});
        J(0, 0) = cyc_diff(sp.phi, sm.phi) / (2 * h);
        J(1, 0) = (sp.p - sm.p) / (2 * h);
        sp = advance({base.phi, base.p + h});
        sm = advance({base.phi, base.p - h});
        J(0, 1) = cyc_diff(sp.phi, sm.phi) / (2 * h);
        J(1, 1) = (sp.p - sm.p) / (2 * h);
        return J;
    };
    const double h = par.monodromy_step;
    // Richardson-extrapolated centered differences, O(h^4)
    Eigen::Matrix2d J = (4.0 * jac(h) - jac(2 * h)) / 3.0;
    orbit.monodromy = J;
    orbit.det_i_minus_p_monodromy = (Eigen::Matrix2d::Identity() - J).determinant();

    double tr = J.trace();
    if (std::abs(std::abs(tr) - 2.0) < 1e-7) {
        orbit.stability = Stability::degenerate;
    } else if (std::abs(tr) < 2.0) {
        orbit.stability = Stability::elliptic;
        orbit.elliptic_angle = std::acos(tr / 2.0);  // alpha in (0, pi)
    } else {
        orbit.stability = Stability::hyperbolic;
        orbit.elliptic_angle = 0.0;
    }
}

// Newton search for an M-link Snell polygon from a single seed.
// Returns an orbit without rotation/stability classification on success.
inline std::optional<PeriodicOrbit> refine_orbit(const BoundaryCurve& curve, PolygonConfig cfg,
                                                 const BilliardParams& par = {}) {
    const double P = curve.total_length();
    const size_t M = cfg.size();
    auto valid = [&](const PolygonConfig& c) {
        for (size_t j = 0; j < M; ++j)
            if (cyclic_gap(c[j], c[(j + 1) % M], P) <= par.collision_gap_rel * P * 2) return false;
        return true;
    };
    if (!valid(cfg)) return std::nullopt;
    for (int it = 0; it < 80; ++it) {
        Eigen::VectorXd g;
        try {
            g = length_gradient(curve, cfg, par);
        } catch (const SingularConfig&) {
            return std::nullopt;
        }
        double gn = g.lpNorm<Eigen::Infinity>();
        if (gn < par.newton_tol) break;
        auto [H, b] = length_hessian(curve, cfg, par);
        Eigen::VectorXd step;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
        if (lu.isInvertible()) {
            step = lu.solve(g);
        } else {
            Eigen::MatrixXd Hr = H + 1e-8 * Eigen::MatrixXd::Identity(M, M);
            step = Hr.fullPivLu().solve(g);
        }
        // backtracking on |grad|^2
        double lam = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 30; ++bt, lam *= 0.5) {
            PolygonConfig trial = cfg;
            for (size_t j = 0; j < M; ++j) trial[j] = wrap(cfg[j] - lam * step[j], P);
            if (!valid(trial)) continue;
            double tn;
            try {
                tn = length_gradient(curve, trial, par).lpNorm<Eigen::Infinity>();
            } catch (const SingularConfig&) {
                continue;
            }
            if (tn < gn) {
                cfg = trial;
                moved = true;
                break;
            }
        }
        if (!moved) return std::nullopt;
    }
    Eigen::VectorXd g = length_gradient(curve, cfg, par);
    if (g.lpNorm<Eigen::Infinity>() >= par.newton_tol) return std::nullopt;

    PeriodicOrbit orb;
    orb.vertices = detail::canonical_config(curve, cfg);
    orb.length = length(curve, orb.vertices, par);
    auto [H, b] = length_hessian(curve, orb.vertices, par);
    orb.hessian = H;
    orb.b_offdiag = b;
    orb.det_hessian = H.determinant();
    return orb;
}

// Full search: torus-grid and rotation-informed seeds, dedup, Poincare data.
// Throws NoConvergence if no seed converges; degenerate orbits are returned
// with stability = degenerate and no Poincare fields.
inline std::vector<PeriodicOrbit> find_periodic_orbits(const BoundaryCurve& curve, int M,
                                                       const BilliardParams& par = {},
                                                       const std::vector<PolygonConfig>& extra_seeds = {}) {
    if (M < 2) throw SingularConfig("M must be >= 2");
    const double P = curve.total_length();
    std::vector<PolygonConfig> seeds = extra_seeds;
    // rotation-informed seeds: equally spaced with winding p
    for (int p = 1; 2 * p <= M; ++p) {
        if (std::gcd(p, M) != 1 && M > 2) continue;
        for (int off = 0; off < 8; ++off) {
            PolygonConfig c(M);
            for (int j = 0; j < M; ++j) c[j] = wrap(P * (double(off) / 8.0 + double(j) * p / M), P);
            seeds.push_back(c);
        }
    }
    if (M <= 3) {
        const int G = 32;
        PolygonConfig c(M);
        std::function<void(int)> rec = [&](int v) {
            if (v == M) {
                seeds.push_back(c);
                return;
            }
            for (int i = 0; i < G; ++i) {
                c[v] = P * (i + 0.5) / G;
                rec(v + 1);
            }
        };
        rec(0);
    } else {
        std::mt19937 rng(12345);
        std::uniform_real_distribution<double> u(0.0, P);
        for (int t = 0; t < 32 * 32 * 32 / 8; ++t) {
            PolygonConfig c(M);
            for (int j = 0; j < M; ++j) c[j] = u(rng);
            seeds.push_back(c);
        }
    }

    // cheap prefilter: refine only the most promising grid seeds
    if (seeds.size() > 400) {
        std::vector<std::pair<double, size_t>> score;
        score.reserve(seeds.size());
        for (size_t i = 0; i < seeds.size(); ++i) {
            double gn = std::numeric_limits<double>::max();
            try {
                gn = length_gradient(curve, seeds[i], par).lpNorm<Eigen::Infinity>();
            } catch (const SingularConfig&) {
            }
            score.emplace_back(gn, i);
        }
        std::sort(score.begin(), score.end());
        std::vector<PolygonConfig> keep;
        for (size_t i = 0; i < std::min<size_t>(400, score.size()); ++i)
            keep.push_back(seeds[score[i].second]);
        seeds = std::move(keep);
    }

    std::vector<PeriodicOrbit> found;
    for (auto& seed : seeds) {
        auto orb = refine_orbit(curve, seed, par);
        if (!orb) continue;
        bool dup = false;
        for (auto& o : found)
            if (detail::same_orbit(curve, o, *orb, par.dedup_tol)) {
                dup = true;
                break;
            }
        if (dup) continue;
        double scale = orb->hessian.cwiseAbs().maxCoeff();
        if (std::abs(orb->det_hessian) < par.degen_tol * std::pow(std::max(scale, 1e-30), M)) {
            orb->stability = Stability::degenerate;
        } else {
            poincare_data(curve, *orb, par);
        }
        found.push_back(std::move(*orb));
    }
    if (found.empty()) throw NoConvergence("no periodic orbit found for M=" + std::to_string(M));
    std::sort(found.begin(), found.end(),
              [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return a.length < b.length; });
    return found;
}

// Convenience wrapper returning the orbit closest to a seed config.
inline PeriodicOrbit find_periodic_orbit(const BoundaryCurve& curve, int M,
                                         const PolygonConfig& seed,
                                         const BilliardParams& par = {}) {
    auto orb = refine_orbit(curve, seed, par);
    if (!orb) throw NoConvergence("seed did not converge");
    double scale = orb->hessian.cwiseAbs().maxCoeff();
    if (std::abs(orb->det_hessian) < par.degen_tol * std::pow(std::max(scale, 1e-30), M)) {
        orb->stability = Stability::degenerate;
        return *orb;
    }
    poincare_data(curve, *orb, par);
    return *orb;
}

struct LengthSpectrumEntry {
    double length = 0.0;
    std::pair<int, int> rotation{0, 0};  // (p, q); (0, m) marks boundary multiples
    std::optional<PeriodicOrbit> orbit;
};

// Transversal reflecting rays up to L_max for each coprime rotation class,
// plus boundary-length multiples m*P (gliding limits) appended analytically.
// q_cap bounds the link count; (1,q) lengths accumulate at the perimeter.
inline std::vector<LengthSpectrumEntry> enumerate_length_spectrum(const BoundaryCurve& curve,
                                                                  double L_max,
                                                                  const BilliardParams& par = {},
                                                                  int q_cap = 24) {
    if (!curve.convex()) throw NonConvexCurve("length spectrum enumeration requires convexity");
    const double P = curve.total_length();
    std::vector<LengthSpectrumEntry> out;
    for (int q = 2; q <= q_cap; ++q) {
        for (int p = 1; 2 * p <= q; ++p) {
            if (std::gcd(p, q) != 1) continue;
            // Birkhoff seeds with winding p, several offsets
            std::vector<PeriodicOrbit> reps;
            for (int off = 0; off < 12; ++off) {
                PolygonConfig c(q);
                for (int j = 0; j < q; ++j)
                    c[j] = wrap(P * (double(off) / 12.0 + double(j) * p / q), P);
                auto orb = refine_orbit(curve, c, par);
                if (!orb || orb->length > L_max) continue;
                // verify the rotation class by winding count
                int wind = 0;
                for (int j = 0; j < q; ++j) {
                    double d = orb->vertices[(j + 1) % q] - orb->vertices[j];
                    if (d < 0) ++wind;
                }
                if (wind != p && wind != q - p) continue;
                bool dup = false;
                for (auto& r : reps)
                    if (detail::same_orbit(curve, r, *orb, par.dedup_tol)) dup = true;
                if (!dup) reps.push_back(std::move(*orb));
            }
            for (auto& r : reps) {
                LengthSpectrumEntry e;
                e.length = r.length;
                e.rotation = {p, q};
                double scale = r.hessian.cwiseAbs().maxCoeff();
                if (std::abs(r.det_hessian) >=
                    par.degen_tol * std::pow(std::max(scale, 1e-30), q))
                    poincare_data(curve, r, par);
                else
                    r.stability = Stability::degenerate;
                e.orbit = std::move(r);
                out.push_back(std::move(e));
            }
        }
    }
    for (int m = 1; m * P <= L_max; ++m) out.push_back({m * P, {0, m}, std::nullopt});
    std::sort(out.begin(), out.end(),
              [](const LengthSpectrumEntry& a, const LengthSpectrumEntry& b) {
                  return a.length < b.length;
              });
    // dedup by length within tolerance, keeping the first representative
    std::vector<LengthSpectrumEntry> ded;
    for (auto& e : out) {
        if (!ded.empty() && std::abs(ded.back().length - e.length) < par.dedup_tol &&
            ded.back().rotation == e.rotation)
            continue;
        ded.push_back(std::move(e));
    }
    return ded;
}

// Interior length functional helper (validates that interior critical points
// of |x - q(phi_1)| + ... + |q(phi_M) - x| lie on the orbit chords).
inline Vec2 interior_length_gradient(const BoundaryCurve& curve, const Vec2& x, double phi_first,
                                     double phi_last) {
    Vec2 e1 = (x - curve.point(phi_first)).normalized();
    Vec2 e2 = (x - curve.point(phi_last)).normalized();
    return e1 + e2;
}

}  // namespace wavetrace
