#pragma once

// Truncated Taylor (jet) arithmetic: 1-D series over an arbitrary scalar and
// dense multivariate polynomials with graded storage. Used for boundary graph
// jets, kernel-symbol expansions, and the stationary-phase Wick calculus.

#include "common.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

namespace wavetrace {

// ---------------------------------------------------------------------------
// 1-D truncated series  sum_{m<=order} c[m] u^m.
// ---------------------------------------------------------------------------
template <class T>
struct Jet1 {
    std::vector<T> c;

    Jet1() : c(1, T(0)) {}
    explicit Jet1(int order, T value = T(0)) : c(order + 1, T(0)) { c[0] = value; }
    static Jet1 variable(int order, T value) {
        Jet1 j(order, value);
        if (order >= 1) j.c[1] = T(1);
        return j;
    }
    int order() const { return int(c.size()) - 1; }
    T operator[](int m) const { return m < int(c.size()) ? c[m] : T(0); }

    Jet1 operator+(const Jet1& o) const {
        Jet1 r = *this;
        r.c.resize(std::max(c.size(), o.c.size()), T(0));
        for (size_t m = 0; m < o.c.size(); ++m) r.c[m] += o.c[m];
        return r;
    }
    Jet1 operator-(const Jet1& o) const {
        Jet1 r = *this;
        r.c.resize(std::max(c.size(), o.c.size()), T(0));
        for (size_t m = 0; m < o.c.size(); ++m) r.c[m] -= o.c[m];
        return r;
    }
    Jet1 operator*(const Jet1& o) const {
        int n = std::max(order(), o.order());
        Jet1 r(n);
        for (int a = 0; a <= std::min(n, order()); ++a) {
            if (c[a] == T(0)) continue;
            int bmax = std::min(n - a, o.order());
            for (int b = 0; b <= bmax; ++b) r.c[a + b] += c[a] * o.c[b];
        }
        return r;
    }
    Jet1 operator*(T s) const {
        Jet1 r = *this;
        for (auto& x : r.c) x *= s;
        return r;
    }
    Jet1 operator+(T s) const {
        Jet1 r = *this;
        r.c[0] += s;
        return r;
    }
    Jet1 operator-(T s) const {
        Jet1 r = *this;
        r.c[0] -= s;
        return r;
    }

    // Composition with a 1-D outer series f given by Taylor coefficients at c[0]:
    // result = sum_m f[m] (this - c[0])^m  (Horner).
    Jet1 compose_outer(const std::vector<T>& f) const {
        Jet1 u = *this;
        u.c[0] = T(0);
        Jet1 r(order(), f.empty() ? T(0) : f.back());
        for (int m = int(f.size()) - 2; m >= 0; --m) {
            r = r * u;
            r.c[0] += f[m];
        }
        return r;
    }

    Jet1 derivative() const {
        if (order() == 0) return Jet1(0);
        Jet1 r(order() - 1);
        for (int m = 1; m <= order(); ++m) r.c[m - 1] = c[m] * T(m);
        return r;
    }
};

template <class T>
Jet1<T> operator*(T s, const Jet1<T>& j) {
    return j * s;
}

// Outer-series helpers (Taylor coefficients of f at a given center x0).
template <class T>
std::vector<T> taylor_recip(T x0, int order) {  // 1/x
    std::vector<T> f(order + 1);
    T p = T(1) / x0;
    for (int m = 0; m <= order; ++m, p *= -T(1) / x0) f[m] = p;
    return f;
}
template <class T>
std::vector<T> taylor_sqrt(T x0, int order) {
    std::vector<T> f(order + 1);
    f[0] = std::sqrt(x0);
    for (int m = 1; m <= order; ++m)
        f[m] = f[m - 1] * (T(1.5) / T(m) - T(1)) / x0;  // binomial (1/2 choose m)
    return f;
}
template <class T>
std::vector<T> taylor_exp(T x0, int order) {
    std::vector<T> f(order + 1);
    f[0] = std::exp(x0);
    for (int m = 1; m <= order; ++m) f[m] = f[m - 1] / T(m);
    return f;
}
template <class T>
std::vector<T> taylor_log(T x0, int order) {
    std::vector<T> f(order + 1);
    f[0] = std::log(x0);
    T p = T(1);
    for (int m = 1; m <= order; ++m) {
        p *= -T(1) / x0;
        f[m] = -p / T(m);
    }
    return f;
}

template <class T>
Jet1<T> jet_sqrt(const Jet1<T>& a) {
    return a.compose_outer(taylor_sqrt(a.c[0], a.order()));
}
template <class T>
Jet1<T> jet_recip(const Jet1<T>& a) {
    return a.compose_outer(taylor_recip(a.c[0], a.order()));
}

// Series reversion: given s(u) with s(0)=0, s'(0) != 0, return u(s) as a
// series in s, via Newton iteration on the composition.
template <class T>
Jet1<T> jet_revert(const Jet1<T>& s) {
    int n = s.order();
    Jet1<T> u(n);
    if (n >= 1) u.c[1] = T(1) / s.c[1];
    for (int it = 0; it < n + 2; ++it) {
        // compose s(u(w)) as a series in w, then correct: u -= (s(u) - w)/s'(u)
        std::vector<T> sc = s.c;
        Jet1<T> su = u.compose_outer(sc);  // s has s(0)=0 so compose_outer works with center 0
        Jet1<T> err = su;
        if (n >= 1) err.c[1] -= T(1);
        std::vector<T> spc = s.derivative().c;
        Jet1<T> spu = u.compose_outer(spc);
        Jet1<T> corr = err * jet_recip(spu);
        for (int m = 0; m <= n; ++m) u.c[m] -= corr[m];
    }
    return u;
}

// ---------------------------------------------------------------------------
// Dense multivariate truncated polynomials, graded-lex storage.
// ---------------------------------------------------------------------------

// Shared monomial basis for (nvars, degree): exponent table and product ranks.
class MonomialBasis {
  public:
    MonomialBasis(int nvars, int degree) : nv_(nvars), deg_(degree) {
        std::vector<int> e(nv_, 0);
        enumerate(e, 0, deg_);
        // graded order: the moment recurrence and degree truncation rely on
        // contiguous total-degree blocks
        std::stable_sort(exps_.begin(), exps_.end(), [](const auto& a, const auto& b) {
            return std::accumulate(a.begin(), a.end(), 0) < std::accumulate(b.begin(), b.end(), 0);
        });
        for (size_t i = 0; i < exps_.size(); ++i) rank_[key(exps_[i])] = int(i);
        degs_.resize(exps_.size());
        for (size_t i = 0; i < exps_.size(); ++i)
            degs_[i] = std::accumulate(exps_[i].begin(), exps_[i].end(), 0);
        deg_start_.assign(deg_ + 2, 0);
        for (size_t i = 0; i < exps_.size(); ++i) deg_start_[degs_[i] + 1]++;
        for (int d = 0; d <= deg_; ++d) deg_start_[d + 1] += deg_start_[d];
    }

    int nvars() const { return nv_; }
    int degree() const { return deg_; }
    int size() const { return int(exps_.size()); }
    const std::vector<int>& exponents(int i) const { return exps_[i]; }
    int total_degree(int i) const { return degs_[i]; }
    int degree_begin(int d) const { return deg_start_[d]; }
    int degree_end(int d) const { return deg_start_[d + 1]; }

    int rank(const std::vector<int>& e) const {
        auto it = rank_.find(key(e));
        return it == rank_.end() ? -1 : it->second;
    }
    // rank of the product monomial, or -1 when it exceeds the degree cap
    int product_rank(int i, int j) const {
        if (degs_[i] + degs_[j] > deg_) return -1;
        std::vector<int> e(nv_);
        for (int v = 0; v < nv_; ++v) e[v] = exps_[i][v] + exps_[j][v];
        return rank(e);
    }
    // rank after lowering variable v by one; factor receives the exponent
    int lower(int i, int v, int& factor) const {
        factor = exps_[i][v];
        if (factor == 0) return -1;
        std::vector<int> e = exps_[i];
        e[v] -= 1;
        return rank(e);
    }

    static std::shared_ptr<const MonomialBasis> get(int nvars, int degree) {
        static std::map<std::pair<int, int>, std::shared_ptr<const MonomialBasis>> cache;
        static std::mutex mtx;
        std::lock_guard<std::mutex> lock(mtx);
        auto& slot = cache[{nvars, degree}];
        if (!slot) slot = std::make_shared<const MonomialBasis>(nvars, degree);
        return slot;
    }

  private:
    void enumerate(std::vector<int>& e, int v, int budget) {
        if (v == nv_) {
            exps_.push_back(e);
            return;
        }
        for (int p = 0; p <= budget; ++p) {
            e[v] = p;
            enumerate(e, v + 1, budget - p);
        }
        e[v] = 0;
    }
    static std::string key(const std::vector<int>& e) {
        std::string s;
        for (int x : e) {
            s += char('a' + (x & 31));
            s += char('a' + ((x >> 5) & 31));
        }
        return s;
    }
    int nv_, deg_;
    std::vector<std::vector<int>> exps_;
    std::map<std::string, int> rank_;
    std::vector<int> degs_;
    std::vector<int> deg_start_;
};

// A polynomial in the basis; coefficients over cplx.
struct MJet {
    std::shared_ptr<const MonomialBasis> basis;
    std::vector<cplx> c;

    MJet() = default;
    explicit MJet(std::shared_ptr<const MonomialBasis> b, cplx value = 0.0)
        : basis(std::move(b)), c(basis->size(), 0.0) {
        c[0] = value;
    }
    static MJet variable(std::shared_ptr<const MonomialBasis> b, int v, cplx value = 0.0) {
        MJet j(b, value);
        std::vector<int> e(b->nvars(), 0);
        e[v] = 1;
        j.c[b->rank(e)] = 1.0;
        return j;
    }

    cplx value() const { return c[0]; }

    MJet& operator+=(const MJet& o) {
        for (size_t i = 0; i < c.size(); ++i) c[i] += o.c[i];
        return *this;
    }
    MJet& operator-=(const MJet& o) {
        for (size_t i = 0; i < c.size(); ++i) c[i] -= o.c[i];
        return *this;
    }
    MJet operator+(const MJet& o) const {
        MJet r = *this;
        r += o;
        return r;
    }
    MJet operator-(const MJet& o) const {
        MJet r = *this;
        r -= o;
        return r;
    }
    MJet operator*(cplx s) const {
        MJet r = *this;
        for (auto& x : r.c) x *= s;
        return r;
    }
    MJet operator+(cplx s) const {
        MJet r = *this;
        r.c[0] += s;
        return r;
    }
    MJet operator-(cplx s) const {
        MJet r = *this;
        r.c[0] -= s;
        return r;
    }

    // Sparse-aware truncated product.
    MJet operator*(const MJet& o) const {
        MJet r(basis);
        r.c[0] = 0.0;
        std::vector<std::pair<int, cplx>> nz;
        for (size_t i = 0; i < c.size(); ++i)
            if (c[i] != cplx(0.0)) nz.emplace_back(int(i), c[i]);
        for (size_t j = 0; j < o.c.size(); ++j) {
            if (o.c[j] == cplx(0.0)) continue;
            for (auto& [i, vi] : nz) {
                int k = basis->product_rank(i, int(j));
                if (k >= 0) r.c[k] += vi * o.c[j];
            }
        }
        return r;
    }

    // Composition with an outer 1-D Taylor series about this->value().
    MJet compose_outer(const std::vector<cplx>& f) const {
        MJet u = *this;
        u.c[0] = 0.0;
        MJet r(basis, f.empty() ? cplx(0.0) : f.back());
        for (int m = int(f.size()) - 2; m >= 0; --m) {
            r = r * u;
            r.c[0] += f[m];
        }
        return r;
    }

    MJet truncate_below(int mindeg) const {  // drop terms of degree < mindeg
        MJet r = *this;
        for (int i = 0; i < basis->degree_end(std::min(mindeg - 1, basis->degree())); ++i)
            r.c[i] = 0.0;
        return r;
    }
};

inline MJet jet_sqrt(const MJet& a) {
    return a.compose_outer(taylor_sqrt<cplx>(a.value(), a.basis->degree()));
}
inline MJet jet_recip(const MJet& a) {
    return a.compose_outer(taylor_recip<cplx>(a.value(), a.basis->degree()));
}
inline MJet jet_exp(const MJet& a) {
    return a.compose_outer(taylor_exp<cplx>(a.value(), a.basis->degree()));
}

// Promote a 1-D jet in variable v to the multivariate basis.
inline MJet promote(const Jet1<cplx>& j, std::shared_ptr<const MonomialBasis> b, int v) {
    MJet x = MJet::variable(b, v, 0.0);
    std::vector<cplx> f(j.c.begin(), j.c.begin() + std::min<size_t>(j.c.size(), b->degree() + 1));
    MJet r = x.compose_outer(f);
    return r;
}

// ---------------------------------------------------------------------------
// Gaussian (Wick) moments and the stationary-phase coefficient calculus.
//
// For the oscillatory integral  I(k) = int e^{ik(x^T H x)/2} P(x) dx  over
// R^q with non-degenerate symmetric H and polynomial P:
//   I(k) = (2 pi/k)^{q/2} |det H|^{-1/2} e^{i pi sgn(H)/4}
//          * sum_{|alpha| even} P_alpha (i/k)^{|alpha|/2} mu_H(alpha),
// where mu_H(alpha) are the pairing moments of the "covariance" H^{-1}:
//   mu(alpha) = sum_b H^{-1}[a][b] (alpha_b - delta_ab) mu(alpha - e_a - e_b).
// ---------------------------------------------------------------------------

// All moments mu_H(alpha) for |alpha| <= basis degree (odd degrees are zero).
inline std::vector<cplx> gaussian_moments(const MonomialBasis& basis,
                                          const std::vector<std::vector<cplx>>& Hinv) {
    const int nv = basis.nvars();
    std::vector<cplx> mu(basis.size(), 0.0);
    mu[0] = 1.0;
    for (int d = 2; d <= basis.degree(); d += 2) {
        for (int i = basis.degree_begin(d); i < basis.degree_end(d); ++i) {
            // pick the first variable with positive exponent as 'a'
            int a = 0;
            while (basis.exponents(i)[a] == 0) ++a;
            int fa;
            int ia = basis.lower(i, a, fa);
            cplx acc = 0.0;
            for (int b = 0; b < nv; ++b) {
                int fb;
                int iab = basis.lower(ia, b, fb);
                if (iab < 0) continue;
                acc += Hinv[a][b] * cplx(double(fb)) * mu[iab];
            }
            mu[i] = acc;
        }
    }
    return mu;
}

}  // namespace wavetrace
