#pragma once

// Constant-coefficient difference operators on Z^d in expanded tap form:
//     (A_eps u)(x) = eps^{-l} sum_s c_s u(x + s*eps),
// their trigonometric symbols A(theta) = sum_s c_s e^{i s.theta}, exact
// Taylor layers, grid-based ellipticity verification, and builders for the
// concrete operators used throughout (order-2N 1D Laplacians, the simple
// walk, the triangular-lattice operator).

#include "latkern/errors.hpp"
#include "latkern/graded.hpp"
#include "latkern/polynomial.hpp"
#include "latkern/rational.hpp"

#include <atomic>
#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace latkern {

using Offset = std::vector<int>;

struct EllipticityReport {
    double c_lower = 0.0;          // min Re A(theta)/|theta|^l (origin limit via the symbol layer)
    double c_upper = 0.0;          // max |A(theta)|/|theta|^l
    double min_re_offorigin = 0.0; // min Re A on R_pi minus the ball |theta| < ball_radius
    double ball_radius = 0.5;
    int n_grid = 0;
    bool verified = false;
};

class Stencil {
  public:
    Stencil(int dim, int order, std::map<Offset, RatC> taps, std::string name = "stencil")
        : dim_(dim), order_(order), taps_(std::move(taps)), name_(std::move(name)) {
        if (dim_ < 1) throw StructuralError("Stencil: dimension must be positive");
        if (order_ < 2 || order_ % 2 != 0) throw StructuralError("Stencil: order must be a positive even integer");
        for (auto it = taps_.begin(); it != taps_.end();) {
            if (static_cast<int>(it->first.size()) != dim_)
                throw StructuralError("Stencil: tap offset dimension mismatch");
            it = it->second.is_zero() ? taps_.erase(it) : std::next(it);
        }
        if (taps_.empty()) throw StructuralError("Stencil: no nonzero taps");
        RatC sum;
        for (const auto& [s, c] : taps_) sum += c;
        if (!sum.is_zero()) throw StructuralError("Stencil: tap sum must vanish (A(0) = 0)");
    }

    Stencil(const Stencil& o)
        : dim_(o.dim_), order_(o.order_), taps_(o.taps_), name_(o.name_),
          m_cache_(o.m_cache_.load(std::memory_order_relaxed)), ellipticity_cache_(o.ellipticity_cache_) {}
    Stencil& operator=(const Stencil& o) {
        if (this != &o) {
            dim_ = o.dim_;
            order_ = o.order_;
            taps_ = o.taps_;
            name_ = o.name_;
            m_cache_.store(o.m_cache_.load(std::memory_order_relaxed), std::memory_order_relaxed);
            ellipticity_cache_ = o.ellipticity_cache_;
        }
        return *this;
    }

    int dim() const { return dim_; }
    int order() const { return order_; }
    const std::map<Offset, RatC>& taps() const { return taps_; }
    const std::string& name() const { return name_; }

    bool real_symmetric() const {
        for (const auto& [s, c] : taps_) {
            if (!c.is_real()) return false;
            Offset neg(s.size());
            for (size_t j = 0; j < s.size(); ++j) neg[j] = -s[j];
            auto it = taps_.find(neg);
            if (it == taps_.end() || it->second != c) return false;
        }
        return true;
    }

    // Per-axis tap symmetry s_j -> -s_j (with real coefficients); symmetric
    // axes admit cosine-pair reduction in torus and box quadratures.
    std::vector<bool> axis_symmetric() const {
        std::vector<bool> sym(dim_, true);
        for (const auto& [s, c] : taps_) {
            if (!c.is_real()) return std::vector<bool>(dim_, false);
            for (int j = 0; j < dim_; ++j) {
                if (!sym[j]) continue;
                Offset m = s;
                m[j] = -m[j];
                auto it = taps_.find(m);
                if (it == taps_.end() || it->second != c) sym[j] = false;
            }
        }
        return sym;
    }

    std::complex<double> symbol(const std::vector<double>& theta) const {
        if (static_cast<int>(theta.size()) != dim_) throw StructuralError("symbol: point dimension mismatch");
        std::complex<double> acc{0.0, 0.0};
        for (const auto& [s, c] : taps_) {
            double phase = 0.0;
            for (int j = 0; j < dim_; ++j) phase += s[j] * theta[j];
            acc += c.to_complex() * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        return acc;
    }

    // Exact homogeneous Taylor layers of A(theta) around 0: grade k holds the
    // degree-(k+l) component; grade 0 is the continuous symbol cA.  Degrees
    // below l must cancel exactly, otherwise the operator is not a consistent
    // approximation of an order-l operator.
    SeriesQ taylor_layers(int K) const {
        if (K < 0) throw StructuralError("taylor_layers: negative truncation grade");
        SeriesQ s(dim_, order_);
        for (int m = 0; m <= K + order_; ++m) {
            PolyQ layer = taylor_component(m);
            if (m < order_) {
                if (!layer.empty())
                    throw StructuralError("taylor_layers: nonzero layer at degree " + std::to_string(m) +
                                          " below the operator order " + std::to_string(order_));
                continue;
            }
            s.set_layer(m - order_, std::move(layer));
        }
        return s;
    }

    // Smallest grade k >= 1 with a nonzero Taylor layer; K_max + 1 if all
    // sampled grades vanish.
    int approximation_order(int K_max = 12) const {
        int cached = m_cache_.load(std::memory_order_relaxed);
        if (cached >= 0 && cached <= K_max) return cached;
        const int M = first_nonzero_grade(taylor_layers(K_max), K_max);
        if (M <= K_max) m_cache_.store(M, std::memory_order_relaxed);
        return M;
    }

    EllipticityReport check_ellipticity(int n_grid) const {
        if (n_grid < 64) throw StructuralError("check_ellipticity: need at least 64 grid points per axis");
        EllipticityReport rep;
        rep.n_grid = n_grid;

        const PolyQ calA_q = taylor_layers(0).layer(0);
        const PolyD calA = to_double_poly(calA_q);

        double c_lo = std::numeric_limits<double>::infinity();
        double c_up = 0.0;
        double off = std::numeric_limits<double>::infinity();

        std::vector<int> idx(dim_, 0);
        std::vector<double> theta(dim_);
        const double h = 2.0 * M_PI / n_grid;
        bool done = false;
        while (!done) {
            bool origin = true;
            double norm2 = 0.0;
            for (int j = 0; j < dim_; ++j) {
                theta[j] = -M_PI + idx[j] * h;
                if (theta[j] != 0.0) origin = false;
                norm2 += theta[j] * theta[j];
            }
            if (!origin) {
                const double r = std::sqrt(norm2);
                const double rl = std::pow(r, order_);
                const std::complex<double> A = symbol(theta);
                c_lo = std::min(c_lo, A.real() / rl);
                c_up = std::max(c_up, std::abs(A) / rl);
                if (r >= rep.ball_radius) off = std::min(off, A.real());
                // Origin limit of the ratio along this direction, from the
                // grade-0 layer (the raw ratio degenerates to 0/0 there).
                std::vector<double> omega(dim_);
                for (int j = 0; j < dim_; ++j) omega[j] = theta[j] / r;
                c_lo = std::min(c_lo, calA.eval(omega).real());
            }
            for (int j = dim_ - 1;; --j) {
                if (j < 0) { done = true; break; }
                if (++idx[j] < n_grid) break;
                idx[j] = 0;
            }
        }
        rep.c_lower = c_lo;
        rep.c_upper = c_up;
        rep.min_re_offorigin = off;
        rep.verified = (c_lo > 0.0) && (off > 0.0);
        ellipticity_cache_ = rep;
        return rep;
    }

    const std::optional<EllipticityReport>& ellipticity_cache() const { return ellipticity_cache_; }

    // Diagonal tap c_0 (the total jump rate of the associated walk).
    RatC center_tap() const {
        auto it = taps_.find(Offset(dim_, 0));
        return it == taps_.end() ? RatC() : it->second;
    }

  private:
    // Degree-m component of sum_s c_s e^{i s.theta}: coefficient of theta^alpha
    // is i^{|alpha|} sum_s c_s prod_j s_j^{alpha_j} / prod_j alpha_j!.
    PolyQ taylor_component(int m) const {
        PolyQ layer(dim_);
        std::vector<int> alpha(dim_, 0);
        enumerate_alpha(m, 0, alpha, layer);
        return layer;
    }

    void enumerate_alpha(int rem, int pos, std::vector<int>& alpha, PolyQ& layer) const {
        if (pos == dim_ - 1) {
            alpha[pos] = rem;
            add_alpha_term(alpha, layer);
            alpha[pos] = 0;
            return;
        }
        for (int v = 0; v <= rem; ++v) {
            alpha[pos] = v;
            enumerate_alpha(rem - v, pos + 1, alpha, layer);
        }
        alpha[pos] = 0;
    }

    void add_alpha_term(const std::vector<int>& alpha, PolyQ& layer) const {
        RatC moment;
        for (const auto& [s, c] : taps_) {
            BigInt prod = 1;
            for (int j = 0; j < dim_; ++j) prod *= ipow(BigInt(s[j]), alpha[j]);
            if (prod != 0) moment += c * RatC(Rational(prod));
        }
        if (moment.is_zero()) return;
        BigInt denom = 1;
        int total = 0;
        for (int a : alpha) {
            denom *= factorial(a);
            total += a;
        }
        RatC coeff = i_power(total) * moment / Rational(denom);
        layer.add_term(MultiIndex(alpha), coeff);
    }

    int dim_;
    int order_;
    std::map<Offset, RatC> taps_;
    std::string name_;
    mutable std::atomic<int> m_cache_{-1};
    mutable std::optional<EllipticityReport> ellipticity_cache_;
};

// --- construction from difference products -------------------------------

// One product term a_nu * delta_{1-}^{nu_1} delta_{1+}^{nu_2} ... over the 2d
// forward/backward difference slots.
struct DifferenceProduct {
    std::vector<int> nu;  // length 2d
    RatC coeff;
};

// Expands products of the elementary differences
//     delta_{k+-} u(y) = u(y +- e_k) - u(y)
// into taps (each factor contributes the convolution {+-e_k: 1, 0: -1}).
inline Stencil from_difference_products(int dim, const std::vector<DifferenceProduct>& terms, int order,
                                        std::string name = "stencil") {
    if (terms.empty()) throw StructuralError("from_difference_products: empty term list");
    std::map<Offset, RatC> taps;
    for (const auto& term : terms) {
        if (static_cast<int>(term.nu.size()) != 2 * dim)
            throw StructuralError("from_difference_products: multi-index must have 2d slots");
        int total = 0;
        for (int v : term.nu) {
            if (v < 0) throw StructuralError("from_difference_products: negative multi-index entry");
            total += v;
        }
        if (total < order)
            throw StructuralError("from_difference_products: |nu| < order for a term");
        std::map<Offset, RatC> acc{{Offset(dim, 0), term.coeff}};
        for (int slot = 0; slot < 2 * dim; ++slot) {
            const int axis = slot / 2;
            const int sign = (slot % 2 == 0) ? -1 : +1;  // slots alternate (1-, 1+, 2-, 2+, ...)
            for (int rep = 0; rep < term.nu[slot]; ++rep) {
                std::map<Offset, RatC> next;
                for (const auto& [s, c] : acc) {
                    Offset shifted = s;
                    shifted[axis] += sign;
                    next[shifted] += c;
                    next[s] -= c;
                }
                acc = std::move(next);
            }
        }
        for (const auto& [s, c] : acc) taps[s] += c;
    }
    return Stencil(dim, order, std::move(taps), std::move(name));
}

// --- exact linear algebra helper ------------------------------------------

// Solves a square rational system by Gaussian elimination with exact pivots.
inline std::vector<Rational> solve_rational(std::vector<std::vector<Rational>> a, std::vector<Rational> b) {
    const int n = static_cast<int>(a.size());
    for (int col = 0; col < n; ++col) {
        int piv = -1;
        for (int r = col; r < n; ++r)
            if (a[r][col] != 0) { piv = r; break; }
        if (piv < 0) throw StructuralError("solve_rational: singular matrix");
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (int r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0) continue;
            const Rational f = a[r][col] / a[col][col];
            for (int c2 = col; c2 < n; ++c2) a[r][c2] -= f * a[col][c2];
            b[r] -= f * b[col];
        }
    }
    std::vector<Rational> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
    return x;
}

// --- builders --------------------------------------------------------------

// Coefficients a_nu of the order-2N approximation of the 1D Laplacian:
// sum_nu a_nu nu^2 = 1, sum_nu a_nu nu^{2m} = 0 for m = 2..N (a Vandermonde
// system, uniquely solvable).
inline std::vector<Rational> laplacian_1d_coefficients(int N) {
    if (N < 1) throw StructuralError("laplacian_1d: N must be >= 1");
    std::vector<std::vector<Rational>> a(N, std::vector<Rational>(N));
    std::vector<Rational> b(N, Rational(0));
    b[0] = 1;
    for (int m = 1; m <= N; ++m)
        for (int nu = 1; nu <= N; ++nu) a[m - 1][nu - 1] = Rational(ipow(BigInt(nu), 2 * m));
    return solve_rational(std::move(a), std::move(b));
}

// A_eps = -Delta_eps for the order-2N 1D Laplacian.
inline Stencil laplacian_1d(int N) {
    const auto a = laplacian_1d_coefficients(N);
    std::map<Offset, RatC> taps;
    Rational center = 0;
    for (int nu = 1; nu <= N; ++nu) {
        taps[{nu}] = RatC(-a[nu - 1]);
        taps[{-nu}] = RatC(-a[nu - 1]);
        center += 2 * a[nu - 1];
    }
    taps[{0}] = RatC(center);
    return Stencil(1, 2, std::move(taps), "laplacian1d:" + std::to_string(N));
}

// A_eps = eps^{-2} sum_j delta_{j+} delta_{j-}; symbol 2 sum_j (1-cos theta_j).
inline Stencil simple_walk(int d) {
    if (d < 1) throw StructuralError("simple_walk: dimension must be >= 1");
    std::vector<DifferenceProduct> terms;
    for (int j = 0; j < d; ++j) {
        std::vector<int> nu(2 * d, 0);
        nu[2 * j] = 1;
        nu[2 * j + 1] = 1;
        terms.push_back({nu, RatC(Rational(1))});
    }
    return from_difference_products(d, terms, 2, "simple-walk:" + std::to_string(d));
}

// The triangular-lattice generator mapped to Z^2:
// A_eps = (2/3) eps^{-2} (2 d1+ d1- + 2 d2+ d2- - d1+ d2- - d2+ d1-).
inline Stencil triangular() {
    const Rational two_thirds(2, 3);
    std::vector<DifferenceProduct> terms = {
        {{1, 1, 0, 0}, RatC(2 * two_thirds)},
        {{0, 0, 1, 1}, RatC(2 * two_thirds)},
        {{1, 0, 0, 1}, RatC(-two_thirds)},  // d1- paired with d2+
        {{0, 1, 1, 0}, RatC(-two_thirds)},  // d1+ paired with d2-
    };
    return from_difference_products(2, terms, 2, "triangular");
}

}  // namespace latkern
