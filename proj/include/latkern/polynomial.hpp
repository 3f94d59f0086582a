#pragma once

// Multivariate polynomials with sparse term maps in graded-lexicographic
// order.  Homogeneous polynomials are the common case (Taylor layers of a
// symbol); the exponential of a graded series mixes degrees, so the container
// does not force homogeneity — callers that need it assert it.

#include "latkern/errors.hpp"
#include "latkern/rational.hpp"

#include <algorithm>
#include <complex>
#include <map>
#include <vector>

namespace latkern {

struct MultiIndex {
    std::vector<int> e;

    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> exps) : e(std::move(exps)) {
        for (int v : e)
            if (v < 0) throw StructuralError("MultiIndex: negative exponent");
    }
    static MultiIndex zero(int dim) { return MultiIndex(std::vector<int>(dim, 0)); }

    int dim() const { return static_cast<int>(e.size()); }
    int degree() const {
        int s = 0;
        for (int v : e) s += v;
        return s;
    }
    MultiIndex operator+(const MultiIndex& o) const {
        MultiIndex r = *this;
        for (size_t i = 0; i < e.size(); ++i) r.e[i] += o.e[i];
        return r;
    }
    friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.e == b.e; }
};

// Graded lexicographic: lower total degree first, then lex on exponents.
struct GradedLexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        const int da = a.degree(), db = b.degree();
        if (da != db) return da < db;
        return std::lexicographical_compare(a.e.begin(), a.e.end(), b.e.begin(), b.e.end());
    }
};

template <class S>
class Poly {
  public:
    using TermMap = std::map<MultiIndex, S, GradedLexLess>;

    explicit Poly(int dim = 1) : dim_(dim) {
        if (dim < 1) throw StructuralError("Poly: dimension must be positive");
    }

    static Poly constant(int dim, S value) {
        Poly p(dim);
        p.add_term(MultiIndex::zero(dim), std::move(value));
        return p;
    }
    // Single monomial c * x^alpha.
    static Poly monomial(MultiIndex alpha, S coeff) {
        Poly p(alpha.dim());
        p.add_term(std::move(alpha), std::move(coeff));
        return p;
    }

    int dim() const { return dim_; }
    bool empty() const { return terms_.empty(); }
    const TermMap& terms() const { return terms_; }

    int degree_min() const { return terms_.empty() ? -1 : terms_.begin()->first.degree(); }
    int degree_max() const { return terms_.empty() ? -1 : terms_.rbegin()->first.degree(); }
    bool is_homogeneous() const { return terms_.empty() || degree_min() == degree_max(); }

    void add_term(MultiIndex alpha, S coeff) {
        if (alpha.dim() != dim_) throw StructuralError("Poly: term dimension mismatch");
        auto it = terms_.find(alpha);
        if (it == terms_.end()) {
            if (!scalar_traits<S>::is_zero(coeff)) terms_.emplace(std::move(alpha), std::move(coeff));
        } else {
            it->second += coeff;
            if (scalar_traits<S>::is_zero(it->second)) terms_.erase(it);
        }
    }

    S coeff(const MultiIndex& alpha) const {
        auto it = terms_.find(alpha);
        return it == terms_.end() ? scalar_traits<S>::zero() : it->second;
    }

    Poly& operator+=(const Poly& o) {
        require_same_dim(o);
        for (const auto& [a, c] : o.terms_) add_term(a, c);
        return *this;
    }
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }

    Poly operator-() const {
        Poly r(dim_);
        for (const auto& [a, c] : terms_) r.terms_.emplace(a, -c);
        return r;
    }
    friend Poly operator-(Poly a, const Poly& b) { return a += -b; }

    friend Poly operator*(const Poly& a, const Poly& b) {
        a.require_same_dim(b);
        Poly r(a.dim_);
        for (const auto& [ai, ac] : a.terms_)
            for (const auto& [bi, bc] : b.terms_) r.add_term(ai + bi, ac * bc);
        return r;
    }

    Poly scaled(const S& s) const {
        Poly r(dim_);
        if (scalar_traits<S>::is_zero(s)) return r;
        for (const auto& [a, c] : terms_) {
            S v = c * s;
            if (!scalar_traits<S>::is_zero(v)) r.terms_.emplace(a, std::move(v));
        }
        return r;
    }

    friend bool operator==(const Poly& a, const Poly& b) {
        if (a.dim_ != b.dim_ || a.terms_.size() != b.terms_.size()) return false;
        auto ia = a.terms_.begin();
        for (const auto& [bi, bc] : b.terms_) {
            if (!(ia->first == bi) || !(ia->second == bc)) return false;
            ++ia;
        }
        return true;
    }
    friend bool operator!=(const Poly& a, const Poly& b) { return !(a == b); }

    // Exact monomial-sum evaluation at a real point; returns complex.
    std::complex<double> eval(const std::vector<double>& xi) const {
        if (static_cast<int>(xi.size()) != dim_) throw StructuralError("Poly::eval: point dimension mismatch");
        std::complex<double> acc{0.0, 0.0};
        for (const auto& [a, c] : terms_) {
            double mono = 1.0;
            for (int j = 0; j < dim_; ++j)
                for (int p = 0; p < a.e[j]; ++p) mono *= xi[j];
            acc += scalar_traits<S>::to_complex(c) * mono;
        }
        return acc;
    }

  private:
    void require_same_dim(const Poly& o) const {
        if (dim_ != o.dim_) throw StructuralError("Poly: dimension mismatch");
    }

    int dim_;
    TermMap terms_;
};

using PolyQ = Poly<RatC>;
using PolyD = Poly<std::complex<double>>;

// Coefficient-wise sum of homogeneous polynomials of equal degree.
template <class S>
Poly<S> homo_add(const Poly<S>& p, const Poly<S>& q) {
    if (p.dim() != q.dim()) throw StructuralError("homo_add: dimension mismatch");
    if (!p.is_homogeneous() || !q.is_homogeneous()) throw StructuralError("homo_add: inputs must be homogeneous");
    if (!p.empty() && !q.empty() && p.degree_max() != q.degree_max())
        throw StructuralError("homo_add: degree mismatch");
    return p + q;
}

template <class S>
Poly<std::complex<double>> to_double_poly(const Poly<S>& p) {
    Poly<std::complex<double>> r(p.dim());
    for (const auto& [a, c] : p.terms()) r.add_term(a, scalar_traits<S>::to_complex(c));
    return r;
}

}  // namespace latkern
