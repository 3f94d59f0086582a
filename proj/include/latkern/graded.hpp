#pragma once

// t-graded truncated series: grade k carries the weight t^{-k/l}.  The layer
// at grade k of t*A(t^{-1/l} xi) is the homogeneous Taylor layer of degree
// k + l; exponentials and J-th powers of such series mix degrees, so layers
// are general polynomials with the bookkeeping rule
//     every term in layer k has total degree >= k + offset,
// with equality throughout any product of homogeneous-layer series.

#include "latkern/errors.hpp"
#include "latkern/polynomial.hpp"

#include <cmath>
#include <map>

namespace latkern {

namespace detail {
template <class S> S from_rational(const Rational& r);
template <> inline RatC from_rational<RatC>(const Rational& r) { return RatC(r); }
template <> inline std::complex<double> from_rational<std::complex<double>>(const Rational& r) {
    return {to_double(r), 0.0};
}
}  // namespace detail

template <class S>
struct GradedSeries {
    int dim = 1;
    int offset = 0;
    std::map<int, Poly<S>> layers;

    explicit GradedSeries(int d = 1, int off = 0) : dim(d), offset(off) {}

    static GradedSeries one(int d) {
        GradedSeries s(d, 0);
        s.set_layer(0, Poly<S>::constant(d, scalar_traits<S>::one()));
        return s;
    }

    bool has_layer(int k) const { return layers.count(k) != 0; }
    Poly<S> layer(int k) const {
        auto it = layers.find(k);
        return it == layers.end() ? Poly<S>(dim) : it->second;
    }
    void set_layer(int k, Poly<S> p) {
        if (k < 0) throw StructuralError("GradedSeries: negative grade");
        if (p.dim() != dim) throw StructuralError("GradedSeries: layer dimension mismatch");
        if (p.empty())
            layers.erase(k);
        else
            layers[k] = std::move(p);
    }
    void accumulate(int k, const Poly<S>& p) {
        if (p.empty()) return;
        auto it = layers.find(k);
        if (it == layers.end())
            set_layer(k, p);
        else {
            it->second += p;
            if (it->second.empty()) layers.erase(it);
        }
    }
    int min_grade() const { return layers.empty() ? -1 : layers.begin()->first; }
    int max_grade() const { return layers.empty() ? -1 : layers.rbegin()->first; }

    GradedSeries negated() const {
        GradedSeries r(dim, offset);
        for (const auto& [k, p] : layers) r.layers.emplace(k, -p);
        return r;
    }

    GradedSeries without_grade0() const {
        GradedSeries r = *this;
        r.layers.erase(0);
        return r;
    }

    // Sum_k t^{-k/l} * layer_k(xi): the truncated value of the series as a
    // function of (t, xi).
    std::complex<double> eval_weighted(const std::vector<double>& xi, double t, int ell) const {
        std::complex<double> acc{0.0, 0.0};
        for (const auto& [k, p] : layers) acc += std::pow(t, -double(k) / ell) * p.eval(xi);
        return acc;
    }
};

using SeriesQ = GradedSeries<RatC>;
using SeriesD = GradedSeries<std::complex<double>>;

template <class S>
GradedSeries<S> series_add(const GradedSeries<S>& a, const GradedSeries<S>& b) {
    if (a.dim != b.dim) throw StructuralError("series_add: dimension mismatch");
    GradedSeries<S> r(a.dim, std::min(a.offset, b.offset));
    r.layers = a.layers;
    GradedSeries<S> tmp = r;
    for (const auto& [k, p] : b.layers) tmp.accumulate(k, p);
    tmp.offset = r.offset;
    return tmp;
}

// Cauchy product on grades, truncated at grade K; degree offsets add.
template <class S>
GradedSeries<S> series_mul(const GradedSeries<S>& a, const GradedSeries<S>& b, int K) {
    if (a.dim != b.dim) throw StructuralError("series_mul: dimension mismatch");
    GradedSeries<S> r(a.dim, a.offset + b.offset);
    for (const auto& [i, pi] : a.layers) {
        if (i > K) break;
        for (const auto& [j, pj] : b.layers) {
            if (i + j > K) break;
            r.accumulate(i + j, pi * pj);
        }
    }
    return r;
}

template <class S>
GradedSeries<S> series_pow(const GradedSeries<S>& a, int J, int K) {
    if (J < 0) throw StructuralError("series_pow: negative exponent");
    GradedSeries<S> r = GradedSeries<S>::one(a.dim);
    for (int j = 0; j < J; ++j) r = series_mul(r, a, K);
    return r;
}

// exp(-S) = 1 + sum_{m=1..K} (-S)^m / m!, truncated at grade K.  Requires
// min grade >= 1 so that the truncation is exact grade by grade.
template <class S>
GradedSeries<S> series_exp_neg(const GradedSeries<S>& s, int K) {
    if (s.has_layer(0)) throw StructuralError("series_exp_neg: grade-0 layer present");
    GradedSeries<S> r = GradedSeries<S>::one(s.dim);
    if (s.layers.empty()) return r;
    GradedSeries<S> neg = s.negated();
    GradedSeries<S> power = GradedSeries<S>::one(s.dim);
    Rational mfact = 1;
    for (int m = 1; m <= K; ++m) {
        power = series_mul(power, neg, K);
        if (power.layers.empty()) break;
        mfact *= m;
        const S inv = detail::from_rational<S>(Rational(1) / mfact);
        for (const auto& [k, p] : power.layers) r.accumulate(k, p.scaled(inv));
    }
    r.offset = 0;
    return r;
}

// Layers of (-1)^J A(t^{-1/l} xi)^J e^{-t A(t^{-1/l} xi)} relative to the
// factor e^{-cA(xi)}: grade 0 is (-cA)^J, grades M..K are the expansion
// polynomials R_{J,k+l}, grades 1..M-1 vanish.
template <class S>
GradedSeries<S> expansion_polynomials(const GradedSeries<S>& a_layers, int J, int K) {
    if (!a_layers.has_layer(0))
        throw StructuralError("expansion_polynomials: missing grade-0 layer (continuous symbol)");
    GradedSeries<S> pw = series_pow(a_layers.negated(), J, K);
    GradedSeries<S> ex = series_exp_neg(a_layers.without_grade0(), K);
    return series_mul(pw, ex, K);
}

// Smallest grade 1..K_max with a nonzero layer; K_max+1 if all vanish.
template <class S>
int first_nonzero_grade(const GradedSeries<S>& s, int K_max) {
    for (int k = 1; k <= K_max; ++k)
        if (s.has_layer(k)) return k;
    return K_max + 1;
}

}  // namespace latkern
