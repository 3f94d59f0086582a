#include "latkern/graded.hpp"
#include "latkern/json_io.hpp"
#include "latkern/polynomial.hpp"
#include "latkern/stencil.hpp"

#include <catch2/catch.hpp>

#include <cstdint>

using namespace latkern;

namespace {
PolyQ mono1(int dim, std::vector<int> e, Rational c) {
    return PolyQ::monomial(MultiIndex(std::move(e)), RatC(std::move(c)));
}
}  // namespace

TEST_CASE("homogeneous addition", "[polyalg]") {
    PolyQ a = mono1(2, {2, 0}, Rational(1));
    PolyQ b = mono1(2, {2, 0}, Rational(-1));
    CHECK(homo_add(a, b).empty());

    PolyQ c = mono1(2, {1, 1}, Rational(1));
    PolyQ s = homo_add(c, c);
    CHECK(s.coeff(MultiIndex({1, 1})) == RatC(Rational(2)));

    PolyQ d2 = mono1(1, {2}, Rational(1));
    PolyQ d4 = mono1(1, {4}, Rational(-1));
    CHECK_THROWS_AS(homo_add(d2, d4), StructuralError);
    PolyQ other_dim = mono1(2, {1, 1}, Rational(1));
    CHECK_THROWS_AS(homo_add(d2, other_dim), StructuralError);
}

TEST_CASE("series multiplication", "[polyalg]") {
    // identity: single grade-0 constant layer
    SeriesQ one = SeriesQ::one(1);
    SeriesQ s(1, 2);
    s.set_layer(2, mono1(1, {4}, Rational(1, 12)));
    SeriesQ p = series_mul(one, s, 10);
    CHECK(p.layer(2) == s.layer(2));
    CHECK(p.offset == 2);

    // b1 theta^4 squared -> grade 4, coefficient b1^2 = 1/144
    SeriesQ sq = series_mul(s, s, 10);
    CHECK(sq.offset == 4);
    CHECK(sq.layer(4).coeff(MultiIndex({8})) == RatC(Rational(1, 144)));

    // truncation: grades above K absent
    SeriesQ trunc = series_mul(s, s, 3);
    CHECK(trunc.layers.empty());

    SeriesQ wrong_dim(2, 0);
    wrong_dim.set_layer(0, PolyQ::constant(2, RatC(Rational(1))));
    CHECK_THROWS_AS(series_mul(s, wrong_dim, 4), StructuralError);
}

TEST_CASE("series exponential", "[polyalg]") {
    // exp(-0) = 1
    SeriesQ empty(1, 2);
    SeriesQ e0 = series_exp_neg(empty, 6);
    CHECK(e0.layer(0) == PolyQ::constant(1, RatC(Rational(1))));

    // grade-0 layer present -> precondition error
    SeriesQ bad = SeriesQ::one(1);
    CHECK_THROWS_AS(series_exp_neg(bad, 4), StructuralError);

    // 1D N=1 layers: exp of the negated correction layers gives
    // P_1 = b1 xi^4 and P_2 = b2 xi^6 + b1^2 xi^8 / 2.
    const Stencil lap1 = laplacian_1d(1);
    SeriesQ layers = lap1.taylor_layers(4);
    SeriesQ ex = series_exp_neg(layers.without_grade0(), 4);
    CHECK(ex.layer(2).coeff(MultiIndex({4})) == RatC(Rational(1, 12)));
    CHECK(ex.layer(4).coeff(MultiIndex({6})) == RatC(Rational(-1, 360)));
    CHECK(ex.layer(4).coeff(MultiIndex({8})) == RatC(Rational(1, 288)));
    // odd grades vanish for the even symbol
    CHECK_FALSE(ex.has_layer(1));
    CHECK_FALSE(ex.has_layer(3));
}

TEST_CASE("expansion polynomials structure", "[polyalg]") {
    const Stencil lap2 = laplacian_1d(2);  // M = 4
    SeriesQ layers = lap2.taylor_layers(6);
    SeriesQ missing = layers.without_grade0();
    CHECK_THROWS_AS(expansion_polynomials(missing, 1, 6), StructuralError);

    for (int J : {0, 1, 2}) {
        SeriesQ R = expansion_polynomials(layers, J, 6);
        // grade-0 layer is (-cA)^J
        PolyQ expected0(1);
        expected0.add_term(MultiIndex({2 * J}), RatC(Rational(J % 2 == 0 ? 1 : -1)));
        CHECK(R.layer(0) == expected0);
        // zero middle layers 1..M-1
        for (int k = 1; k < 4; ++k) CHECK_FALSE(R.has_layer(k));
        // degree bookkeeping: every term in layer k has degree >= k + offset
        for (const auto& [k, p] : R.layers) {
            CHECK(p.degree_min() >= k + R.offset);
        }
        CHECK(R.layer(0).degree_min() == R.offset);
    }

    // J = 0 reproduces the exponential layers exactly
    SeriesQ R0 = expansion_polynomials(layers, 0, 6);
    SeriesQ ex = series_exp_neg(layers.without_grade0(), 6);
    for (int k = 1; k <= 6; ++k) CHECK(R0.layer(k) == ex.layer(k));
}

TEST_CASE("polynomial evaluation", "[polyalg]") {
    PolyQ norm2(2);
    norm2.add_term(MultiIndex({2, 0}), RatC(Rational(1)));
    norm2.add_term(MultiIndex({0, 2}), RatC(Rational(1)));
    CHECK(norm2.eval({1.0, 1.0}).real() == Approx(2.0).margin(1e-15));

    PolyQ zero(2);
    CHECK(zero.eval({3.0, -4.0}) == std::complex<double>{0.0, 0.0});

    PolyQ b1t4 = mono1(1, {4}, Rational(1, 12));
    CHECK(b1t4.eval({2.0}).real() == Approx(4.0 / 3.0).margin(1e-15));
}

TEST_CASE("weighted series approximates the scaled symbol", "[polyalg]") {
    // |sum_k t^{-k/l} layer_k(xi) - t A(t^{-1/l} xi)| = O(t^{-(K+1)/l}) at
    // fixed xi; fitted log-log slope <= -(K+1)/l + 0.1
    const Stencil lap1 = laplacian_1d(1);
    const int K = 4;
    SeriesQ layers = lap1.taylor_layers(K);
    GradedSeries<std::complex<double>> dbl(1, layers.offset);
    for (const auto& [k, p] : layers.layers) dbl.set_layer(k, to_double_poly(p));

    const std::vector<double> xi{1.3};
    std::vector<double> ts{16, 32, 64, 128, 256};
    std::vector<double> errs;
    for (double t : ts) {
        const double scaled = 1.3 / std::sqrt(t);
        const double exact = t * lap1.symbol({scaled}).real();
        const double approx = dbl.eval_weighted(xi, t, 2).real();
        errs.push_back(std::abs(exact - approx));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
        const double x = std::log(ts[i]), y = std::log(errs[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double slope = (ts.size() * sxy - sx * sy) / (ts.size() * sxx - sx * sx);
    CHECK(slope <= -double(K + 1) / 2 + 0.1);
}

namespace {
// deterministic small-rational generator for property tests
struct MiniRng {
    std::uint64_t s;
    explicit MiniRng(std::uint64_t seed) : s(seed) {}
    std::uint64_t next() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return s;
    }
    Rational rat() {
        const long num = static_cast<long>(next() % 19) - 9;
        const long den = 1 + static_cast<long>(next() % 7);
        return Rational(num, den);
    }
};

PolyQ random_homo(MiniRng& rng, int dim, int degree) {
    PolyQ p(dim);
    for (int trial = 0; trial < 4; ++trial) {
        std::vector<int> e(dim, 0);
        int rem = degree;
        for (int j = 0; j + 1 < dim; ++j) {
            e[j] = static_cast<int>(rng.next() % (rem + 1));
            rem -= e[j];
        }
        e[dim - 1] = rem;
        p.add_term(MultiIndex(e), RatC(rng.rat()));
    }
    return p;
}

SeriesQ random_series(MiniRng& rng, int dim, int offset, int max_grade) {
    SeriesQ s(dim, offset);
    for (int k = 1; k <= max_grade; ++k)
        if (rng.next() % 3 != 0) s.set_layer(k, random_homo(rng, dim, k + offset));
    return s;
}
}  // namespace

TEST_CASE("ring axioms on random polynomials", "[polyalg]") {
    MiniRng rng(0xfeedbeef);
    for (int rep = 0; rep < 10; ++rep) {
        const int dim = 1 + static_cast<int>(rng.next() % 3);
        PolyQ p = random_homo(rng, dim, 2), q = random_homo(rng, dim, 2), r = random_homo(rng, dim, 3);
        CHECK((p + q) + r == p + (q + r));
        CHECK(p * (q + r) == p * q + p * r);
        CHECK(p * q == q * p);
        // evaluation is a homomorphism at a sample point
        std::vector<double> xi(dim, 0.7);
        const auto lhs = (p * q).eval(xi);
        const auto rhs = p.eval(xi) * q.eval(xi);
        CHECK(std::abs(lhs - rhs) < 1e-12 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("exponential homomorphism on random graded series", "[polyalg]") {
    // exp(-(S+T)) = exp(-S) exp(-T), exactly, truncated at any grade
    MiniRng rng(0x5eed5eed);
    for (int rep = 0; rep < 6; ++rep) {
        const int dim = 1 + static_cast<int>(rng.next() % 2);
        const int K = 5;
        SeriesQ s = random_series(rng, dim, 2, K);
        SeriesQ t = random_series(rng, dim, 2, K);
        SeriesQ sum = series_add(s, t);
        sum.layers.erase(0);
        SeriesQ lhs = series_exp_neg(sum, K);
        SeriesQ rhs = series_mul(series_exp_neg(s, K), series_exp_neg(t, K), K);
        for (int k = 0; k <= K; ++k) CHECK(lhs.layer(k) == rhs.layer(k));
    }
}

TEST_CASE("polynomial JSON round trip is exact and graded-lex sorted", "[polyalg]") {
    PolyQ p(2);
    p.add_term(MultiIndex({0, 4}), RatC(Rational(-7, 3)));
    p.add_term(MultiIndex({2, 2}), RatC(Rational(1, 12), Rational(5, 2)));
    p.add_term(MultiIndex({1, 1}), RatC(Rational(22)));
    const json j = poly_to_json(p);
    CHECK(poly_from_json(j) == p);
    // graded-lex: degree-2 term first, then degree-4 terms lexicographically
    CHECK(j["terms"][0]["exp"] == std::vector<int>{1, 1});
    CHECK(j["terms"][1]["exp"] == std::vector<int>{0, 4});
    CHECK(j["terms"][2]["exp"] == std::vector<int>{2, 2});
}
