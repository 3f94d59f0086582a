#pragma once

// Quadrature building blocks: Gauss-Legendre rules (nodes computed once per
// order), composite panel integration with doubling-based tolerance control,
// and uniform trapezoid sums over the torus R_pi and over truncated boxes.
// Convergence is always certified empirically by comparing successive
// refinements, never assumed.

#include "latkern/errors.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <map>
#include <mutex>
#include <vector>

namespace latkern {

struct QuadSpec {
    int n_per_axis = 32;        // even, >= 16
    double target_rel_tol = 1e-10;
    int max_doublings = 8;

    void validate() const {
        if (n_per_axis < 16 || n_per_axis % 2 != 0)
            throw StructuralError("QuadSpec: n_per_axis must be even and >= 16");
        if (target_rel_tol <= 0) throw StructuralError("QuadSpec: tolerance must be positive");
    }
};

struct GaussRule {
    std::vector<double> x;  // nodes on [-1, 1]
    std::vector<double> w;
};

// Golub-Welsch-free classical construction: Newton iteration on P_n.
inline const GaussRule& gauss_legendre(int n) {
    static std::map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    GaussRule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
    return cache.emplace(n, std::move(r)).first->second;
}

template <class F>
auto integrate_gl(F&& f, double a, double b, int n) -> decltype(f(0.0)) {
    const GaussRule& r = gauss_legendre(n);
    using R = decltype(f(0.0));
    R acc = R{};
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) acc += r.w[i] * f(mid + half * r.x[i]);
    return acc * half;
}

template <class F>
auto integrate_panels(F&& f, const std::vector<double>& breaks, int n_gl) -> decltype(f(0.0)) {
    using R = decltype(f(0.0));
    R acc = R{};
    for (size_t i = 0; i + 1 < breaks.size(); ++i) acc += integrate_gl(f, breaks[i], breaks[i + 1], n_gl);
    return acc;
}

inline std::vector<double> split_panels(const std::vector<double>& breaks) {
    std::vector<double> out;
    out.reserve(breaks.size() * 2 - 1);
    for (size_t i = 0; i + 1 < breaks.size(); ++i) {
        out.push_back(breaks[i]);
        out.push_back(0.5 * (breaks[i] + breaks[i + 1]));
    }
    out.push_back(breaks.back());
    return out;
}

// Geometrically graded breakpoints toward `a` (for integrands steep near the
// left endpoint, e.g. rho^{-p} factors after a small lower limit).
inline std::vector<double> graded_breaks(double a, double b, int n_panels, double grading = 2.0) {
    std::vector<double> br{a};
    double len = (b - a) * (grading - 1.0) / (std::pow(grading, n_panels) - 1.0);
    double pos = a;
    for (int i = 0; i < n_panels; ++i) {
        pos += len * std::pow(grading, i);
        br.push_back(i + 1 == n_panels ? b : pos);
    }
    return br;
}

// Composite Gauss-Legendre with panel doubling until the change between
// refinements drops below tol * (|I| + abs_floor).
template <class F>
auto integrate_adaptive(F&& f, std::vector<double> breaks, double tol, int max_doublings = 12,
                        int n_gl = 16, double abs_floor = 1e-16) -> decltype(f(0.0)) {
    auto prev = integrate_panels(f, breaks, n_gl);
    auto last = prev;
    for (int it = 0; it < max_doublings; ++it) {
        breaks = split_panels(breaks);
        last = integrate_panels(f, breaks, n_gl);
        const double change = std::abs(last - prev);
        if (change <= tol * std::abs(last) || change <= abs_floor) return last;
        prev = last;
    }
    throw ToleranceError("integrate_adaptive: tolerance not met", std::abs(prev), std::abs(last));
}

// (1/n^d) sum of f over the uniform grid theta_i = -pi + 2*pi*i/n per axis;
// this equals (1/(2*pi)^d) times the periodic trapezoid rule for
// int_{R_pi} f dtheta.
template <class F>
std::complex<double> torus_average(F&& f, int dim, int n) {
    std::vector<int> idx(dim, 0);
    std::vector<double> theta(dim);
    const double h = 2.0 * M_PI / n;
    std::complex<double> acc{0.0, 0.0};
    bool done = false;
    while (!done) {
        for (int j = 0; j < dim; ++j) theta[j] = -M_PI + idx[j] * h;
        acc += f(theta);
        for (int j = dim - 1;; --j) {
            if (j < 0) { done = true; break; }
            if (++idx[j] < n) break;
            idx[j] = 0;
        }
    }
    double scale = 1.0;
    for (int j = 0; j < dim; ++j) scale /= n;
    return acc * scale;
}

// Doubling-controlled torus average.  Throws ToleranceError (carrying the
// last two iterates) if max_doublings is exhausted.
template <class F>
std::complex<double> torus_average_adaptive(F&& f, int dim, const QuadSpec& q) {
    q.validate();
    int n = q.n_per_axis;
    std::complex<double> prev = torus_average(f, dim, n);
    std::complex<double> last = prev;
    for (int it = 0; it < q.max_doublings; ++it) {
        n *= 2;
        last = torus_average(f, dim, n);
        const double change = std::abs(last - prev);
        if (change <= q.target_rel_tol * std::abs(last) || change <= 1e-15) return last;
        prev = last;
    }
    throw ToleranceError("torus_average_adaptive: tolerance not met", std::abs(prev), std::abs(last));
}

// Trapezoid on [-R, R]^d with n subintervals per axis.  Intended for rapidly
// decaying integrands truncated at R, where the rule is spectrally accurate.
template <class F>
std::complex<double> box_trapezoid(F&& f, int dim, double R, int n) {
    std::vector<int> idx(dim, 0);
    std::vector<double> xi(dim);
    const double h = 2.0 * R / n;
    std::complex<double> acc{0.0, 0.0};
    bool done = false;
    while (!done) {
        double w = 1.0;
        for (int j = 0; j < dim; ++j) {
            xi[j] = -R + idx[j] * h;
            if (idx[j] == 0 || idx[j] == n) w *= 0.5;
        }
        acc += w * f(xi);
        for (int j = dim - 1;; --j) {
            if (j < 0) { done = true; break; }
            if (++idx[j] <= n) break;
            idx[j] = 0;
        }
    }
    return acc * std::pow(h, dim);
}

// The absolute acceptance floor scales with the integrand's L1 mass: once
// successive changes sit at the summation noise floor the refinement cannot
// improve, whatever the (possibly tiny, heavily cancelling) value is.
template <class F>
std::complex<double> box_trapezoid_adaptive(F&& f, int dim, double R, const QuadSpec& q) {
    q.validate();
    int n = q.n_per_axis;
    double mass = 0.0;
    auto with_mass = [&](const std::vector<double>& xi) {
        auto v = f(xi);
        mass += std::abs(v);
        return v;
    };
    std::complex<double> prev = box_trapezoid(with_mass, dim, R, n);
    mass *= std::pow(2.0 * R / n, dim);
    const double floor = std::max(1e-15, 3e-15 * mass);
    std::complex<double> last = prev;
    for (int it = 0; it < q.max_doublings; ++it) {
        n *= 2;
        last = box_trapezoid(f, dim, R, n);
        const double change = std::abs(last - prev);
        if (change <= q.target_rel_tol * std::abs(last) || change <= floor) return last;
        prev = last;
    }
    throw ToleranceError("box_trapezoid_adaptive: tolerance not met", std::abs(prev), std::abs(last));
}

}  // namespace latkern
