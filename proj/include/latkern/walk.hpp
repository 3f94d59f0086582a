#pragma once

// Continuous-time random walks generated by -scale*A for stencils whose
// off-diagonal taps are nonpositive: exponential holding times with rate
// lambda = scale*c_0, jumps drawn from the off-diagonal rates.  Transition
// probabilities are compared against the exact kernel through the time
// rescaling p_{scale*A}(x, t) = p_A(x, scale*t), which is exact.

#include "latkern/errors.hpp"
#include "latkern/expansion.hpp"
#include "latkern/kernel_exact.hpp"
#include "latkern/stencil.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace latkern {

// --- deterministic splittable randomness ------------------------------------

// splitmix64; the per-path stream is seeded by mixing (seed, path index), so
// paths are reproducible and independent of evaluation order.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    static SplitMix64 for_path(std::uint64_t seed, std::uint64_t path) {
        SplitMix64 outer(seed);
        SplitMix64 inner(outer.next() ^ (0x9e3779b97f4a7c15ULL * (path + 1)));
        inner.next();
        return inner;
    }
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    // uniform in (0, 1]
    double uniform() { return ((next() >> 11) + 1.0) * 0x1.0p-53; }

  private:
    std::uint64_t state_;
};

// --- generator ----------------------------------------------------------------

struct CTRWSpec {
    Stencil stencil;   // the unscaled operator A
    double scale = 1;  // generator is -scale*A
    double lambda = 0; // total jump rate = scale * c_0
    std::vector<Offset> jumps;
    std::vector<double> probs;  // jump distribution (scale-independent)
    std::vector<double> cdf;

    // transition kernel time for comparisons against the unscaled stencil
    double kernel_time(double t) const { return scale * t; }
};

// Validates that -scale*A is a Markov generator: every off-diagonal tap must
// be <= 0.  Higher-order Laplacians (N >= 2) carry a positive off-diagonal
// tap and are rejected.
inline CTRWSpec generator_from_stencil(const Stencil& st, double scale) {
    if (scale <= 0) throw StructuralError("generator_from_stencil: scale must be positive");
    CTRWSpec spec{st, scale, 0.0, {}, {}, {}};
    double c0 = 0.0;
    for (const auto& [s, c] : st.taps()) {
        if (!c.is_real()) throw StructuralError("generator_from_stencil: complex tap has no rate meaning");
        bool origin = true;
        for (int v : s) origin &= (v == 0);
        const double tap = to_double(c.re);
        if (origin) {
            c0 = tap;
            continue;
        }
        if (tap > 0)
            throw StructuralError("generator_from_stencil: positive off-diagonal tap at " + st.name() +
                                  " => negative jump rate; not a Markov generator");
        if (tap < 0) {
            spec.jumps.push_back(s);
            spec.probs.push_back(-tap);
        }
    }
    if (c0 <= 0) throw StructuralError("generator_from_stencil: nonpositive total rate");
    double total = 0.0;
    for (double p : spec.probs) total += p;
    if (std::abs(total - c0) > 1e-12 * c0)
        throw StructuralError("generator_from_stencil: rates do not sum to the diagonal (A(0) != 0?)");
    spec.lambda = scale * c0;
    double acc = 0.0;
    for (size_t i = 0; i < spec.probs.size(); ++i) {
        spec.probs[i] /= total;
        acc += spec.probs[i];
        spec.cdf.push_back(acc);
    }
    spec.cdf.back() = 1.0;
    return spec;
}

// --- simulation -----------------------------------------------------------------

struct Histogram {
    std::map<Offset, long> counts;
    long n_paths = 0;
    double t = 0.0;
    std::uint64_t seed = 0;
    int dim = 1;
};

inline Histogram simulate(const CTRWSpec& spec, double t, long n_paths, std::uint64_t seed) {
    if (n_paths < 1) throw StructuralError("simulate: n_paths >= 1");
    if (t < 0) throw StructuralError("simulate: t >= 0");
    const int d = spec.stencil.dim();
    Histogram hist;
    hist.n_paths = n_paths;
    hist.t = t;
    hist.seed = seed;
    hist.dim = d;
    for (long p = 0; p < n_paths; ++p) {
        SplitMix64 rng = SplitMix64::for_path(seed, static_cast<std::uint64_t>(p));
        Offset pos(d, 0);
        double clock = 0.0;
        while (true) {
            clock += -std::log(rng.uniform()) / spec.lambda;
            if (clock > t) break;
            const double u = rng.uniform();
            size_t lo = 0, hi = spec.cdf.size() - 1;
            while (lo < hi) {
                const size_t mid = (lo + hi) / 2;
                if (spec.cdf[mid] < u)
                    lo = mid + 1;
                else
                    hi = mid;
            }
            for (int j = 0; j < d; ++j) pos[j] += spec.jumps[lo][j];
        }
        ++hist.counts[pos];
    }
    return hist;
}

// --- comparison -------------------------------------------------------------------

struct CompareReport {
    double tv = 0.0;              // total-variation distance
    double sampling_scale = 0.0;  // sqrt(support / n_paths)
    double mass_outside_window = 0.0;
    int window = 0;
    std::string order;  // "exact" | "leading" | "asymptotic-K"
};

// Transition probabilities over a window, exact or truncated-expansion.
inline std::map<Offset, double> transition_probabilities(const CTRWSpec& spec, double t, int window,
                                                         const std::string& order,
                                                         const QuadSpec& q = QuadSpec{32, 1e-10, 9}) {
    const double tau = spec.kernel_time(t);
    std::map<Offset, double> p;
    if (order == "exact") {
        KernelField field = green_field(spec.stencil, 1.0, tau, 0, window, q, "first");
        for (const auto& [x, v] : field.values) p[x] = v.real();
        return p;
    }
    Expansion ex(spec.stencil, 8);
    const int d = spec.stencil.dim();
    std::vector<int> idx(d, -window);
    bool done = false;
    while (!done) {
        Offset x(idx.begin(), idx.end());
        if (order == "leading") {
            std::vector<double> y(d);
            for (int j = 0; j < d; ++j) y[j] = x[j] / std::pow(tau, 1.0 / spec.stencil.order());
            p[x] = (ex.continuous_kernel(y) / std::pow(tau, double(d) / spec.stencil.order())).real();
        } else if (order.rfind("asymptotic-", 0) == 0) {
            const int K = std::stoi(order.substr(11));
            p[x] = ex.first_asymptotic(1.0, x, tau, 0, K).total.real();
        } else {
            throw StructuralError("transition_probabilities: unknown order '" + order + "'");
        }
        for (int j = d - 1;; --j) {
            if (j < 0) { done = true; break; }
            if (++idx[j] <= window) break;
            idx[j] = -window;
        }
    }
    return p;
}

inline double tv_distance(const std::map<Offset, double>& a, const std::map<Offset, double>& b) {
    double tv = 0.0;
    for (const auto& [x, va] : a) {
        auto it = b.find(x);
        tv += std::abs(va - (it == b.end() ? 0.0 : it->second));
    }
    for (const auto& [x, vb] : b)
        if (!a.count(x)) tv += std::abs(vb);
    return 0.5 * tv;
}

inline CompareReport compare(const Histogram& hist, const CTRWSpec& spec, const std::string& order,
                             const QuadSpec& q = QuadSpec{32, 1e-10, 9}) {
    int reach = 0;
    for (const auto& [x, c] : hist.counts)
        for (int v : x) reach = std::max(reach, std::abs(v));
    const int window = reach + 8;
    CompareReport rep;
    rep.window = window;
    rep.order = order;

    const std::map<Offset, double> p = transition_probabilities(spec, hist.t, window, order, q);
    double mass_in = 0.0;
    for (const auto& [x, pv] : p) mass_in += pv;
    rep.mass_outside_window = std::max(0.0, 1.0 - mass_in);

    std::map<Offset, double> emp;
    const double inv_n = 1.0 / double(hist.n_paths);
    for (const auto& [x, c] : hist.counts) emp[x] = c * inv_n;
    rep.tv = tv_distance(emp, p) + 0.5 * rep.mass_outside_window;

    long support = 0;
    const double thresh = 0.25 * inv_n;
    for (const auto& [x, pv] : p)
        if (pv > thresh) ++support;
    rep.sampling_scale = std::sqrt(double(support) / double(hist.n_paths));
    return rep;
}

// --- lattice maps -------------------------------------------------------------------

struct LatticeMap {
    int dim = 2;
    std::vector<std::vector<double>> m;  // row-major; maps the source lattice to Z^d

    double det() const {
        if (dim == 1) return m[0][0];
        if (dim == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
        throw UnsupportedCaseError("LatticeMap: only d <= 2 maps are used");
    }
    std::vector<std::vector<double>> inverse() const {
        const double dt = det();
        if (std::abs(dt) < 1e-14) throw StructuralError("LatticeMap: singular matrix");
        if (dim == 1) return {{1.0 / dt}};
        return {{m[1][1] / dt, -m[0][1] / dt}, {-m[1][0] / dt, m[0][0] / dt}};
    }
    // source-lattice (Cartesian) coordinates of a Z^d point
    std::vector<double> pullback(const Offset& x) const {
        const auto inv = inverse();
        std::vector<double> y(dim, 0.0);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) y[i] += inv[i][j] * x[j];
        return y;
    }
};

// M takes the triangular lattice to Z^2 and cA((M^T)^{-1} xi) = |xi|^2.
inline LatticeMap triangular_map() {
    return LatticeMap{2, {{1.0, -1.0 / std::sqrt(3.0)}, {0.0, 2.0 / std::sqrt(3.0)}}};
}

struct PushforwardEntry {
    Offset chart;                   // Z^d labels
    std::vector<double> cartesian;  // M^{-1} x
    double value;
};

// Point masses transport unchanged; only the labels move.
template <class MapT>
std::vector<PushforwardEntry> pushforward(const MapT& values, const LatticeMap& map) {
    std::vector<PushforwardEntry> out;
    out.reserve(values.size());
    for (const auto& [x, v] : values)
        out.push_back({x, map.pullback(x), static_cast<double>(v)});
    return out;
}

}  // namespace latkern
