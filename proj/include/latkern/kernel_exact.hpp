#pragma once

// Exact evaluation of the first and second discrete Green functions from
// their Fourier representations on the torus, an FFT-based whole-window
// evaluator, the exact eps-scaling identities, and the stationary lattice
// integral Omega (l - d <= -1 case).
//
// Lattice points are addressed by their integer index s (physical coordinate
// x = s * eps); all torus quadratures run at eps = 1 and results transport
// through the exact scaling identities.

#include "latkern/errors.hpp"
#include "latkern/fft.hpp"
#include "latkern/quadrature.hpp"
#include "latkern/stencil.hpp"

#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

namespace latkern {

struct KernelField {
    std::string stencil_id;
    double eps = 1.0;
    double t = 0.0;
    int J = 0;
    int window = 0;                 // half-width per axis, in lattice steps
    std::string kind = "first";     // "first" | "second"
    int n_grid = 0;                 // FFT grid actually used
    double aliasing_tail = 0.0;     // relative |mass| outside the window
    std::map<Offset, std::complex<double>> values;

    std::complex<double> at(const Offset& s) const {
        auto it = values.find(s);
        if (it == values.end()) throw DomainError("KernelField: point outside window");
        return it->second;
    }
};

namespace detail {

// (1 - e^{-tA})/A with the removable A = 0 value t (attained only at
// theta = 0 on the torus).
inline std::complex<double> second_amplitude(const std::complex<double>& A, double t) {
    if (std::abs(A) < 1e-14) return {t, 0.0};
    return (1.0 - std::exp(-t * A)) / A;
}

inline void require_lattice(double ratio) {
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw StructuralError("point is not on the eps-lattice");
}

}  // namespace detail

// --- exact scaling identities (eps = 1 values -> general eps) --------------

inline std::complex<double> scale_first(std::complex<double> u1, double eps, int J, int dim, int order) {
    return u1 * std::pow(eps, -double(J * order + dim));
}

inline std::complex<double> scale_second(std::complex<double> v1, double eps, int dim, int order) {
    return v1 * std::pow(eps, double(order - dim));
}

// Physical lattice point x = s*eps' on a coarser/finer lattice: index on the
// unit lattice after rescaling by eps.
inline Offset to_unit_lattice(const std::vector<double>& x_phys, double eps) {
    Offset s(x_phys.size());
    for (size_t j = 0; j < x_phys.size(); ++j) {
        const double r = x_phys[j] / eps;
        detail::require_lattice(r);
        s[j] = static_cast<int>(std::llround(r));
    }
    return s;
}

// --- pointwise kernels ------------------------------------------------------

// Batched periodic-trapezoid evaluator for the torus representations at
// eps = 1.  Amplitudes (the expensive part) are shared across the requested
// lattice points; axes whose taps are symmetric contribute cosine pairs, so
// only half of each such axis is sampled.  Successive grids are nested
// (n/2-grid = even indices), so the doubling comparison costs nothing extra.
class TorusQuad {
  public:
    TorusQuad(const Stencil& st, double tau, int J, bool second)
        : st_(st), d_(st.dim()), tau_(tau), J_(J), second_(second) {
        for (const auto& [off, c] : st.taps()) taps_.emplace_back(off, c.to_complex());
        axis_sym_ = st.axis_symmetric();
    }

    std::vector<std::complex<double>> evaluate(const std::vector<Offset>& xs, const QuadSpec& q) const {
        q.validate();
        int n = q.n_per_axis;
        for (int it = 0;; ++it) {
            auto [fine, coarse] = pass(xs, n);
            const double floor = std::max(1e-15, 3e-15 * mass_);
            bool ok = true;
            for (size_t i = 0; i < xs.size(); ++i) {
                const double change = std::abs(fine[i] - coarse[i]);
                if (change > q.target_rel_tol * std::abs(fine[i]) && change > floor) ok = false;
            }
            if (ok) {
                n_used_ = n;
                return fine;
            }
            if (it >= q.max_doublings)
                throw ToleranceError("TorusQuad: tolerance not met", std::abs(coarse[0]), std::abs(fine[0]));
            n *= 2;
        }
    }

    // resolution accepted by the last evaluate() call
    int n_used() const { return n_used_; }

  private:
    // Returns the n-grid average and the nested (n/2)-grid average.
    std::pair<std::vector<std::complex<double>>, std::vector<std::complex<double>>> pass(
        const std::vector<Offset>& xs, int n) const {
        using C = std::complex<double>;
        const size_t nx = xs.size();
        const size_t nt = taps_.size();

        // per-axis index ranges and weights
        std::vector<int> extent(d_);
        for (int j = 0; j < d_; ++j) extent[j] = axis_sym_[j] ? n / 2 + 1 : n;

        // tables: tap factors e^{i s_j theta}, point phases, weights, parity
        std::vector<std::vector<C>> tapf(d_);         // [axis][i*nt + tap]
        std::vector<std::vector<C>> xf(d_);           // [axis][i*nx + point]
        std::vector<std::vector<double>> wtab(d_);    // symmetry weight
        std::vector<std::vector<char>> even(d_);      // index lies on the n/2 subgrid
        for (int j = 0; j < d_; ++j) {
            tapf[j].resize(extent[j] * nt);
            xf[j].resize(extent[j] * nx);
            wtab[j].resize(extent[j]);
            even[j].resize(extent[j]);
            for (int i = 0; i < extent[j]; ++i) {
                const double th = -M_PI + 2.0 * M_PI * i / n;
                for (size_t k = 0; k < nt; ++k) {
                    const double ph = taps_[k].first[j] * th;
                    tapf[j][i * nt + k] = C{std::cos(ph), std::sin(ph)};
                }
                for (size_t m = 0; m < nx; ++m) {
                    const double ph = xs[m][j] * th;
                    xf[j][i * nx + m] = axis_sym_[j] ? C{std::cos(ph), 0.0} : C{std::cos(ph), std::sin(ph)};
                }
                wtab[j][i] = (axis_sym_[j] && i > 0 && i < n / 2) ? 2.0 : 1.0;
                even[j][i] = (i % 2 == 0) ? 1 : 0;
            }
        }

        std::vector<C> acc_f(nx, C{0.0, 0.0}), acc_c(nx, C{0.0, 0.0});
        double mass = 0.0;
        std::vector<int> idx(d_, 0);
        bool done = false;
        while (!done) {
            double w = 1.0;
            bool on_coarse = true;
            for (int j = 0; j < d_; ++j) {
                w *= wtab[j][idx[j]];
                on_coarse = on_coarse && even[j][idx[j]];
            }
            // A(theta) = sum_k c_k prod_j e^{i s_kj theta_j}
            C A{0.0, 0.0};
            for (size_t k = 0; k < nt; ++k) {
                C p = taps_[k].second;
                for (int j = 0; j < d_; ++j) p *= tapf[j][idx[j] * nt + k];
                A += p;
            }
            C amp;
            if (second_) {
                amp = (std::abs(A) < 1e-14) ? C{tau_, 0.0} : (1.0 - std::exp(-tau_ * A)) / A;
            } else {
                amp = std::exp(-tau_ * A);
                for (int j = 0; j < J_; ++j) amp *= -A;
            }
            amp *= w;
            mass += std::abs(amp);
            for (size_t m = 0; m < nx; ++m) {
                C ph{1.0, 0.0};
                for (int j = 0; j < d_; ++j) ph *= xf[j][idx[j] * nx + m];
                const C contrib = amp * ph;
                acc_f[m] += contrib;
                if (on_coarse) acc_c[m] += contrib;
            }
            for (int j = d_ - 1;; --j) {
                if (j < 0) { done = true; break; }
                if (++idx[j] < extent[j]) break;
                idx[j] = 0;
            }
        }
        double inv_f = 1.0, inv_c = 1.0;
        for (int j = 0; j < d_; ++j) { inv_f /= n; inv_c /= (n / 2); }
        for (size_t m = 0; m < nx; ++m) {
            acc_f[m] *= inv_f;
            acc_c[m] *= inv_c;
        }
        mass_ = mass * inv_f;
        return {std::move(acc_f), std::move(acc_c)};
    }

    const Stencil& st_;
    int d_;
    double tau_;
    int J_;
    bool second_;
    std::vector<std::pair<Offset, std::complex<double>>> taps_;
    std::vector<bool> axis_sym_;
    mutable double mass_ = 0.0;
    mutable int n_used_ = 0;
};

// d^J/dt^J of the first Green function at lattice index s, time t.
inline std::complex<double> first_green(const Stencil& st, double eps, const Offset& s, double t, int J,
                                        const QuadSpec& q) {
    if (t < 0) throw StructuralError("first_green: t must be >= 0");
    if (J < 0) throw StructuralError("first_green: J must be >= 0");
    const double tau = t / std::pow(eps, st.order());
    TorusQuad quad(st, tau, J, false);
    return scale_first(quad.evaluate({s}, q)[0], eps, J, st.dim(), st.order());
}

inline std::vector<std::complex<double>> first_green_batch(const Stencil& st, double eps,
                                                           const std::vector<Offset>& xs, double t, int J,
                                                           const QuadSpec& q) {
    const double tau = t / std::pow(eps, st.order());
    TorusQuad quad(st, tau, J, false);
    auto vals = quad.evaluate(xs, q);
    for (auto& v : vals) v = scale_first(v, eps, J, st.dim(), st.order());
    return vals;
}

inline std::complex<double> second_green(const Stencil& st, double eps, const Offset& s, double t,
                                         const QuadSpec& q) {
    if (t < 0) throw StructuralError("second_green: t must be >= 0");
    const double tau = t / std::pow(eps, st.order());
    TorusQuad quad(st, tau, 0, true);
    return scale_second(quad.evaluate({s}, q)[0], eps, st.dim(), st.order());
}

inline std::vector<std::complex<double>> second_green_batch(const Stencil& st, double eps,
                                                            const std::vector<Offset>& xs, double t,
                                                            const QuadSpec& q) {
    const double tau = t / std::pow(eps, st.order());
    TorusQuad quad(st, tau, 0, true);
    auto vals = quad.evaluate(xs, q);
    for (auto& v : vals) v = scale_second(v, eps, st.dim(), st.order());
    return vals;
}

// --- whole-window evaluation via FFT ---------------------------------------

// Samples the Fourier-side amplitude on an n^d grid and inverse-transforms;
// the result is the periodized kernel, and n is grown until the relative
// mass outside the requested window is below the tolerance.
inline KernelField green_field(const Stencil& st, double eps, double t, int J, int window, const QuadSpec& q,
                               const std::string& kind = "first") {
    if (t <= 0) throw StructuralError("green_field: t must be > 0");
    if (window < 0) throw StructuralError("green_field: window must be >= 0");
    if (kind != "first" && kind != "second") throw StructuralError("green_field: kind must be first|second");
    q.validate();
    const int d = st.dim();
    const double tau = t / std::pow(eps, st.order());

    int n = 16;
    while (n < q.n_per_axis || n < 4 * (window + 1)) n *= 2;

    for (int attempt = 0;; ++attempt) {
        const size_t total = static_cast<size_t>(std::pow(double(n), d) + 0.5);
        std::vector<std::complex<double>> g(total);
        std::vector<int> idx(d, 0);
        std::vector<double> theta(d);
        const double h = 2.0 * M_PI / n;
        for (size_t lin = 0; lin < total; ++lin) {
            for (int j = 0; j < d; ++j) theta[j] = -M_PI + idx[j] * h;
            const std::complex<double> A = st.symbol(theta);
            if (kind == "first") {
                std::complex<double> amp = std::exp(-tau * A);
                for (int j = 0; j < J; ++j) amp *= -A;
                g[lin] = amp;
            } else {
                g[lin] = detail::second_amplitude(A, tau);
            }
            for (int j = d - 1; j >= 0; --j) {
                if (++idx[j] < n) break;
                idx[j] = 0;
            }
        }
        fft_nd(g, d, n);

        // u_per(s) = (-1)^{sum s_k} Ghat[(-s) mod n] / n^d
        const double inv = 1.0 / double(total);
        // Mass within W of the period boundary is what aliases back into the
        // window; it vanishes once the kernel has decayed before the edge.
        const int zone = n / 2 - window;
        double mass_all = 0.0, mass_out = 0.0;
        KernelField field;
        field.stencil_id = st.name();
        field.eps = eps;
        field.t = t;
        field.J = (kind == "first") ? J : 0;
        field.window = window;
        field.kind = kind;
        field.n_grid = n;

        std::vector<int> s(d, -n / 2);
        bool done = false;
        while (!done) {
            size_t lin = 0;
            int parity = 0;
            bool inside = true, in_zone = false;
            for (int j = 0; j < d; ++j) {
                const int m = ((-s[j]) % n + n) % n;
                lin = lin * n + m;
                parity += s[j];
                if (std::abs(s[j]) > window) inside = false;
                if (std::abs(s[j]) >= zone) in_zone = true;
            }
            std::complex<double> val = g[lin] * inv;
            if (parity % 2 != 0) val = -val;
            const double a = std::abs(val);
            mass_all += a;
            if (in_zone) mass_out += a;
            if (inside) field.values[Offset(s.begin(), s.end())] = val;
            for (int j = d - 1;; --j) {
                if (j < 0) { done = true; break; }
                if (++s[j] < n - n / 2) break;
                s[j] = -n / 2;
            }
        }

        field.aliasing_tail = mass_out / std::max(mass_all, 1e-300);
        if (field.aliasing_tail < q.target_rel_tol || attempt >= q.max_doublings) {
            if (field.aliasing_tail >= q.target_rel_tol)
                throw ToleranceError("green_field: aliasing tail above tolerance", field.aliasing_tail,
                                     field.aliasing_tail);
            // transport eps = 1 values to eps
            if (eps != 1.0) {
                for (auto& [key, v] : field.values)
                    v = (kind == "first") ? scale_first(v, eps, field.J, d, st.order())
                                          : scale_second(v, eps, d, st.order());
            }
            return field;
        }
        n *= 2;
    }
}

// --- the stationary lattice integral (l - d <= -1) ---------------------------

// Omega(y) = (1/(2 pi)^d) int_{R_pi} e^{i y.theta} / A(theta) dtheta,
// absolutely convergent when l - d <= -1.  The inscribed ball B_pi is
// integrated in spherical coordinates (the r^{d-1} Jacobian absorbs the
// |theta|^{-l} singularity); the corner region R_pi \ B_pi is covered by the
// 2d face pyramids, each parametrized by its face map u -> (u, +-1)/|(u,1)|
// with exact r_pi = pi sqrt(1+|u|^2).
class OmegaIntegral {
  public:
    OmegaIntegral(const Stencil& st, double rel_tol = 1e-9) : st_(st), tol_(rel_tol) {
        if (st.order() - st.dim() > -1)
            throw StructuralError("omega_integral: requires l - d <= -1 (use the expansion routes otherwise)");
        if (!st_.ellipticity_cache() || !st_.ellipticity_cache()->verified) {
            if (!st_.check_ellipticity(64).verified)
                throw StructuralError("omega_integral: ellipticity check failed");
        }
    }

    std::complex<double> operator()(const Offset& x) const {
        std::vector<double> y(x.begin(), x.end());
        int n = 24;
        std::complex<double> prev = total(y, n);
        std::complex<double> last = prev;
        for (int it = 0; it < 7; ++it) {
            n *= 2;
            last = total(y, n);
            if (std::abs(last - prev) <= tol_ * std::max(std::abs(last), 1e-14)) return last;
            prev = last;
        }
        throw ToleranceError("omega_integral: tolerance not met", std::abs(prev), std::abs(last));
    }

  private:
    std::complex<double> radial(const std::vector<double>& omega, const std::vector<double>& y, double r0,
                                double r1, int n) const {
        const int d = st_.dim();
        auto f = [&](double r) {
            std::vector<double> theta(d);
            for (int j = 0; j < d; ++j) theta[j] = r * omega[j];
            double phase = 0.0;
            for (int j = 0; j < d; ++j) phase += y[j] * theta[j];
            return std::pow(r, d - 1) / st_.symbol(theta) * std::complex<double>(std::cos(phase), std::sin(phase));
        };
        return integrate_gl(f, r0, r1, n);
    }

    std::complex<double> total(const std::vector<double>& y, int n) const {
        const int d = st_.dim();
        std::complex<double> acc{0.0, 0.0};

        // Ball part in spherical coordinates.
        if (d == 2) {
            const int n_ang = 4 * n;
            for (int i = 0; i < n_ang; ++i) {
                const double phi = 2.0 * M_PI * i / n_ang;
                acc += radial({std::cos(phi), std::sin(phi)}, y, 0.0, M_PI, n) * (2.0 * M_PI / n_ang);
            }
        } else if (d >= 3) {
            // Gauss-Legendre in mu = cos(phi_1), trapezoid in the final angle,
            // recursive product rule for intermediate angles (d = 3 typical).
            if (d != 3) throw UnsupportedCaseError("omega_integral: dimensions other than 2 and 3 not supported");
            const GaussRule& gr = gauss_legendre(n);
            const int n_phi = 2 * n;
            for (int i = 0; i < n; ++i) {
                const double mu = gr.x[i];
                const double smu = std::sqrt(std::max(0.0, 1.0 - mu * mu));
                for (int k = 0; k < n_phi; ++k) {
                    const double phi = 2.0 * M_PI * k / n_phi;
                    const std::vector<double> omega{mu, smu * std::cos(phi), smu * std::sin(phi)};
                    acc += radial(omega, y, 0.0, M_PI, n) * gr.w[i] * (2.0 * M_PI / n_phi);
                }
            }
        } else {
            throw StructuralError("omega_integral: d must be >= 2 for l - d <= -1");
        }

        // Corner pyramids: one per face.
        const GaussRule& gu = gauss_legendre(n);
        for (int axis = 0; axis < d; ++axis) {
            for (int sign = -1; sign <= 1; sign += 2) {
                std::vector<int> uidx(d - 1, 0);
                bool done = false;
                while (!done) {
                    double w = 1.0, norm2 = 1.0;
                    std::vector<double> omega(d);
                    int pos = 0;
                    for (int j = 0; j < d; ++j) {
                        if (j == axis) continue;
                        const double u = gu.x[uidx[pos]];
                        w *= gu.w[uidx[pos]];
                        omega[j] = u;
                        norm2 += u * u;
                        ++pos;
                    }
                    omega[axis] = sign;
                    const double nrm = std::sqrt(norm2);
                    for (int j = 0; j < d; ++j) omega[j] /= nrm;
                    const double jac = std::pow(norm2, -0.5 * d);
                    acc += radial(omega, y, M_PI, M_PI * nrm, n) * (w * jac);
                    for (int j = d - 2;; --j) {
                        if (j < 0) { done = true; break; }
                        if (++uidx[j] < n) break;
                        uidx[j] = 0;
                    }
                }
            }
        }
        return acc / std::pow(2.0 * M_PI, d);
    }

    Stencil st_;
    double tol_;
};

}  // namespace latkern
