#pragma once

// Minimal iterative radix-2 complex FFT, plus a multi-dimensional wrapper.
// Grid sizes are powers of two throughout; that is all the field evaluator
// needs, and it keeps the summation order fixed (bitwise-reproducible).

#include "latkern/errors.hpp"

#include <complex>
#include <vector>

namespace latkern {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place DFT: out[k] = sum_j in[j] e^{-2*pi*i*j*k/n} (inverse = conjugate
// trick, applied by the caller).
inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const int n = static_cast<int>(a.size());
    if (!is_pow2(n)) throw StructuralError("fft: length must be a power of two");
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// d-dimensional forward DFT on an n^d array stored row-major.
inline void fft_nd(std::vector<std::complex<double>>& a, int dim, int n) {
    if (static_cast<int>(a.size()) != static_cast<int>(std::pow(double(n), dim) + 0.5))
        throw StructuralError("fft_nd: size mismatch");
    std::vector<std::complex<double>> line(n);
    int stride = 1;
    for (int axis = dim - 1; axis >= 0; --axis) {
        const int blocks = static_cast<int>(a.size()) / (n * stride);
        for (int b = 0; b < blocks; ++b) {
            for (int s = 0; s < stride; ++s) {
                const int base = b * n * stride + s;
                for (int k = 0; k < n; ++k) line[k] = a[base + k * stride];
                fft_inplace(line);
                for (int k = 0; k < n; ++k) a[base + k * stride] = line[k];
            }
        }
        stride *= n;
    }
}

}  // namespace latkern
