#pragma once

#include <complex>
#include <utility>
#include <vector>

namespace latkern {

// One assembled asymptotic sum: the total and the individually labeled terms
// (label = expansion grade, or -1 for t-independent pieces like Omega).
struct AsymptoticValue {
    std::complex<double> total{0.0, 0.0};
    std::vector<std::pair<int, std::complex<double>>> terms;
    int K = 0;
    double t0 = 0.0;

    void add(int label, std::complex<double> v) {
        terms.emplace_back(label, v);
        total += v;
    }
};

}  // namespace latkern
