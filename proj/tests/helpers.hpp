#pragma once

// Shared test utilities: random trajectories and a fixed family of smooth
// Lagrangians (negative diagonal quadratic plus a bounded sinusoidal
// perturbation).

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "qvar/expr.hpp"
#include "qvar/lattice.hpp"

namespace qvar_test {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline qvar::LatticeFn random_fn(const qvar::QLattice& lat,
                                 std::mt19937_64& rng, double lo = -1.0,
                                 double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(lat.n_points());
    for (double& x : v) x = d(rng);
    return qvar::LatticeFn(lat, 0, std::move(v));
}

/// L = -(c_1 u1^2 + ... + c_{r+1} u{r+1}^2) + d * sin(w*t + e_1 u1 + ...),
/// with c_i in [0.5, 2] and |d| <= amp.  Strictly concave in the u
/// arguments when amp is small.
inline qvar::ExprAst random_lagrangian(int r, std::mt19937_64& rng,
                                       double amp = 0.3) {
    std::uniform_real_distribution<double> c(0.5, 2.0);
    std::uniform_real_distribution<double> e(-0.5, 0.5);
    std::uniform_real_distribution<double> w(0.1, 0.5);
    std::uniform_real_distribution<double> d(-amp, amp);
    std::string quad, phase;
    for (int i = 1; i <= r + 1; ++i) {
        if (i > 1) quad += " + ";
        quad += fmt(c(rng)) + "*u" + std::to_string(i) + "^2";
        phase += " + " + fmt(e(rng)) + "*u" + std::to_string(i);
    }
    std::string text = "-(" + quad + ") + " + fmt(d(rng)) + "*sin(" +
                       fmt(w(rng)) + "*t" + phase + ")";
    return qvar::parse_expression(text, r);
}

/// Variation that vanishes on the first r and last r indices of the
/// window 0..k_hi+r-1, zeroing every boundary bracket of the
/// integration-by-parts identity.
inline qvar::LatticeFn bump_eta(const qvar::QLattice& lat, int r,
                                std::size_t k_hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> v(k_hi + std::size_t(r), 0.0);
    for (std::size_t j = std::size_t(r); j < k_hi; ++j) v[j] = d(rng);
    return qvar::LatticeFn(lat, 0, std::move(v));
}

} // namespace qvar_test
