#pragma once

/// Randomized identity suites over the q-calculus primitives: derivative
/// rules, integral rules, the composition lemma and the higher-order
/// integration-by-parts identity.  Shared by the CLI `verify` command and
/// the acceptance tests.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "qvar/lattice.hpp"
#include "qvar/variational.hpp"

namespace qvar {

/// Ulp distance between two finite doubles of the same sign region.
inline std::uint64_t ulp_distance(double a, double b) {
    if (a == b) return 0;
    if (std::signbit(a) != std::signbit(b))
        return ulp_distance(a, 0.0) + ulp_distance(b, 0.0);
    auto key = [](double v) {
        return std::bit_cast<std::uint64_t>(std::fabs(v));
    };
    std::uint64_t ka = key(a), kb = key(b);
    return ka > kb ? ka - kb : kb - ka;
}

struct SuiteResult {
    std::string name;
    std::size_t passed = 0;
    std::size_t failed = 0;
};

namespace detail {

inline bool close_rel(double lhs, double rhs, double tol) {
    const double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
    return std::fabs(lhs - rhs) <= tol * scale;
}

struct CaseGen {
    std::mt19937_64 rng;

    explicit CaseGen(std::uint64_t seed) : rng(seed) {}

    double pick_ratio() {
        static const double qs[] = {1.1, 1.5, 2.0, 3.0};
        return qs[std::uniform_int_distribution<std::size_t>(0, 3)(rng)];
    }

    QLattice lattice(std::size_t min_points = 5, std::size_t max_points = 40) {
        static const double as[] = {0.5, 1.0, 2.0};
        double a = as[std::uniform_int_distribution<std::size_t>(0, 2)(rng)];
        std::size_t n = std::uniform_int_distribution<std::size_t>(
            min_points, max_points)(rng);
        return QLattice(a, pick_ratio(), n);
    }

    double value(double lo = -2.0, double hi = 2.0) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    LatticeFn fn(const QLattice& lat) {
        std::vector<double> v(lat.n_points());
        for (double& x : v) x = value();
        return LatticeFn(lat, 0, std::move(v));
    }

    /// Values bounded away from zero, for quotient-rule denominators.
    LatticeFn fn_nonzero(const QLattice& lat) {
        std::vector<double> v(lat.n_points());
        for (double& x : v) {
            double m = std::uniform_real_distribution<double>(0.3, 2.0)(rng);
            x = (rng() & 1u) ? m : -m;
        }
        return LatticeFn(lat, 0, std::move(v));
    }

    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    }
};

} // namespace detail

/// One randomized trial per suite per call; tol is the scale-relative
/// acceptance threshold for the non-exact identities.
inline std::vector<SuiteResult> run_identity_suites(std::size_t trials,
                                                    std::uint64_t seed,
                                                    double tol = 1e-10) {
    detail::CaseGen gen(seed);
    SuiteResult lin{"derivative linearity"};
    SuiteResult prod{"product rule"};
    SuiteResult quot{"quotient rule"};
    SuiteResult ilin{"integral linearity and splitting"};
    SuiteResult pos{"integral positivity"};
    SuiteResult ibp1{"first-order integration by parts"};
    SuiteResult fund{"fundamental theorem"};
    SuiteResult dint{"derivative of the integral"};
    SuiteResult comp{"composition lemma"};
    SuiteResult ibpn{"higher-order integration by parts"};

    auto tally = [](SuiteResult& s, bool ok) {
        if (ok) ++s.passed; else ++s.failed;
    };

    for (std::size_t trial = 0; trial < trials; ++trial) {
        QLattice lat = gen.lattice();
        const double q = lat.ratio();
        LatticeFn f = gen.fn(lat);
        LatticeFn g = gen.fn(lat);
        const std::size_t N = lat.last_index();

        // D_q[af + bg] = a D_q[f] + b D_q[g]
        {
            const double a = gen.value(), b = gen.value();
            std::vector<double> comb(lat.n_points());
            for (std::size_t k = 0; k <= N; ++k)
                comb[k] = a * f.at(k) + b * g.at(k);
            LatticeFn dc = dq(LatticeFn(lat, 0, std::move(comb)));
            LatticeFn df = dq(f), dg = dq(g);
            bool ok = true;
            for (std::size_t k = 0; k < N; ++k)
                ok = ok && detail::close_rel(dc.at(k),
                                             a * df.at(k) + b * dg.at(k), tol);
            tally(lin, ok);
        }

        // D_q[fg](t) = D_q[f](t) g(t) + f(qt) D_q[g](t)
        {
            std::vector<double> fg(lat.n_points());
            for (std::size_t k = 0; k <= N; ++k) fg[k] = f.at(k) * g.at(k);
            LatticeFn dfg = dq(LatticeFn(lat, 0, std::move(fg)));
            LatticeFn df = dq(f), dg = dq(g);
            bool ok = true;
            for (std::size_t k = 0; k < N; ++k)
                ok = ok && detail::close_rel(
                               dfg.at(k),
                               df.at(k) * g.at(k) + f.at(k + 1) * dg.at(k),
                               tol);
            tally(prod, ok);
        }

        // D_q[f/g](t) = (D_q[f] g - f D_q[g]) / (g(t) g(qt))
        {
            LatticeFn h = gen.fn_nonzero(lat);
            std::vector<double> fh(lat.n_points());
            for (std::size_t k = 0; k <= N; ++k) fh[k] = f.at(k) / h.at(k);
            LatticeFn dfh = dq(LatticeFn(lat, 0, std::move(fh)));
            LatticeFn df = dq(f), dh = dq(h);
            bool ok = true;
            for (std::size_t k = 0; k < N; ++k)
                ok = ok && detail::close_rel(
                               dfh.at(k),
                               (df.at(k) * h.at(k) - f.at(k) * dh.at(k)) /
                                   (h.at(k) * h.at(k + 1)),
                               tol);
            tally(quot, ok);
        }

        // integral linearity plus interval splitting
        {
            const double a = gen.value(), b = gen.value();
            std::size_t hi = gen.index(1, N);
            std::size_t mid = gen.index(0, hi);
            std::vector<double> comb(lat.n_points());
            for (std::size_t k = 0; k <= N; ++k)
                comb[k] = a * f.at(k) + b * g.at(k);
            LatticeFn c(lat, 0, std::move(comb));
            bool ok = detail::close_rel(q_integral(c, 0, hi),
                                        a * q_integral(f, 0, hi) +
                                            b * q_integral(g, 0, hi),
                                        tol) &&
                      detail::close_rel(q_integral(f, 0, hi),
                                        q_integral(f, 0, mid) +
                                            q_integral(f, mid, hi),
                                        tol);
            tally(ilin, ok);
        }

        // positivity
        {
            std::size_t hi = gen.index(1, N);
            std::vector<double> v(lat.n_points());
            for (double& x : v)
                x = std::uniform_real_distribution<double>(0.01, 2.0)(gen.rng);
            tally(pos, q_integral(LatticeFn(lat, 0, std::move(v)), 0, hi) > 0);
        }

        // int f D_q[g] = [fg] - int D_q[f] g(qt)
        {
            std::size_t hi = gen.index(1, N);
            LatticeFn df = dq(f), dg = dq(g);
            double lhs = 0.0, rhs_int = 0.0;
            for (std::size_t k = 0; k < hi; ++k) {
                lhs += lat.point(k) * f.at(k) * dg.at(k);
                rhs_int += lat.point(k) * df.at(k) * g.at(k + 1);
            }
            lhs *= q - 1.0;
            rhs_int *= q - 1.0;
            double rhs = f.at(hi) * g.at(hi) - f.at(0) * g.at(0) - rhs_int;
            tally(ibp1, detail::close_rel(lhs, rhs, tol));
        }

        // int_0^n D_q[f] = f(t_n) - f(t_0)
        {
            std::size_t hi = gen.index(1, N);
            tally(fund, detail::close_rel(q_integral(dq(f), 0, hi),
                                          f.at(hi) - f.at(0), tol));
        }

        // D_q[t -> int_0^t f] = f
        {
            std::vector<double> F(lat.n_points());
            for (std::size_t k = 0; k <= N; ++k) F[k] = q_integral(f, 0, k);
            LatticeFn dF = dq(LatticeFn(lat, 0, std::move(F)));
            bool ok = true;
            for (std::size_t k = 0; k < N; ++k)
                ok = ok && detail::close_rel(dF.at(k), f.at(k), tol);
            tally(dint, ok);
        }

        // D_q[f](sigma(t)) = (1/q) D_q[f o sigma](t), within 4 ulps
        {
            std::size_t k = gen.index(0, N - 2);
            double lhs = dq(f).at(k + 1);
            double rhs = dq(shift_sigma(f, 1)).at(k) / q;
            tally(comp, ulp_distance(lhs, rhs) <= 4);
        }

        // higher-order integration by parts, r <= 4, 1 <= i <= r
        {
            int r = int(gen.index(1, 4));
            int i = int(gen.index(1, std::size_t(r)));
            if (N >= std::size_t(r) + 2) {
                std::size_t hi = gen.index(1, N - std::size_t(r));
                auto sides = ibp_identity_sides(f, g, r, i, 0, hi);
                tally(ibpn, detail::close_rel(sides.lhs, sides.rhs, tol));
            } else {
                ++ibpn.passed; // lattice too short to pose the case
            }
        }
    }

    return {lin, prod, quot, ilin, pos, ibp1, fund, dint, comp, ibpn};
}

} // namespace qvar
