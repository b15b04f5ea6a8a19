#pragma once

/// Problem assembly and solving: admissible prefixes from initial
/// conditions, forward shooting of the Euler-Lagrange recurrence, direct
/// maximization of the truncated functional, and trajectory diagnostics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qvar/errors.hpp"
#include "qvar/expr.hpp"
#include "qvar/lattice.hpp"
#include "qvar/variational.hpp"

namespace qvar {

struct Tolerances {
    double root_tol = 1e-10;
    double grad_tol = 1e-8;
    double gap_tol = 1e-8;
    double tail_tol = 1e-9;
};

/// A fully specified variational problem instance.  An empty
/// sample_indices means "densest stencil-feasible sweep for the
/// trajectory at hand".
struct ProblemSpec {
    QLattice lattice;
    int order;
    ExprAst lagrangian;
    std::vector<double> alphas; // alpha_0 .. alpha_{r-1}
    std::size_t k_hi;
    std::vector<std::size_t> sample_indices;
    Tolerances tol;
};

struct TrajectoryDiagnostics {
    LatticeFn el;
    double el_max_abs = 0.0;
    std::vector<TransversalitySequence> transversality;
    double j_value = 0.0;
    bool el_within_tol = false;
};

/// First r trajectory values x(t_0)..x(t_{r-1}) matching the initial
/// conditions D_q^j[x](a) = alpha_j, j = 0..r-1.  Each condition is
/// affine in the next lattice value with nonzero leading coefficient, so
/// the system solves sequentially.
inline std::vector<double> seed_prefix(const std::vector<double>& alphas,
                                       const QLattice& lattice, int r) {
    if (alphas.size() != std::size_t(r))
        throw Error("seed_prefix needs exactly r initial conditions");
    if (lattice.n_points() < std::size_t(r))
        throw DomainTooShort("lattice shorter than the order");
    std::vector<double> prefix;
    prefix.reserve(std::size_t(r));
    prefix.push_back(alphas[0]);
    for (int j = 1; j < r; ++j) {
        auto deriv_at_a = [&](double v) {
            std::vector<double> vals = prefix;
            vals.push_back(v);
            return dq(LatticeFn(lattice, 0, std::move(vals)), std::size_t(j))
                .at(0);
        };
        const double g0 = deriv_at_a(0.0);
        const double g1 = deriv_at_a(1.0);
        prefix.push_back((alphas[std::size_t(j)] - g0) / (g1 - g0));
    }
    return prefix;
}

namespace detail {

/// EL residual at the window starting at index k, as a function of the
/// newest value v = x(t_{k+2r}).  known holds x(t_k)..x(t_{k+2r-1}).
inline double windowed_residual(const ExprAst& L, const QLattice& lattice,
                                std::size_t k, const std::vector<double>& known,
                                double v) {
    std::vector<double> vals = known;
    vals.push_back(v);
    LatticeFn window(lattice, k, std::move(vals));
    return el_residual(L, window).at(k);
}

} // namespace detail

/// Extend a full 2r-prefix over the whole lattice by solving the EL
/// recurrence for the newest value at each step: bracket expansion plus
/// secant/bisection refinement down to |residual| <= root_tol * scale.
inline LatticeFn shoot_forward(const ExprAst& L,
                               const std::vector<double>& prefix,
                               const ProblemSpec& spec) {
    const int r = L.order();
    const std::size_t stencil = 2 * std::size_t(r);
    if (prefix.size() != stencil)
        throw Error("shoot_forward needs a prefix of exactly 2r values");
    const QLattice& lat = spec.lattice;
    const std::size_t N = lat.last_index();
    if (N < stencil)
        throw DomainTooShort("lattice shorter than one EL stencil");

    std::vector<double> values = prefix;
    for (std::size_t k = 0; k + stencil <= N; ++k) {
        std::vector<double> known(values.begin() + std::ptrdiff_t(k),
                                  values.end());
        auto res = [&](double v) {
            return detail::windowed_residual(L, lat, k, known, v);
        };

        double v0 = values.back();
        double r0 = res(v0);
        const double scale = std::max(1.0, std::fabs(v0));
        const double step0 = 1e-6 * (1.0 + std::fabs(v0));
        const double r_probe = res(v0 + step0);
        const double slope = (r_probe - r0) / step0;
        // degenerate when the probe barely moves the residual relative to
        // the residual's own magnitude
        if (std::fabs(r_probe - r0) <=
            1e-12 * std::max({1e-300, std::fabs(r0), std::fabs(r_probe)}))
            throw DegenerateLagrangian(
                "EL residual at step " + std::to_string(k) +
                " is insensitive to the newest trajectory value");

        // secant from the measured slope; usually lands immediately for
        // residuals affine in v
        double v1 = v0 - r0 / slope;
        double r1 = res(v1);
        const double tol = spec.tol.root_tol *
                           std::max(scale, std::fabs(v1));
        for (int it = 0; it < 50 && std::fabs(r1) > tol; ++it) {
            if (r1 == r0) break;
            double v2 = v1 - r1 * (v1 - v0) / (r1 - r0);
            v0 = v1; r0 = r1;
            v1 = v2; r1 = res(v1);
        }

        if (std::fabs(r1) > tol) {
            // bracket by geometric expansion around the last iterate
            double lo = v1, hi = v1, flo = r1, fhi = r1;
            double span = std::fabs(v1) + 1.0;
            bool bracketed = false;
            for (int m = 0; m < 60 && !bracketed; ++m) {
                lo = v1 - span; hi = v1 + span;
                flo = res(lo); fhi = res(hi);
                if (flo == 0.0 || fhi == 0.0 || flo * fhi < 0.0 ||
                    flo * r1 < 0.0 || fhi * r1 < 0.0)
                    bracketed = true;
                span *= 2.0;
            }
            if (!bracketed)
                throw NoBracket("no sign change found for the EL step at "
                                "index " + std::to_string(k));
            double a = lo, fa = flo, b = hi, fb = fhi;
            if (flo * r1 < 0.0) { b = v1; fb = r1; }
            else if (fhi * r1 < 0.0) { a = v1; fa = r1; }
            for (int it = 0; it < 200; ++it) {
                double mid = (fb != fa) ? b - fb * (b - a) / (fb - fa)
                                        : 0.5 * (a + b);
                if (!(mid > std::min(a, b) && mid < std::max(a, b)))
                    mid = 0.5 * (a + b);
                double fm = res(mid);
                if (std::fabs(fm) <= tol) { v1 = mid; r1 = fm; break; }
                if (fa * fm <= 0.0) { b = mid; fb = fm; }
                else { a = mid; fa = fm; }
            }
            if (std::fabs(r1) > tol)
                throw NoBracket("EL step at index " + std::to_string(k) +
                                " did not reach the root tolerance");
        }
        values.push_back(v1);
    }
    return LatticeFn(lat, 0, std::move(values));
}

namespace detail {

/// Coefficient of y(t_{k+j}), j = 0..i, in D_q^i[y](t_k), where t_k is
/// the evaluation grid point (the function's offset is irrelevant).
inline std::vector<double> dq_stencil(const QLattice& lattice, std::size_t k,
                                      int i) {
    // push unit vectors through dq on a window starting at k
    std::vector<double> out(std::size_t(i) + 1);
    for (int j = 0; j <= i; ++j) {
        std::vector<double> e(std::size_t(i) + 1, 0.0);
        e[std::size_t(j)] = 1.0;
        out[std::size_t(j)] =
            dq(LatticeFn(lattice, k, std::move(e)), std::size_t(i)).at(k);
    }
    return out;
}

} // namespace detail

struct OptimizeResult {
    LatticeFn x;
    double j;
    std::size_t iterations = 0;
};

/// Maximize the truncated functional over the free values
/// x(t_r)..x(t_{k_hi-1+r}), holding the seed prefix fixed.  Gradient
/// ascent with an adaptive (Barzilai-Borwein) trial step and Armijo
/// backtracking; the gradient is assembled analytically from the exact
/// D_q^i stencil coefficients.
inline OptimizeResult optimize_truncated(const ExprAst& L,
                                         const std::vector<double>& alphas,
                                         const ProblemSpec& spec,
                                         std::size_t max_iters = 10000) {
    const int r = L.order();
    const QLattice& lat = spec.lattice;
    const std::size_t k_hi = spec.k_hi;
    if (k_hi < std::size_t(r))
        throw Error("optimize_truncated needs k_hi >= r");
    if (k_hi + std::size_t(r) > lat.n_points())
        throw DomainTooShort("horizon exceeds the lattice");

    std::vector<double> prefix = seed_prefix(alphas, lat, r);
    const std::size_t total = std::size_t(r) + k_hi; // indices 0..k_hi-1+r
    const std::size_t free_lo = std::size_t(r);

    std::vector<double> vals(total, prefix.back());
    std::copy(prefix.begin(), prefix.end(), vals.begin());

    auto objective = [&](const std::vector<double>& v) {
        return functional_truncated(L, LatticeFn(lat, 0, v), k_hi);
    };

    // cache the per-(k,i) stencil coefficients; they depend on the
    // lattice only
    std::vector<std::vector<std::vector<double>>> stencils(k_hi);
    for (std::size_t k = 0; k < k_hi; ++k) {
        stencils[k].reserve(std::size_t(r) + 1);
        for (int i = 0; i <= r; ++i)
            stencils[k].push_back(detail::dq_stencil(lat, k, i));
    }
    std::vector<ExprAst> partials;
    partials.reserve(std::size_t(r) + 1);
    for (int i = 0; i <= r; ++i) partials.push_back(differentiate(L, i + 2));

    auto gradient = [&](const std::vector<double>& v) {
        LatticeFn x(lat, 0, v);
        auto rows = detail::angle_rows(x, r);
        std::vector<double> grad(total, 0.0);
        std::vector<double> args(std::size_t(r) + 2);
        const double qm1 = lat.ratio() - 1.0;
        for (std::size_t k = 0; k < k_hi; ++k) {
            args[0] = lat.point(k);
            for (int i = 0; i <= r; ++i)
                args[std::size_t(i) + 1] = rows[std::size_t(i)].at(k);
            const double w = qm1 * lat.point(k);
            for (int i = 0; i <= r; ++i) {
                const double g =
                    w * eval_expression(partials[std::size_t(i)], args);
                if (g == 0.0) continue;
                const auto& c = stencils[k][std::size_t(i)];
                const std::size_t base = k + std::size_t(r - i);
                for (int j = 0; j <= i; ++j) {
                    const std::size_t m = base + std::size_t(j);
                    if (m >= free_lo && m < total)
                        grad[m] += g * c[std::size_t(j)];
                }
            }
        }
        return grad;
    };

    double jv = objective(vals);
    std::vector<double> grad = gradient(vals);
    std::vector<double> prev_vals, prev_grad;
    std::size_t it = 0;
    for (; it < max_iters; ++it) {
        double gmax = 0.0;
        for (std::size_t m = free_lo; m < total; ++m)
            gmax = std::max(gmax, std::fabs(grad[m]));
        if (gmax <= spec.tol.grad_tol * std::max(1.0, std::fabs(jv))) break;

        // trial step: Barzilai-Borwein when history exists
        double step = 1.0 / (1.0 + gmax);
        if (!prev_vals.empty()) {
            double ss = 0.0, sy = 0.0;
            for (std::size_t m = free_lo; m < total; ++m) {
                const double s = vals[m] - prev_vals[m];
                const double y = prev_grad[m] - grad[m]; // descent of -J
                ss += s * s;
                sy += s * y;
            }
            if (sy > 0.0 && ss > 0.0)
                step = std::clamp(ss / sy, 1e-12, 1e12);
        }

        double gnorm2 = 0.0;
        for (std::size_t m = free_lo; m < total; ++m)
            gnorm2 += grad[m] * grad[m];

        std::vector<double> trial = vals;
        double jt = jv;
        bool moved = false;
        for (int bt = 0; bt < 80; ++bt) {
            for (std::size_t m = free_lo; m < total; ++m)
                trial[m] = vals[m] + step * grad[m];
            jt = objective(trial);
            if (jt >= jv + 1e-4 * step * gnorm2) { moved = true; break; }
            step *= 0.5;
            if (step < 1e-16) break;
        }
        if (!moved)
            throw LineSearchStall("no ascent step found above 1e-16");
        prev_vals = std::move(vals);
        prev_grad = std::move(grad);
        vals = std::move(trial);
        jv = jt;
        grad = gradient(vals);
    }
    return {LatticeFn(lat, 0, std::move(vals)), jv, it};
}

namespace detail {

/// Largest T' index whose full transversality stencil fits inside x, for
/// every k = 1..r at once.
inline std::optional<std::size_t> max_sample_index(const LatticeFn& x, int r) {
    const std::size_t need = 2 * std::size_t(r);
    if (x.size() < need) return std::nullopt;
    return x.last_index() + 1 - need; // = last - 2r + 1
}

} // namespace detail

/// Densest feasible T' sweep for a trajectory: every index from r up to
/// the largest stencil-feasible one.
inline std::vector<std::size_t> default_sample_indices(const LatticeFn& x,
                                                       int r) {
    auto hi = detail::max_sample_index(x, r);
    std::vector<std::size_t> idx;
    if (!hi) return idx;
    for (std::size_t k = std::max(x.first_index(), std::size_t(r)); k <= *hi;
         ++k)
        idx.push_back(k);
    return idx;
}

inline TrajectoryDiagnostics diagnose(const ExprAst& L, const LatticeFn& x,
                                      const ProblemSpec& spec) {
    const int r = L.order();
    if (x.size() < 2 * std::size_t(r) + 1)
        throw DomainTooShort("diagnose needs at least 2r+1 trajectory values");
    std::vector<std::size_t> samples = spec.sample_indices.empty()
                                           ? default_sample_indices(x, r)
                                           : spec.sample_indices;
    for (std::size_t idx : samples) {
        auto hi = detail::max_sample_index(x, r);
        if (!x.covers(idx) || !hi || idx > *hi)
            throw DomainTooShort("sample index " + std::to_string(idx) +
                                 " outside the stencil-feasible range");
    }

    TrajectoryDiagnostics diag{el_residual(L, x)};
    for (double v : diag.el.values())
        diag.el_max_abs = std::max(diag.el_max_abs, std::fabs(v));
    double x_scale = 1.0;
    for (double v : x.values()) x_scale = std::max(x_scale, std::fabs(v));
    diag.el_within_tol = diag.el_max_abs <= spec.tol.root_tol * x_scale;

    for (int k = 1; k <= r; ++k) {
        TransversalitySequence seq;
        seq.k = k;
        seq.sample_indices = samples;
        for (std::size_t idx : samples)
            seq.terms.push_back(transversality_term(L, x, k, idx));
        if (!seq.terms.empty()) seq.envelope = liminf_envelope(seq.terms);
        diag.transversality.push_back(std::move(seq));
    }

    diag.j_value = functional_truncated(L, x, spec.k_hi);
    return diag;
}

} // namespace qvar
