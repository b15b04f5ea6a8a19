#pragma once

/// Variational machinery on the q-lattice: the argument-packing operator
/// <x>(t), truncated functionals, first variation, the higher-order
/// q-integration-by-parts identity, Euler-Lagrange residuals,
/// transversality terms and weak-maximality gap envelopes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qvar/errors.hpp"
#include "qvar/expr.hpp"
#include "qvar/lattice.hpp"

namespace qvar {

/// Arguments of L at one lattice point: t plus
/// u_1 = (x o sigma^r)(t), u_{i+1} = D_q^i[x o sigma^{r-i}](t), i = 1..r.
struct ArgVector {
    double t;
    std::vector<double> u; // length r+1

    std::vector<double> packed() const {
        std::vector<double> a;
        a.reserve(u.size() + 1);
        a.push_back(t);
        a.insert(a.end(), u.begin(), u.end());
        return a;
    }
};

namespace detail {

/// Rows d_i = D_q^i[x o sigma^{r-i}], i = 0..r; row i is valid on
/// indices first..last-r.  Row 0 is x o sigma^r itself.
inline std::vector<LatticeFn> angle_rows(const LatticeFn& x, int r) {
    if (x.size() <= std::size_t(r))
        throw DomainTooShort("trajectory too short for order " +
                             std::to_string(r));
    std::vector<LatticeFn> rows;
    rows.reserve(std::size_t(r) + 1);
    for (int i = 0; i <= r; ++i)
        rows.push_back(dq(shift_sigma(x, std::size_t(r - i)), std::size_t(i)));
    return rows;
}

} // namespace detail

/// <x>(t_k) for a trajectory of order r; k is an absolute lattice index
/// and x must cover k..k+r.
inline ArgVector angle_args(const LatticeFn& x, int r, std::size_t k) {
    if (!x.covers(k) || !x.covers(k + std::size_t(r)))
        throw DomainTooShort("angle_args needs x on indices " +
                             std::to_string(k) + ".." +
                             std::to_string(k + std::size_t(r)));
    ArgVector av;
    av.t = x.lattice().point(k);
    av.u.resize(std::size_t(r) + 1);
    for (int i = 0; i <= r; ++i) {
        LatticeFn row = dq(shift_sigma(x, std::size_t(r - i)), std::size_t(i));
        av.u[std::size_t(i)] = row.at(k);
    }
    return av;
}

/// Truncated functional: q-integral over k = 0..k_hi of L<x>(t_k).
inline double functional_truncated(const ExprAst& L, const LatticeFn& x,
                                   std::size_t k_hi) {
    const int r = L.order();
    if (x.first_index() != 0 || x.last_index() + 1 < k_hi + std::size_t(r))
        throw DomainTooShort("functional_truncated needs x on 0.." +
                             std::to_string(k_hi + std::size_t(r) - 1));
    if (k_hi == 0) return 0.0;
    auto rows = detail::angle_rows(x, r);
    std::vector<double> args(std::size_t(r) + 2);
    std::vector<double> g(k_hi);
    for (std::size_t k = 0; k < k_hi; ++k) {
        args[0] = x.lattice().point(k);
        for (int i = 0; i <= r; ++i)
            args[std::size_t(i) + 1] = rows[std::size_t(i)].at(k);
        g[k] = eval_expression(L, args);
    }
    return q_integral(LatticeFn(x.lattice(), 0, std::move(g)), 0, k_hi);
}

/// Gateaux derivative of the truncated functional in direction eta:
/// q-integral over k = 0..k_hi of
///   sum_i dL/du_{i+1} <x>(t_k) * D_q^i[eta o sigma^{r-i}](t_k).
inline double first_variation(const ExprAst& L, const LatticeFn& x,
                              const LatticeFn& eta, std::size_t k_hi) {
    const int r = L.order();
    if (!(x.lattice() == eta.lattice()))
        throw MismatchedLattice("x and eta live on different lattices");
    if (x.first_index() != 0 || eta.first_index() != 0 ||
        x.last_index() + 1 < k_hi + std::size_t(r) ||
        eta.last_index() + 1 < k_hi + std::size_t(r))
        throw DomainTooShort("first_variation needs x, eta on 0.." +
                             std::to_string(k_hi + std::size_t(r) - 1));
    if (k_hi == 0) return 0.0;
    auto xrows = detail::angle_rows(x, r);
    auto erows = detail::angle_rows(eta, r);
    std::vector<ExprAst> partials;
    partials.reserve(std::size_t(r) + 1);
    for (int i = 0; i <= r; ++i)
        partials.push_back(differentiate(L, i + 2));

    std::vector<double> args(std::size_t(r) + 2);
    std::vector<double> g(k_hi);
    for (std::size_t k = 0; k < k_hi; ++k) {
        args[0] = x.lattice().point(k);
        for (int i = 0; i <= r; ++i)
            args[std::size_t(i) + 1] = xrows[std::size_t(i)].at(k);
        double acc = 0.0;
        for (int i = 0; i <= r; ++i)
            acc += eval_expression(partials[std::size_t(i)], args) *
                   erows[std::size_t(i)].at(k);
        g[k] = acc;
    }
    return q_integral(LatticeFn(x.lattice(), 0, std::move(g)), 0, k_hi);
}

struct IbpSides {
    double lhs;
    double rhs;
};

/// Both sides of the higher-order q-integration-by-parts identity,
/// computed fully independently:
///   lhs = int_{k_lo}^{k_hi} f * D_q^i[g o sigma^{r-i}]
///   rhs = (-1)^i (1/q)^{i(i-1)/2} int D_q^i[f] * g^{sigma^r}
///         + [ f * D_q^{i-1}[g o sigma^{r-i}]
///             + sum_{k=1}^{i-1} (-1)^k D_q^k[f] * D_q^{i-1-k}[g o sigma^{r-i+k}]
///               * prod_{j=1}^{k} (1/q)^{i-j} ]_{k_lo}^{k_hi}
inline IbpSides ibp_identity_sides(const LatticeFn& f, const LatticeFn& g,
                                   int r, int i, std::size_t k_lo,
                                   std::size_t k_hi) {
    if (!(f.lattice() == g.lattice()))
        throw MismatchedLattice("f and g live on different lattices");
    if (i < 1 || i > r) throw Error("ibp order i must satisfy 1 <= i <= r");
    if (k_lo >= k_hi) throw DomainTooShort("ibp needs k_lo < k_hi");
    const QLattice& lat = f.lattice();
    const double q = lat.ratio();
    const double qm1 = q - 1.0;

    // lhs
    LatticeFn dgi = dq(shift_sigma(g, std::size_t(r - i)), std::size_t(i));
    double lhs = 0.0;
    for (std::size_t k = k_lo; k < k_hi; ++k)
        lhs += lat.point(k) * f.at(k) * dgi.at(k);
    lhs *= qm1;

    // rhs integral term
    LatticeFn dfi = dq(f, std::size_t(i));
    LatticeFn gsr = shift_sigma(g, std::size_t(r));
    double integral = 0.0;
    for (std::size_t k = k_lo; k < k_hi; ++k)
        integral += lat.point(k) * dfi.at(k) * gsr.at(k);
    integral *= qm1;
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    integral *= sign * std::pow(1.0 / q, double(i) * double(i - 1) / 2.0);

    // boundary bracket
    auto bracket = [&](std::size_t idx) {
        double acc = f.at(idx) *
                     dq(shift_sigma(g, std::size_t(r - i)), std::size_t(i - 1))
                         .at(idx);
        double coeff = 1.0;
        for (int k = 1; k <= i - 1; ++k) {
            coeff *= std::pow(1.0 / q, double(i - k)); // prod_{j=1}^{k} (1/q)^{i-j}
            double term = dq(f, std::size_t(k)).at(idx) *
                          dq(shift_sigma(g, std::size_t(r - i + k)),
                             std::size_t(i - 1 - k))
                              .at(idx) *
                          coeff;
            acc += (k % 2 == 0) ? term : -term;
        }
        return acc;
    };
    double rhs = integral + bracket(k_hi) - bracket(k_lo);
    return {lhs, rhs};
}

/// Euler-Lagrange residual along x:
///   k -> sum_{i=0}^{r} (-1)^i (1/q)^{i(i-1)/2} D_q^i[dL/du_{i+1} <x>](t_k),
/// valid on the first size(x) - 2r indices of x.
inline LatticeFn el_residual(const ExprAst& L, const LatticeFn& x) {
    const int r = L.order();
    if (x.size() < 2 * std::size_t(r) + 1)
        throw DomainTooShort("el_residual needs at least 2r+1 trajectory "
                             "values, got " + std::to_string(x.size()));
    const QLattice& lat = x.lattice();
    const double q = lat.ratio();
    auto rows = detail::angle_rows(x, r);
    const std::size_t first = x.first_index();
    const std::size_t arg_len = x.size() - std::size_t(r); // valid angle range

    std::vector<double> args(std::size_t(r) + 2);
    const std::size_t out_len = x.size() - 2 * std::size_t(r);
    std::vector<double> out(out_len, 0.0);
    for (int i = 0; i <= r; ++i) {
        ExprAst partial = differentiate(L, i + 2);
        std::vector<double> h(arg_len);
        for (std::size_t j = 0; j < arg_len; ++j) {
            const std::size_t k = first + j;
            args[0] = lat.point(k);
            for (int m = 0; m <= r; ++m)
                args[std::size_t(m) + 1] = rows[std::size_t(m)].at(k);
            h[j] = eval_expression(partial, args);
        }
        LatticeFn dh = dq(LatticeFn(lat, first, std::move(h)), std::size_t(i));
        const double sign = (i % 2 == 0) ? 1.0 : -1.0;
        const double coeff =
            sign * std::pow(1.0 / q, double(i) * double(i - 1) / 2.0);
        for (std::size_t j = 0; j < out_len; ++j)
            out[j] += coeff * dh.at(first + j);
    }
    return LatticeFn(lat, first, std::move(out));
}

/// The k bracketed factors of the kth transversality condition at T' = t_idx:
///   term 1:    dL/d(arg r+2-(k-1)) <x>(T')
///   term i+1:  (-1)^i D_q^i[dL/d(arg r+2-(k-1)+i) <x>](T') * Psi_i
/// with Psi_i = prod_{j=1}^{i} (1/q)^{r-(k-1)+(j-1)}.
inline std::vector<double> transversality_bracket(const ExprAst& L,
                                                  const LatticeFn& x, int k,
                                                  std::size_t idx) {
    const int r = L.order();
    if (k < 1 || k > r)
        throw Error("transversality index k must satisfy 1 <= k <= r");
    const QLattice& lat = x.lattice();
    const double q = lat.ratio();
    auto rows = detail::angle_rows(x, r);
    const std::size_t first = x.first_index();
    const std::size_t arg_len = x.size() - std::size_t(r);

    auto partial_fn = [&](int arg_index) {
        ExprAst partial = differentiate(L, arg_index);
        std::vector<double> args(std::size_t(r) + 2);
        std::vector<double> h(arg_len);
        for (std::size_t j = 0; j < arg_len; ++j) {
            const std::size_t kk = first + j;
            args[0] = lat.point(kk);
            for (int m = 0; m <= r; ++m)
                args[std::size_t(m) + 1] = rows[std::size_t(m)].at(kk);
            h[j] = eval_expression(partial, args);
        }
        return LatticeFn(lat, first, std::move(h));
    };

    std::vector<double> terms;
    terms.reserve(std::size_t(k));
    terms.push_back(partial_fn(r + 2 - (k - 1)).at(idx));
    double psi = 1.0;
    for (int i = 1; i <= k - 1; ++i) {
        psi *= std::pow(1.0 / q, double(r - (k - 1) + (i - 1)));
        double term = dq(partial_fn(r + 2 - (k - 1) + i), std::size_t(i)).at(idx) * psi;
        terms.push_back((i % 2 == 0) ? term : -term);
    }
    return terms;
}

/// The kth transversality expression at T' = t_idx: the bracket sum times
/// D_q^{r-k}[x o sigma^{k-1}](T').
inline double transversality_term(const ExprAst& L, const LatticeFn& x, int k,
                                  std::size_t idx) {
    const int r = L.order();
    auto terms = transversality_bracket(L, x, k, idx);
    double acc = 0.0;
    for (double t : terms) acc += t;
    LatticeFn factor =
        dq(shift_sigma(x, std::size_t(k - 1)), std::size_t(r - k));
    return acc * factor.at(idx);
}

/// Suffix minima: env[j] = min(seq[j..end]); the finite-window stand-in
/// for inf_{T' >= T}.
inline std::vector<double> liminf_envelope(const std::vector<double>& seq) {
    if (seq.empty()) throw Error("liminf_envelope needs a non-empty sequence");
    std::vector<double> env(seq.size());
    double m = seq.back();
    for (std::size_t j = seq.size(); j-- > 0;) {
        m = std::min(m, seq[j]);
        env[j] = m;
    }
    return env;
}

/// One transversality condition evaluated along a T' sweep.
struct TransversalitySequence {
    int k = 0;
    std::vector<std::size_t> sample_indices;
    std::vector<double> terms;
    std::vector<double> envelope;
};

/// Window report for Brock weak maximality of x_star against one
/// challenger x: terms[j] is the truncated objective gap at horizon
/// sample_indices[j], envelope its suffix minima.  x_star is consistent
/// with weak maximality on this window iff the envelope stays <= gap_tol.
struct GapReport {
    std::vector<std::size_t> sample_indices;
    std::vector<double> terms;
    std::vector<double> envelope;
};

inline GapReport weak_maximality_gap(const ExprAst& L,
                                     const LatticeFn& x_star,
                                     const LatticeFn& x,
                                     const std::vector<std::size_t>& sample_indices) {
    if (!(x_star.lattice() == x.lattice()))
        throw MismatchedLattice("trajectories live on different lattices");
    if (sample_indices.empty())
        throw Error("weak_maximality_gap needs at least one sample index");
    GapReport rep;
    rep.sample_indices = sample_indices;
    rep.terms.reserve(sample_indices.size());
    for (std::size_t idx : sample_indices)
        rep.terms.push_back(functional_truncated(L, x, idx) -
                            functional_truncated(L, x_star, idx));
    rep.envelope = liminf_envelope(rep.terms);
    return rep;
}

} // namespace qvar
