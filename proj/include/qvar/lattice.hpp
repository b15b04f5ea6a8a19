#pragma once

/// Geometric lattice Q = {a*q^k}, lattice-attached functions, the Jackson
/// q-difference operator, q-integrals and improper q-integrals.

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qvar/errors.hpp"

namespace qvar {

/// The geometric grid t_k = a*q^k, k = 0..N, with ratio q > 1.
/// Points are always recomputed from (a, q, k) so that t_{k+1}/t_k stays
/// testably equal to q; nothing is accumulated.
class QLattice {
public:
    QLattice(double base, double ratio, std::size_t n_points)
        : base_(base), ratio_(ratio), n_points_(n_points) {
        if (!(ratio > 1.0))
            throw InvalidRatio("lattice ratio q must satisfy q > 1, got " +
                               std::to_string(ratio));
        if (!(base > 0.0) || !std::isfinite(base))
            throw InvalidBase("lattice base a must be positive, got " +
                              std::to_string(base));
        if (n_points < 1)
            throw InvalidBase("lattice needs at least one point");
        if (!std::isfinite(base * std::pow(ratio, double(n_points - 1))))
            throw Overflow("last lattice point a*q^N overflows double");
    }

    double base() const { return base_; }
    double ratio() const { return ratio_; }
    std::size_t n_points() const { return n_points_; }
    std::size_t last_index() const { return n_points_ - 1; }

    /// t_k = a*q^k
    double point(std::size_t k) const {
        return base_ * std::pow(ratio_, double(k));
    }

    friend bool operator==(const QLattice& l, const QLattice& r) {
        return l.base_ == r.base_ && l.ratio_ == r.ratio_ &&
               l.n_points_ == r.n_points_;
    }

private:
    double base_;
    double ratio_;
    std::size_t n_points_;
};

inline QLattice make_lattice(double base, double ratio, std::size_t n_points) {
    return QLattice(base, ratio, n_points);
}

/// Real values attached to a contiguous index range of a QLattice:
/// values()[j] = f(t_{offset+j}).  Immutable after construction.
class LatticeFn {
public:
    LatticeFn(QLattice lattice, std::size_t offset, std::vector<double> values)
        : lattice_(std::move(lattice)), offset_(offset),
          values_(std::move(values)) {
        if (values_.empty())
            throw DomainTooShort("lattice function needs at least one value");
        if (offset_ + values_.size() - 1 > lattice_.last_index())
            throw DomainTooShort("lattice function exceeds the lattice");
        for (double v : values_)
            if (!std::isfinite(v))
                throw Error("lattice function values must be finite");
    }

    const QLattice& lattice() const { return lattice_; }
    std::size_t offset() const { return offset_; }
    std::size_t size() const { return values_.size(); }
    std::size_t first_index() const { return offset_; }
    std::size_t last_index() const { return offset_ + values_.size() - 1; }
    const std::vector<double>& values() const { return values_; }

    bool covers(std::size_t k) const {
        return k >= first_index() && k <= last_index();
    }

    /// Value at absolute lattice index k.
    double at(std::size_t k) const {
        if (!covers(k))
            throw DomainTooShort("lattice index " + std::to_string(k) +
                                 " outside function domain [" +
                                 std::to_string(first_index()) + ", " +
                                 std::to_string(last_index()) + "]");
        return values_[k - offset_];
    }

private:
    QLattice lattice_;
    std::size_t offset_;
    std::vector<double> values_;
};

/// Samples g(t_k) over k = offset..offset+count-1.
template <class F>
LatticeFn sample(const QLattice& lattice, std::size_t offset,
                 std::size_t count, F&& g) {
    std::vector<double> v(count);
    for (std::size_t j = 0; j < count; ++j)
        v[j] = g(lattice.point(offset + j));
    return LatticeFn(lattice, offset, std::move(v));
}

/// i-fold Jackson q-derivative D_q^i[f].  Each application maps
/// f(t_k) to (f(t_{k+1}) - f(t_k)) / ((q-1)*t_k); the result keeps the
/// offset and loses one point per order.
inline LatticeFn dq(const LatticeFn& f, std::size_t order = 1) {
    if (f.size() <= order)
        throw DomainTooShort("q-derivative of order " + std::to_string(order) +
                             " needs more than " + std::to_string(order) +
                             " values, got " + std::to_string(f.size()));
    std::vector<double> v = f.values();
    const QLattice& lat = f.lattice();
    const double qm1 = lat.ratio() - 1.0;
    for (std::size_t i = 0; i < order; ++i) {
        for (std::size_t j = 0; j + 1 < v.size(); ++j)
            v[j] = (v[j + 1] - v[j]) / (qm1 * lat.point(f.offset() + j));
        v.pop_back();
    }
    return LatticeFn(lat, f.offset(), std::move(v));
}

/// f composed with sigma^j, sigma(t) = q t: result value at index k is
/// f(t_{k+j}), with the original offset.
inline LatticeFn shift_sigma(const LatticeFn& f, std::size_t j) {
    if (f.size() <= j)
        throw DomainTooShort("sigma-shift by " + std::to_string(j) +
                             " needs more than " + std::to_string(j) +
                             " values, got " + std::to_string(f.size()));
    std::vector<double> v(f.values().begin() + std::ptrdiff_t(j),
                          f.values().end());
    return LatticeFn(f.lattice(), f.offset(), std::move(v));
}

/// q-integral from t_{k_lo} to t_{k_hi}: (q-1) * sum_{k=k_lo}^{k_hi-1} t_k f(t_k).
inline double q_integral(const LatticeFn& f, std::size_t k_lo,
                         std::size_t k_hi) {
    if (k_lo > k_hi)
        throw DomainTooShort("q-integral bounds out of order");
    if (k_lo == k_hi) return 0.0;
    if (!f.covers(k_lo) || !f.covers(k_hi - 1))
        throw DomainTooShort("q-integral range [" + std::to_string(k_lo) +
                             ", " + std::to_string(k_hi) +
                             ") not covered by the function");
    const QLattice& lat = f.lattice();
    double acc = 0.0;
    for (std::size_t k = k_lo; k < k_hi; ++k)
        acc += lat.point(k) * f.at(k);
    return (lat.ratio() - 1.0) * acc;
}

enum class IntegralStatus { Converged, Diverged, Undetermined };

struct ImproperIntegral {
    double value;
    IntegralStatus status;
};

inline const char* to_string(IntegralStatus s) {
    switch (s) {
        case IntegralStatus::Converged: return "Converged";
        case IntegralStatus::Diverged: return "Diverged";
        default: return "Undetermined";
    }
}

/// Improper q-integral over the whole lattice, judged from the tail of the
/// partial sums P_n = q_integral(f, 0, n).  Converged when every increment
/// in the trailing window is below tail_tol; Diverged when the window's
/// increments keep one sign, stay above tail_tol in magnitude and do not
/// shrink.  Anything else is an honest Undetermined.
inline ImproperIntegral improper_q_integral(const LatticeFn& f,
                                            double tail_tol,
                                            std::size_t tail_window) {
    if (tail_window < 1)
        throw Error("tail_window must be >= 1");
    if (f.first_index() != 0 || f.last_index() != f.lattice().last_index())
        throw DomainTooShort("improper q-integral needs f on the full lattice");
    const QLattice& lat = f.lattice();
    const double qm1 = lat.ratio() - 1.0;
    const std::size_t n_inc = f.size() >= 1 ? f.size() - 1 : 0;

    std::vector<double> inc(n_inc);
    double total = 0.0;
    for (std::size_t k = 0; k < n_inc; ++k) {
        inc[k] = qm1 * lat.point(k) * f.at(k);
        total += inc[k];
    }
    if (n_inc == 0) return {0.0, IntegralStatus::Converged};

    const std::size_t w = std::min(tail_window, n_inc);
    const std::size_t start = n_inc - w;

    bool small = true;
    for (std::size_t k = start; k < n_inc; ++k)
        if (!(std::fabs(inc[k]) < tail_tol)) small = false;
    if (small) return {total, IntegralStatus::Converged};

    bool away = true, same_sign = true, nondecreasing = true;
    const double sign0 = inc[start] > 0 ? 1.0 : (inc[start] < 0 ? -1.0 : 0.0);
    for (std::size_t k = start; k < n_inc; ++k) {
        if (!(std::fabs(inc[k]) >= tail_tol)) away = false;
        if (sign0 == 0.0 || inc[k] * sign0 <= 0.0) same_sign = false;
        if (k > start && std::fabs(inc[k]) < std::fabs(inc[k - 1]))
            nondecreasing = false;
    }
    if (away && same_sign && nondecreasing)
        return {total, IntegralStatus::Diverged};
    return {total, IntegralStatus::Undetermined};
}

} // namespace qvar
