#include <doctest.h>

#include <cmath>
#include <random>

#include "qvar/solver.hpp"
#include "qvar/variational.hpp"
#include "helpers.hpp"

using namespace qvar;

TEST_CASE("angle_args packs shifts and derivatives") {
    QLattice lat = make_lattice(1.0, 2.0, 8);

    LatticeFn sq = sample(lat, 0, 8, [](double t) { return t * t; });
    ArgVector a = angle_args(sq, 1, 0);
    CHECK(a.t == 1.0);
    CHECK(a.u[0] == 4.0);                  // x(sigma(1)) = x(2)
    CHECK(a.u[1] == doctest::Approx(3.0)); // D_q[x](1)

    LatticeFn c = sample(lat, 0, 8, [](double) { return 2.5; });
    ArgVector ac = angle_args(c, 1, 3);
    CHECK(ac.t == lat.point(3));
    CHECK(ac.u[0] == 2.5);
    CHECK(ac.u[1] == 0.0);

    LatticeFn ident = sample(lat, 0, 8, [](double t) { return t; });
    ArgVector a2 = angle_args(ident, 2, 0);
    CHECK(a2.t == 1.0);
    CHECK(a2.u[0] == 4.0);                  // x(sigma^2(1))
    CHECK(a2.u[1] == doctest::Approx(2.0)); // D_q[x o sigma](1)
    CHECK(a2.u[2] == doctest::Approx(0.0)); // D_q^2[x](1)

    CHECK_THROWS_AS(angle_args(ident, 2, 7), DomainTooShort);
}

TEST_CASE("truncated functional hand values") {
    QLattice lat = make_lattice(1.0, 2.0, 8);
    LatticeFn ident = sample(lat, 0, 8, [](double t) { return t; });

    CHECK(functional_truncated(parse_expression("u2^2", 1), ident, 2) ==
          doctest::Approx(3.0));
    CHECK(functional_truncated(parse_expression("u1", 1), ident, 2) ==
          doctest::Approx(10.0));

    LatticeFn c = sample(lat, 0, 8, [](double) { return 4.0; });
    CHECK(functional_truncated(parse_expression("-(u2^2)", 1), c, 5) == 0.0);
}

TEST_CASE("first variation hand values") {
    QLattice lat = make_lattice(1.0, 2.0, 8);
    ExprAst L = parse_expression("-(u2^2)", 1);

    LatticeFn one = sample(lat, 0, 8, [](double) { return 1.0; });
    LatticeFn eta = sample(lat, 0, 8, [](double t) { return t - 1.0; });
    CHECK(first_variation(L, one, eta, 3) == doctest::Approx(0.0));

    LatticeFn ident = sample(lat, 0, 8, [](double t) { return t; });
    CHECK(first_variation(L, ident, eta, 2) == doctest::Approx(-6.0));

    LatticeFn zero = sample(lat, 0, 8, [](double) { return 0.0; });
    CHECK(first_variation(L, ident, zero, 3) == 0.0);
}

TEST_CASE("integration by parts identity hand case") {
    QLattice lat = make_lattice(1.0, 2.0, 8);
    LatticeFn ident = sample(lat, 0, 8, [](double t) { return t; });
    auto sides = ibp_identity_sides(ident, ident, 1, 1, 0, 2);
    CHECK(sides.lhs == doctest::Approx(5.0));
    CHECK(sides.rhs == doctest::Approx(5.0));

    LatticeFn zero = sample(lat, 0, 8, [](double) { return 0.0; });
    auto z = ibp_identity_sides(zero, ident, 2, 1, 0, 2);
    CHECK(z.lhs == 0.0);
    CHECK(z.rhs == 0.0);
}

TEST_CASE("integration by parts identity on random data") {
    std::mt19937_64 rng(101);
    QLattice lat = make_lattice(1.0, 1.5, 30);
    for (int trial = 0; trial < 50; ++trial) {
        LatticeFn f = qvar_test::random_fn(lat, rng);
        LatticeFn g = qvar_test::random_fn(lat, rng);
        for (int r = 1; r <= 4; ++r)
            for (int i = 1; i <= r; ++i) {
                auto s = ibp_identity_sides(f, g, r, i, 0, 20);
                double scale = std::max({1.0, std::fabs(s.lhs),
                                         std::fabs(s.rhs)});
                CHECK(std::fabs(s.lhs - s.rhs) <= 1e-12 * scale);
            }
    }
}

TEST_CASE("Euler-Lagrange residual closed forms") {
    QLattice lat = make_lattice(1.0, 2.0, 10);
    ExprAst L = parse_expression("-(u2^2)", 1);

    LatticeFn ident = sample(lat, 0, 10, [](double t) { return t; });
    LatticeFn r1 = el_residual(L, ident);
    for (double v : r1.values()) CHECK(v == doctest::Approx(0.0));

    LatticeFn sq = sample(lat, 0, 10, [](double t) { return t * t; });
    LatticeFn r2 = el_residual(L, sq);
    for (double v : r2.values())
        CHECK(v == doctest::Approx(6.0)); // 2 (q+1)

    ExprAst L2 = parse_expression("-(u3^2)", 2);
    LatticeFn r3 = el_residual(L2, ident);
    for (double v : r3.values()) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("transversality terms") {
    QLattice lat = make_lattice(1.0, 2.0, 10);
    ExprAst L = parse_expression("-(u2^2)", 1);

    LatticeFn one = sample(lat, 0, 10, [](double) { return 1.0; });
    for (std::size_t idx = 1; idx <= 6; ++idx)
        CHECK(transversality_term(L, one, 1, idx) == doctest::Approx(0.0));

    LatticeFn ident = sample(lat, 0, 10, [](double t) { return t; });
    for (std::size_t idx = 1; idx <= 6; ++idx)
        CHECK(transversality_term(L, ident, 1, idx) ==
              doctest::Approx(-2.0 * lat.point(idx)));

    ExprAst L2 = parse_expression("-(u3^2)", 2);
    for (std::size_t idx = 2; idx <= 4; ++idx)
        CHECK(transversality_term(L2, ident, 1, idx) == doctest::Approx(0.0));
}

TEST_CASE("transversality bracket has exactly k terms") {
    std::mt19937_64 rng(31);
    QLattice lat = make_lattice(1.0, 2.0, 24);
    for (int r = 1; r <= 4; ++r) {
        ExprAst L = qvar_test::random_lagrangian(r, rng);
        LatticeFn x = qvar_test::random_fn(lat, rng);
        for (int k = 1; k <= r; ++k)
            CHECK(transversality_bracket(L, x, k, std::size_t(r)).size() ==
                  std::size_t(k));
    }
}

TEST_CASE("r=1 transversality reduces to dL/du2 times x") {
    std::mt19937_64 rng(37);
    QLattice lat = make_lattice(1.0, 2.0, 12);
    for (int trial = 0; trial < 30; ++trial) {
        ExprAst L = qvar_test::random_lagrangian(1, rng);
        LatticeFn x = qvar_test::random_fn(lat, rng);
        ExprAst d3 = differentiate(L, 3);
        for (std::size_t idx = 1; idx <= 9; ++idx) {
            ArgVector a = angle_args(x, 1, idx);
            double expected = eval_expression(d3, a.packed()) * x.at(idx);
            double got = transversality_term(L, x, 1, idx);
            CHECK(std::fabs(got - expected) <=
                  4e-16 * std::max(1.0, std::fabs(expected)));
        }
    }
}

TEST_CASE("r=1 residual reduces to dL/du1<x> - D_q[dL/du2<x>]") {
    std::mt19937_64 rng(41);
    QLattice lat = make_lattice(1.0, 2.0, 12);
    for (int trial = 0; trial < 20; ++trial) {
        ExprAst L = qvar_test::random_lagrangian(1, rng);
        LatticeFn x = qvar_test::random_fn(lat, rng);
        ExprAst d2 = differentiate(L, 2), d3 = differentiate(L, 3);
        std::vector<double> h2, h3;
        for (std::size_t k = 0; k + 1 <= lat.last_index(); ++k) {
            ArgVector a = angle_args(x, 1, k);
            h2.push_back(eval_expression(d2, a.packed()));
            h3.push_back(eval_expression(d3, a.packed()));
        }
        LatticeFn dh3 = dq(LatticeFn(lat, 0, h3));
        LatticeFn res = el_residual(L, x);
        for (std::size_t k = 0; k <= res.last_index(); ++k) {
            double expected = h2[k] - dh3.at(k);
            CHECK(std::fabs(res.at(k) - expected) <=
                  1e-12 * std::max(1.0, std::fabs(expected)));
        }
    }
}

TEST_CASE("first variation equals finite difference of the functional") {
    std::mt19937_64 rng(43);
    QLattice lat = make_lattice(1.0, 1.5, 14);
    const double eps = 1e-6;
    for (int trial = 0; trial < 30; ++trial) {
        int r = 1 + int(rng() % 3);
        ExprAst L = qvar_test::random_lagrangian(r, rng);
        LatticeFn x = qvar_test::random_fn(lat, rng);
        LatticeFn eta = qvar_test::random_fn(lat, rng);
        std::size_t k_hi = 6;
        double lhs = first_variation(L, x, eta, k_hi);
        std::vector<double> up = x.values(), dn = x.values();
        for (std::size_t j = 0; j < up.size(); ++j) {
            up[j] += eps * eta.values()[j];
            dn[j] -= eps * eta.values()[j];
        }
        double fd = (functional_truncated(L, LatticeFn(lat, 0, up), k_hi) -
                     functional_truncated(L, LatticeFn(lat, 0, dn), k_hi)) /
                    (2 * eps);
        CHECK(std::fabs(lhs - fd) <= 1e-5 * std::max(1.0, std::fabs(lhs)));
    }
}

TEST_CASE("first variation equals residual pairing for bump variations") {
    std::mt19937_64 rng(47);
    QLattice lat = make_lattice(1.0, 1.5, 20);
    for (int trial = 0; trial < 30; ++trial) {
        int r = 1 + int(rng() % 3);
        std::size_t k_hi = 8;
        ExprAst L = qvar_test::random_lagrangian(r, rng);
        LatticeFn x = qvar_test::random_fn(lat, rng);
        LatticeFn eta = qvar_test::bump_eta(lat, r, k_hi, rng);

        double lhs = first_variation(L, x, eta, k_hi);
        LatticeFn res = el_residual(L, x);
        std::vector<double> g(k_hi);
        for (std::size_t k = 0; k < k_hi; ++k)
            g[k] = res.at(k) * eta.at(k + std::size_t(r));
        double rhs = q_integral(LatticeFn(lat, 0, std::move(g)), 0, k_hi);
        double scale = std::max({1.0, std::fabs(lhs), std::fabs(rhs)});
        CHECK(std::fabs(lhs - rhs) <= 1e-9 * scale);
    }
}

TEST_CASE("liminf envelope is the suffix minimum") {
    CHECK(liminf_envelope({3, 1, 2}) == std::vector<double>{1, 1, 2});
    CHECK(liminf_envelope({5}) == std::vector<double>{5});
    CHECK(liminf_envelope({-1, -2, -3}) == std::vector<double>{-3, -3, -3});

    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> d(-10, 10);
    std::vector<double> seq(40);
    for (double& v : seq) v = d(rng);
    auto env = liminf_envelope(seq);
    for (std::size_t j = 0; j < seq.size(); ++j) {
        CHECK(env[j] <= seq[j]);
        if (j + 1 < seq.size())
            CHECK(env[j] == std::min(seq[j], env[j + 1]));
    }
}

TEST_CASE("weak maximality gap report") {
    QLattice lat = make_lattice(1.0, 2.0, 10);
    ExprAst L = parse_expression("-(u2^2)", 1);
    LatticeFn one = sample(lat, 0, 10, [](double) { return 1.0; });
    LatticeFn ident = sample(lat, 0, 10, [](double t) { return t; });

    auto same = weak_maximality_gap(L, one, one, {1, 2, 3});
    for (double v : same.terms) CHECK(v == 0.0);
    for (double v : same.envelope) CHECK(v == 0.0);

    auto rep = weak_maximality_gap(L, one, ident, {1, 2, 3});
    CHECK(rep.terms == std::vector<double>{-1, -3, -7});
    CHECK(rep.envelope == std::vector<double>{-7, -7, -7});

    auto swapped = weak_maximality_gap(L, ident, one, {1, 2, 3});
    CHECK(swapped.terms == std::vector<double>{1, 3, 7});
    CHECK(swapped.envelope.back() > 0.0);

    QLattice other = make_lattice(1.0, 3.0, 10);
    LatticeFn onb = sample(other, 0, 10, [](double) { return 1.0; });
    CHECK_THROWS_AS(weak_maximality_gap(L, one, onb, {1, 2}),
                    MismatchedLattice);
}
