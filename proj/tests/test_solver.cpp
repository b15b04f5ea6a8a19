#include <doctest.h>

#include <cmath>
#include <random>

#include "qvar/solver.hpp"
#include "helpers.hpp"

using namespace qvar;

namespace {

ProblemSpec basic_spec(ExprAst L, std::vector<double> alphas,
                       QLattice lat, std::size_t k_hi) {
    return ProblemSpec{lat, L.order(), std::move(L), std::move(alphas), k_hi,
                       {}, Tolerances{}};
}

} // namespace

TEST_CASE("seed_prefix solves the initial conditions") {
    QLattice lat = make_lattice(1.0, 2.0, 10);

    CHECK(seed_prefix({3.5}, lat, 1) == std::vector<double>{3.5});
    CHECK(seed_prefix({1.0, 3.0}, lat, 2) == std::vector<double>{1.0, 4.0});
    CHECK(seed_prefix({0.0, 0.0, 0.0}, lat, 3) ==
          std::vector<double>{0.0, 0.0, 0.0});

    // D_q^j of the prefix reproduces alpha_j at the origin
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    QLattice lat2 = make_lattice(0.5, 1.5, 12);
    for (int trial = 0; trial < 30; ++trial) {
        int r = 1 + int(rng() % 4);
        std::vector<double> alphas(std::size_t(r), 0.0);
        for (double& a : alphas) a = d(rng);
        std::vector<double> prefix = seed_prefix(alphas, lat2, r);
        LatticeFn x(lat2, 0, prefix);
        for (int j = 0; j < r; ++j) {
            double got = dq(x, std::size_t(j)).at(0);
            CHECK(std::fabs(got - alphas[std::size_t(j)]) <=
                  1e-12 * std::max(1.0, std::fabs(alphas[std::size_t(j)])));
        }
    }
}

TEST_CASE("shoot_forward closed forms") {
    QLattice lat = make_lattice(1.0, 2.0, 10);
    ExprAst L = parse_expression("-(u2^2)", 1);
    ProblemSpec spec = basic_spec(L, {1.0}, lat, 4);

    LatticeFn flat = shoot_forward(spec.lagrangian, {1.0, 1.0}, spec);
    CHECK(flat.size() == 10);
    for (double v : flat.values()) CHECK(v == doctest::Approx(1.0));

    LatticeFn ramp = shoot_forward(spec.lagrangian, {0.0, 1.0}, spec);
    for (std::size_t k = 0; k < 10; ++k)
        CHECK(ramp.at(k) == doctest::Approx(lat.point(k) - 1.0));

    ExprAst linear = parse_expression("u2", 1);
    ProblemSpec degen = basic_spec(linear, {1.0}, lat, 4);
    CHECK_THROWS_AS(shoot_forward(degen.lagrangian, {1.0, 1.0}, degen),
                    DegenerateLagrangian);
}

TEST_CASE("shooting consistency with diagnose") {
    // shooting the EL recurrence forward amplifies generic prefixes by
    // ~t^{2r} per step, so keep the lattice short enough that the solved
    // values stay well inside double precision
    std::mt19937_64 rng(67);
    QLattice lat = make_lattice(1.0, 2.0, 8);
    for (int trial = 0; trial < 10; ++trial) {
        int r = 1 + int(rng() % 2);
        ExprAst L = qvar_test::random_lagrangian(r, rng, 0.1);
        ProblemSpec spec =
            basic_spec(L, std::vector<double>(std::size_t(r), 0.5), lat, 4);
        std::vector<double> prefix(2 * std::size_t(r), 0.5);
        LatticeFn x = shoot_forward(spec.lagrangian, prefix, spec);
        auto diag = diagnose(spec.lagrangian, x, spec);
        double scale = 1.0;
        for (double v : x.values()) scale = std::max(scale, std::fabs(v));
        CHECK(diag.el_max_abs <= spec.tol.root_tol * scale * 10);
    }
}

TEST_CASE("optimize_truncated closed forms") {
    QLattice lat = make_lattice(1.0, 2.0, 12);

    ExprAst L = parse_expression("-(u2^2)", 1);
    auto res = optimize_truncated(L, {1.0}, basic_spec(L, {1.0}, lat, 4));
    for (double v : res.x.values()) CHECK(v == doctest::Approx(1.0));
    CHECK(std::fabs(res.j) < 1e-10);

    auto zero = optimize_truncated(L, {0.0}, basic_spec(L, {0.0}, lat, 3));
    for (double v : zero.x.values()) CHECK(v == doctest::Approx(0.0));
    CHECK(zero.j == 0.0);

    ExprAst track = parse_expression("-((u1 - 2*t)^2)", 1);
    auto tr = optimize_truncated(track, {1.0}, basic_spec(track, {1.0}, lat, 4));
    for (std::size_t k = 0; k <= tr.x.last_index(); ++k)
        CHECK(tr.x.at(k) == doctest::Approx(lat.point(k)).epsilon(1e-6));
    CHECK(std::fabs(tr.j) < 1e-10);
}

TEST_CASE("optimizer critical points zero the interior EL residual") {
    std::mt19937_64 rng(71);
    QLattice lat = make_lattice(1.0, 2.0, 14);
    for (int trial = 0; trial < 10; ++trial) {
        int r = 1 + int(rng() % 2);
        std::size_t k_hi = 6;
        ExprAst L = qvar_test::random_lagrangian(r, rng, 0.05);
        ProblemSpec spec =
            basic_spec(L, std::vector<double>(std::size_t(r), 0.3), lat, k_hi);
        auto res = optimize_truncated(spec.lagrangian, spec.alphas, spec);
        LatticeFn el = el_residual(spec.lagrangian, res.x);
        double scale = std::max(1.0, std::fabs(res.j));
        for (std::size_t k = std::size_t(r);
             k + std::size_t(r) + 1 <= k_hi; ++k)
            CHECK(std::fabs(el.at(k)) <=
                  100 * spec.tol.grad_tol * scale);
    }
}

TEST_CASE("scaling the Lagrangian scales J but not the argmax") {
    QLattice lat = make_lattice(1.0, 2.0, 12);
    ExprAst L = parse_expression("-((u1 - 2*t)^2)", 1);
    ExprAst L3 = parse_expression("-3*((u1 - 2*t)^2)", 1);
    auto a = optimize_truncated(L, {1.0}, basic_spec(L, {1.0}, lat, 4));
    auto b = optimize_truncated(L3, {1.0}, basic_spec(L3, {1.0}, lat, 4));
    for (std::size_t k = 0; k <= a.x.last_index(); ++k)
        CHECK(a.x.at(k) == doctest::Approx(b.x.at(k)).epsilon(1e-6));
    CHECK(b.j == doctest::Approx(3.0 * a.j).epsilon(1e-8));
}

TEST_CASE("diagnose on closed-form extremals") {
    QLattice lat = make_lattice(1.0, 2.0, 12);
    ExprAst L = parse_expression("-(u2^2)", 1);
    ProblemSpec spec = basic_spec(L, {1.0}, lat, 4);

    LatticeFn one = sample(lat, 0, 12, [](double) { return 1.0; });
    auto diag = diagnose(spec.lagrangian, one, spec);
    CHECK(diag.el_max_abs == 0.0);
    CHECK(diag.j_value == 0.0);
    REQUIRE(diag.transversality.size() == 1);
    for (double v : diag.transversality[0].envelope) CHECK(v == 0.0);

    LatticeFn ident = sample(lat, 0, 12, [](double t) { return t; });
    auto d2 = diagnose(spec.lagrangian, ident, spec);
    CHECK(d2.el_max_abs <= 1e-12);
    const auto& seq = d2.transversality[0];
    for (std::size_t j = 0; j < seq.sample_indices.size(); ++j)
        CHECK(seq.terms[j] ==
              doctest::Approx(-2.0 * lat.point(seq.sample_indices[j])));
    // envelope dives with the horizon: a non-optimal extremal
    CHECK(seq.envelope.back() <= -2.0 * lat.point(seq.sample_indices.back()) + 1e-9);

    LatticeFn tiny(lat, 0, {1.0, 1.0});
    CHECK_THROWS_AS(diagnose(spec.lagrangian, tiny, spec), DomainTooShort);
}
