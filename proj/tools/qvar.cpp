// qvar: batch front end for q-calculus variational problems.
//
// Subcommands:
//   verify    randomized identity suites (derivative/integral rules,
//             composition lemma, higher-order integration by parts)
//   solve     extend a 2r-prefix along the Euler-Lagrange recurrence
//   optimize  maximize the truncated functional from the initial conditions
//   diagnose  EL residuals, transversality sweeps and functional value
//             for a stored trajectory
//
// Exit codes: 0 success, 1 validation error, 2 numeric failure.
// QVAR_LOG={error|info|debug} controls stderr verbosity.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qvar/problem_io.hpp"
#include "qvar/solver.hpp"
#include "qvar/verify.hpp"

namespace {

int log_level() {
    const char* env = std::getenv("QVAR_LOG");
    if (!env) return 0;
    std::string v(env);
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[info] " << msg << "\n";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw qvar::ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw qvar::ValidationError("cannot write file: " + path);
    out << content;
}

std::vector<double> parse_prefix(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw qvar::ValidationError("bad prefix value: " + cell);
        }
    }
    return out;
}

/// Default shooting prefix: the r seeded values plus r more chosen so
/// that D_q^j[x](a) = 0 for j = r..2r-1.
std::vector<double> default_prefix(const qvar::ProblemSpec& spec) {
    std::vector<double> padded = spec.alphas;
    padded.resize(2 * std::size_t(spec.order), 0.0);
    return qvar::seed_prefix(padded, spec.lattice, 2 * spec.order);
}

int run_verify(std::size_t trials, std::uint64_t seed) {
    auto suites = qvar::run_identity_suites(trials, seed);
    bool all_ok = true;
    for (const auto& s : suites) {
        std::cout << (s.failed == 0 ? "pass" : "FAIL") << "  " << s.name
                  << ": " << s.passed << " passed, " << s.failed
                  << " failed\n";
        if (s.failed != 0) all_ok = false;
    }
    return all_ok ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "q-calculus variational toolkit: Jackson derivatives, q-integrals, "
        "Euler-Lagrange recurrences and transversality diagnostics on the "
        "geometric lattice a*q^k.\n"
        "Lagrangians are expressions in t and u1..u{r+1}, where u1 = "
        "x(q^r t) and u{i+1} is the ith Jackson derivative of x composed "
        "with sigma^{r-i}."};
    app.require_subcommand(1);

    std::size_t trials = 1000;
    std::uint64_t seed = 42;
    auto* verify = app.add_subcommand("verify", "run randomized identity suites");
    verify->add_option("--trials", trials, "randomized trials per suite");
    verify->add_option("--seed", seed, "RNG seed");

    std::string problem_path, out_path, traj_path, prefix_csv;
    auto* solve = app.add_subcommand(
        "solve", "shoot the EL recurrence forward from a 2r-prefix");
    solve->add_option("file", problem_path, "problem JSON file")->required();
    solve->add_option("--prefix", prefix_csv,
                      "comma-separated x(t_0)..x(t_{2r-1}); default seeds "
                      "the initial conditions and zeroes the higher "
                      "derivatives at a");
    solve->add_option("--out", out_path, "output trajectory CSV")->required();

    auto* optimize = app.add_subcommand(
        "optimize", "maximize the truncated functional directly");
    optimize->add_option("file", problem_path, "problem JSON file")->required();
    optimize->add_option("--out", out_path, "output trajectory CSV")->required();

    auto* diagnose = app.add_subcommand(
        "diagnose", "diagnostics for a stored trajectory CSV");
    diagnose->add_option("file", problem_path, "problem JSON file")->required();
    diagnose->add_option("--traj", traj_path, "trajectory CSV")->required();
    diagnose->add_option("--out", out_path, "output diagnostics CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) return run_verify(trials, seed);

        qvar::ProblemSpec spec = qvar::load_problem(slurp(problem_path));
        if (solve->parsed()) {
            std::vector<double> prefix = prefix_csv.empty()
                                             ? default_prefix(spec)
                                             : parse_prefix(prefix_csv);
            if (prefix.size() != 2 * std::size_t(spec.order))
                throw qvar::ValidationError(
                    "--prefix needs exactly 2r = " +
                    std::to_string(2 * spec.order) + " values");
            info("shooting forward over " +
                 std::to_string(spec.lattice.n_points()) + " points");
            qvar::LatticeFn x =
                qvar::shoot_forward(spec.lagrangian, prefix, spec);
            auto diag = qvar::diagnose(spec.lagrangian, x, spec);
            write_file(out_path, qvar::emit_trajectory_csv(x, diag));
        } else if (optimize->parsed()) {
            info("optimizing " + std::to_string(spec.k_hi) + " free values");
            auto res =
                qvar::optimize_truncated(spec.lagrangian, spec.alphas, spec);
            info("converged after " + std::to_string(res.iterations) +
                 " iterations, J = " + std::to_string(res.j));
            auto diag = qvar::diagnose(spec.lagrangian, res.x, spec);
            write_file(out_path, qvar::emit_trajectory_csv(res.x, diag));
        } else if (diagnose->parsed()) {
            qvar::LatticeFn x =
                qvar::read_trajectory_csv(slurp(traj_path), spec.lattice);
            auto diag = qvar::diagnose(spec.lagrangian, x, spec);
            write_file(out_path, qvar::emit_trajectory_csv(x, diag));
        }
    } catch (const qvar::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const qvar::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const qvar::ArityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const qvar::Error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
