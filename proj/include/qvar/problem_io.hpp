#pragma once

/// Problem-file loading (JSON) and trajectory reports (CSV).
///
/// Problem schema:
///   {
///     "lattice": {"a": 1, "q": 2, "n_points": 12},
///     "order": 1,
///     "lagrangian": "-(u2^2)",
///     "initial_conditions": [1],
///     "horizon": {"k_hi": 4, "sample_indices": [2, 3]},   // indices optional
///     "tolerances": {"root_tol": 1e-10, "grad_tol": 1e-8,
///                    "gap_tol": 1e-8, "tail_tol": 1e-9}    // all optional
///   }
/// Unknown fields are rejected.
///
/// Trajectory CSV: header `k,t,x,el_residual,tv_1,...,tv_r`, one row per
/// covered lattice index, 17 significant digits, cells empty where a
/// quantity is not defined at that index.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qvar/errors.hpp"
#include "qvar/solver.hpp"

namespace qvar {

namespace detail {

inline void reject_unknown(const nlohmann::json& obj,
                           const std::vector<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& a : allowed)
            if (it.key() == a) ok = true;
        if (!ok)
            throw ValidationError("unknown field \"" + it.key() + "\" in " +
                                  where);
    }
}

inline double finite_number(const nlohmann::json& v, const std::string& name) {
    if (!v.is_number())
        throw ValidationError("field \"" + name + "\" must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d))
        throw ValidationError("field \"" + name + "\" must be finite");
    return d;
}

} // namespace detail

inline ProblemSpec load_problem(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed problem file: ") + e.what(),
                         0);
    }
    if (!doc.is_object())
        throw ValidationError("problem file must be a JSON object");
    detail::reject_unknown(doc,
                           {"lattice", "order", "lagrangian",
                            "initial_conditions", "horizon", "tolerances"},
                           "problem file");
    for (const char* f :
         {"lattice", "order", "lagrangian", "initial_conditions", "horizon"})
        if (!doc.contains(f))
            throw ValidationError(std::string("missing field \"") + f + "\"");

    const auto& jl = doc["lattice"];
    if (!jl.is_object())
        throw ValidationError("\"lattice\" must be an object");
    detail::reject_unknown(jl, {"a", "q", "n_points"}, "lattice");
    for (const char* f : {"a", "q", "n_points"})
        if (!jl.contains(f))
            throw ValidationError(std::string("missing lattice field \"") + f +
                                  "\"");
    const double a = detail::finite_number(jl["a"], "lattice.a");
    const double q = detail::finite_number(jl["q"], "lattice.q");
    if (!jl["n_points"].is_number_unsigned())
        throw ValidationError("lattice.n_points must be a nonnegative integer");
    const std::size_t n_points = jl["n_points"].get<std::size_t>();
    if (!(q > 1.0)) throw ValidationError("lattice ratio q must be > 1");
    if (!(a > 0.0)) throw ValidationError("lattice base a must be > 0");
    if (n_points < 1) throw ValidationError("lattice needs n_points >= 1");
    if (!std::isfinite(a * std::pow(q, double(n_points - 1))))
        throw ValidationError("last lattice point a*q^N overflows double");

    if (!doc["order"].is_number_unsigned())
        throw ValidationError("\"order\" must be a positive integer");
    const int order = doc["order"].get<int>();
    if (order < 1) throw ValidationError("\"order\" must be >= 1");

    if (!doc["lagrangian"].is_string())
        throw ValidationError("\"lagrangian\" must be a string");
    ExprAst lagrangian =
        parse_expression(doc["lagrangian"].get<std::string>(), order);

    if (!doc["initial_conditions"].is_array())
        throw ValidationError("\"initial_conditions\" must be an array");
    std::vector<double> alphas;
    for (const auto& v : doc["initial_conditions"])
        alphas.push_back(detail::finite_number(v, "initial_conditions"));
    if (alphas.size() != std::size_t(order))
        throw ValidationError("initial_conditions length " +
                              std::to_string(alphas.size()) +
                              " does not match order " +
                              std::to_string(order));

    const auto& jh = doc["horizon"];
    if (!jh.is_object())
        throw ValidationError("\"horizon\" must be an object");
    detail::reject_unknown(jh, {"k_hi", "sample_indices"}, "horizon");
    if (!jh.contains("k_hi") || !jh["k_hi"].is_number_unsigned())
        throw ValidationError("horizon.k_hi must be a nonnegative integer");
    const std::size_t k_hi = jh["k_hi"].get<std::size_t>();
    if (k_hi + std::size_t(order) > n_points)
        throw ValidationError("horizon.k_hi = " + std::to_string(k_hi) +
                              " needs k_hi + r <= n_points");
    std::vector<std::size_t> sample_indices;
    if (jh.contains("sample_indices")) {
        if (!jh["sample_indices"].is_array())
            throw ValidationError("horizon.sample_indices must be an array");
        for (const auto& v : jh["sample_indices"]) {
            if (!v.is_number_unsigned())
                throw ValidationError(
                    "horizon.sample_indices must hold nonnegative integers");
            sample_indices.push_back(v.get<std::size_t>());
        }
        for (std::size_t i = 1; i < sample_indices.size(); ++i)
            if (sample_indices[i] <= sample_indices[i - 1])
                throw ValidationError(
                    "horizon.sample_indices must be strictly increasing");
        if (!sample_indices.empty() &&
            sample_indices.back() + 2 * std::size_t(order) > n_points)
            throw ValidationError("sample index " +
                                  std::to_string(sample_indices.back()) +
                                  " is not stencil-feasible on this lattice");
    }

    Tolerances tol;
    if (doc.contains("tolerances")) {
        const auto& jt = doc["tolerances"];
        if (!jt.is_object())
            throw ValidationError("\"tolerances\" must be an object");
        detail::reject_unknown(
            jt, {"root_tol", "grad_tol", "gap_tol", "tail_tol"}, "tolerances");
        auto pick = [&](const char* name, double& slot) {
            if (jt.contains(name)) {
                slot = detail::finite_number(jt[name], name);
                if (!(slot > 0.0))
                    throw ValidationError(std::string(name) +
                                          " must be positive");
            }
        };
        pick("root_tol", tol.root_tol);
        pick("grad_tol", tol.grad_tol);
        pick("gap_tol", tol.gap_tol);
        pick("tail_tol", tol.tail_tol);
    }

    return ProblemSpec{QLattice(a, q, n_points), order,
                       std::move(lagrangian),  std::move(alphas),
                       k_hi,                   std::move(sample_indices),
                       tol};
}

/// Serialize a ProblemSpec back to the problem-file schema; loading the
/// result reproduces every field.
inline std::string emit_problem_json(const ProblemSpec& spec) {
    nlohmann::json doc;
    doc["lattice"] = {{"a", spec.lattice.base()},
                      {"q", spec.lattice.ratio()},
                      {"n_points", spec.lattice.n_points()}};
    doc["order"] = spec.order;
    doc["lagrangian"] = to_string(spec.lagrangian);
    doc["initial_conditions"] = spec.alphas;
    doc["horizon"] = {{"k_hi", spec.k_hi}};
    if (!spec.sample_indices.empty())
        doc["horizon"]["sample_indices"] = spec.sample_indices;
    doc["tolerances"] = {{"root_tol", spec.tol.root_tol},
                         {"grad_tol", spec.tol.grad_tol},
                         {"gap_tol", spec.tol.gap_tol},
                         {"tail_tol", spec.tol.tail_tol}};
    return doc.dump(2) + "\n";
}

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Deterministic trajectory report; byte-identical across runs for the
/// same inputs.
inline std::string emit_trajectory_csv(const LatticeFn& x,
                                       const TrajectoryDiagnostics& diag) {
    const std::size_t r = diag.transversality.size();
    std::string out = "k,t,x,el_residual";
    for (std::size_t k = 1; k <= r; ++k)
        out += ",tv_" + std::to_string(k);
    out += '\n';
    for (std::size_t k = x.first_index(); k <= x.last_index(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += detail::fmt17(x.lattice().point(k));
        out += ',';
        out += detail::fmt17(x.at(k));
        out += ',';
        if (diag.el.covers(k)) out += detail::fmt17(diag.el.at(k));
        for (const auto& seq : diag.transversality) {
            out += ',';
            for (std::size_t j = 0; j < seq.sample_indices.size(); ++j)
                if (seq.sample_indices[j] == k) {
                    out += detail::fmt17(seq.terms[j]);
                    break;
                }
        }
        out += '\n';
    }
    return out;
}

/// Read back a trajectory from a CSV produced by emit_trajectory_csv
/// (only the k and x columns are consumed).
inline LatticeFn read_trajectory_csv(const std::string& text,
                                     const QLattice& lattice) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
        throw ParseError("empty trajectory CSV", 0);
    if (line.rfind("k,t,x", 0) != 0)
        throw ParseError("trajectory CSV must start with header k,t,x,...", 0);
    std::vector<double> values;
    std::size_t offset = 0;
    bool first = true;
    std::size_t expected = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ','))
            throw ParseError("short CSV row", 0);
        const std::size_t k = std::stoul(cell);
        std::getline(row, cell, ','); // t, ignored
        if (!std::getline(row, cell, ','))
            throw ParseError("CSV row missing x column", 0);
        if (first) {
            offset = k;
            expected = k;
            first = false;
        }
        if (k != expected)
            throw ParseError("trajectory CSV rows must be contiguous in k", 0);
        ++expected;
        values.push_back(std::stod(cell));
    }
    if (values.empty()) throw ParseError("trajectory CSV holds no rows", 0);
    return LatticeFn(lattice, offset, std::move(values));
}

} // namespace qvar
