#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qvar {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// lattice construction
struct InvalidRatio : Error { using Error::Error; };
struct InvalidBase : Error { using Error::Error; };
struct Overflow : Error { using Error::Error; };

// lattice-function domains
struct DomainTooShort : Error { using Error::Error; };
struct MismatchedLattice : Error { using Error::Error; };

// expressions
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " (at position " + std::to_string(position) + ")"),
          position(position) {}
    std::size_t position;
};
struct ArityError : Error { using Error::Error; };
struct EvalDomain : Error { using Error::Error; };

// problem files
struct ValidationError : Error { using Error::Error; };

// solver
struct DegenerateLagrangian : Error { using Error::Error; };
struct NoBracket : Error { using Error::Error; };
struct LineSearchStall : Error { using Error::Error; };

} // namespace qvar
