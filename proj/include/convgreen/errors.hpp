#pragma once

#include <stdexcept>
#include <string>

namespace convgreen {

// Base class for every analysis failure this library can signal.  Callers
// that only care about "did it work" can catch this; callers that need to
// distinguish failure modes catch the concrete types below.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- symbols -------------------------------------------------------------
struct ZeroArgument final : Error { using Error::Error; };        // Laurent symbol at kappa = 0 with r > 0
struct SymbolPole final : Error { using Error::Error; };          // Q1 symbol vanishes where F is requested
struct IndexOutOfStencil final : Error { using Error::Error; };   // coefficient index outside [-r, p]
struct ZeroOnCircle final : Error { using Error::Error; };        // winding requested for a symbol with circle zeros
struct AmbiguousWinding final : Error { using Error::Error; };    // accumulated argument too far from a multiple of 2*pi
struct TailNotResolved final : Error { using Error::Error; };     // Laurent kernel tail does not certify at the width cap

// --- structural checks ---------------------------------------------------
struct ConstantModulus final : Error { using Error::Error; };     // |F| constant on the circle (no dissipation at all)
struct ModulusExceedsOne final : Error { using Error::Error; };   // |F| > 1 somewhere: power-bounded iteration impossible
struct CoalescedTangencies final : Error { using Error::Error; }; // two modulus-one points too close to separate
struct ZeroDrift final : Error { using Error::Error; };           // tangency with vanishing drift (out of scope)
struct NotDissipative final : Error { using Error::Error; };      // no negative even-order coefficient up to the search cap
struct ExpansionShapeViolated final : Error { using Error::Error; }; // leading real part at odd order, or non-imaginary drift term
struct Hyp4Violation final : Error { using Error::Error; };       // a modulus-one value shared by >2 tangencies, or drifts not opposed

// --- dispersion / roots --------------------------------------------------
struct LeadingCoefficientZero final : Error { using Error::Error; }; // degenerate dispersion polynomial at this z
struct RootFindingDiverged final : Error { using Error::Error; };
struct BranchLost final : Error { using Error::Error; };          // root continuation failed or jumped branches
struct SplitMismatch final : Error { using Error::Error; };       // root counts differ from the expected (r, 0, p) split
struct DegenerateRoots final : Error { using Error::Error; };     // clustered roots: modal form ill-conditioned

// --- linear algebra / resolvent ------------------------------------------
struct NearSpectrum final : Error { using Error::Error; };        // z too close to the spectrum curve for a reliable solve
struct NotConverged final : Error { using Error::Error; };        // window doublings exhausted without certification
struct SolverSingular final : Error { using Error::Error; };      // banded elimination met a vanishing pivot
struct WindowTooShort final : Error { using Error::Error; };      // not enough usable points for a decay fit
struct Underflow final : Error { using Error::Error; };           // all magnitudes below the usable floor
struct WindowOverflow final : Error { using Error::Error; };      // iteration window would exceed the configured cap

// --- contours / quadrature / envelopes -----------------------------------
struct SpectrumCrossing final : Error { using Error::Error; };    // contour could not be kept clear of the spectrum curve
struct DegenerateSector final : Error { using Error::Error; };    // deformation intervals overlap; geometry too cramped
struct QuadratureStalled final : Error { using Error::Error; };
struct NoValidEnvelope final : Error { using Error::Error; };
struct ParameterOutOfRange final : Error { using Error::Error; };

} // namespace convgreen
