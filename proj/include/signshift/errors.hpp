/**
 * @file errors.hpp
 * @brief Exception hierarchy shared by all signshift modules.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace signshift {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define SIGNSHIFT_DEFINE_ERROR(NAME)      \
  struct NAME : Error {                   \
    using Error::Error;                   \
  };

// Geometry
SIGNSHIFT_DEFINE_ERROR(TubeTooWide)          // tube half-width >= reach, or overlapping components
SIGNSHIFT_DEFINE_ERROR(AmbiguousProjection)  // foot point requested at/beyond the reach
SIGNSHIFT_DEFINE_ERROR(NonConvergence)       // iterative projection failed to converge

// Complementing checks
SIGNSHIFT_DEFINE_ERROR(DimensionMismatch)
SIGNSHIFT_DEFINE_ERROR(NotSymmetric)
SIGNSHIFT_DEFINE_ERROR(NotPositiveDefinite)
SIGNSHIFT_DEFINE_ERROR(NotTangent)  // decay direction not orthogonal to the normal

// Reflections
SIGNSHIFT_DEFINE_ERROR(OutsideTube)       // map/inverse evaluated outside the valid tube
SIGNSHIFT_DEFINE_ERROR(InvalidBeta)       // curvature-reflection parameter outside (-1, 0)
SIGNSHIFT_DEFINE_ERROR(SingularAtCenter)  // Kelvin transform evaluated at its center

// Discrete solvers
SIGNSHIFT_DEFINE_ERROR(BadResolution)
SIGNSHIFT_DEFINE_ERROR(InconsistentMesh)
SIGNSHIFT_DEFINE_ERROR(SingularSystem)

// Lab / IO
SIGNSHIFT_DEFINE_ERROR(ParseError)
SIGNSHIFT_DEFINE_ERROR(ValidationError)
SIGNSHIFT_DEFINE_ERROR(IoError)
SIGNSHIFT_DEFINE_ERROR(InsufficientData)  // too few successful solves to judge

#undef SIGNSHIFT_DEFINE_ERROR

}  // namespace signshift
