#pragma once

#include <stdexcept>
#include <string>

namespace lpr {

/// Base class for all recoverable errors raised by the pipeline.
/// Every failure mode callers are expected to handle derives from this,
/// so a single catch site (e.g. the CLI driver) can map them to exit codes.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

#define LPR_DEFINE_ERROR(Name)                                              \
  class Name : public Error {                                               \
  public:                                                                   \
    explicit Name(const std::string& what_arg) : Error(what_arg) {}         \
  }

/// Filesystem-level failure: missing file, unreadable file, failed write.
LPR_DEFINE_ERROR(IoError);
/// Scan payload does not decode as a whole number of point records.
LPR_DEFINE_ERROR(MalformedScan);
/// Pose line does not decode as 12 numeric tokens.
LPR_DEFINE_ERROR(MalformedPose);
/// Text input (CSV, config) fails to parse.
LPR_DEFINE_ERROR(ParseError);
/// Invalid or inconsistent configuration values.
LPR_DEFINE_ERROR(ConfigError);
/// Operands have incompatible shapes or counts.
LPR_DEFINE_ERROR(ShapeMismatch);
/// Binary container starts with the wrong magic bytes.
LPR_DEFINE_ERROR(BadMagic);
/// Binary container is shorter (or longer) than its header declares.
LPR_DEFINE_ERROR(TruncatedFile);
/// Vector length disagrees with a configured dimensionality.
LPR_DEFINE_ERROR(DimensionError);
/// An operation that needs at least one element received none.
LPR_DEFINE_ERROR(EmptySet);
/// A matrix that must be symmetric is not (beyond tolerance).
LPR_DEFINE_ERROR(NotSymmetric);
/// A numeric solver (eigendecomposition, Cholesky) did not converge.
LPR_DEFINE_ERROR(SolverFailure);
/// A class has too few members for neighborhood statistics.
LPR_DEFINE_ERROR(DegenerateClass);
/// Not enough labeled data to fit a model.
LPR_DEFINE_ERROR(InsufficientData);
/// A curve operation received no points.
LPR_DEFINE_ERROR(EmptyCurve);
/// A list that must be non-empty is empty.
LPR_DEFINE_ERROR(EmptyList);

#undef LPR_DEFINE_ERROR

}  // namespace lpr
