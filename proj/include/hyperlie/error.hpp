#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hyperlie {

enum class ErrorCode {
  DegenerateConfiguration,
  InvalidChart,
  NotInCanonicalLeaf,
  WrongRegion,
  DegenerateGram,
  SingularRestriction,
  NotOrthogonal,
  ZeroBoundaryPoint,
  DegeneratePlane,
  SymmetryViolation,
  BlowUp,
  NoDecayFit,
  PoleInDomain,
  TailUnbounded,
  FrameMismatch,
  Inconclusive,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::InvalidChart: return "InvalidChart";
    case ErrorCode::NotInCanonicalLeaf: return "NotInCanonicalLeaf";
    case ErrorCode::WrongRegion: return "WrongRegion";
    case ErrorCode::DegenerateGram: return "DegenerateGram";
    case ErrorCode::SingularRestriction: return "SingularRestriction";
    case ErrorCode::NotOrthogonal: return "NotOrthogonal";
    case ErrorCode::ZeroBoundaryPoint: return "ZeroBoundaryPoint";
    case ErrorCode::DegeneratePlane: return "DegeneratePlane";
    case ErrorCode::SymmetryViolation: return "SymmetryViolation";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::NoDecayFit: return "NoDecayFit";
    case ErrorCode::PoleInDomain: return "PoleInDomain";
    case ErrorCode::TailUnbounded: return "TailUnbounded";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::Inconclusive: return "Inconclusive";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Single exception type for every failure in the library; inspect code() to branch.
class GeometryError : public std::runtime_error {
 public:
  GeometryError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hyperlie
