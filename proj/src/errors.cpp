#include "psmooth/errors.hpp"

namespace psmooth {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorKind::NotInCameronMartin: return "NotInCameronMartin";
    case ErrorKind::InclusionViolated: return "InclusionViolated";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::InterpolationOutOfRange: return "InterpolationOutOfRange";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::NoContraction: return "NoContraction";
    case ErrorKind::OutOfGrid: return "OutOfGrid";
    case ErrorKind::TooCloseToHorizon: return "TooCloseToHorizon";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::ConfigParse: return "ConfigParse";
    case ErrorKind::DominanceViolated: return "DominanceViolated";
    case ErrorKind::InvariantFailed: return "InvariantFailed";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace psmooth
