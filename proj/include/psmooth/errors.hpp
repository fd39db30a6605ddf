#pragma once

#include <stdexcept>
#include <string>

namespace psmooth {

enum class ErrorKind {
  NotPSD,
  DimensionMismatch,
  DimensionTooLarge,
  NotInCameronMartin,
  InclusionViolated,
  RankDeficient,
  InterpolationOutOfRange,
  GridMismatch,
  NoContraction,
  OutOfGrid,
  TooCloseToHorizon,
  ConfigInvalid,
  ConfigParse,
  DominanceViolated,
  InvariantFailed,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace psmooth
