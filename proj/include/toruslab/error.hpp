#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toruslab {

enum class ErrorKind {
  DeterminantNotOne,
  WeightsInvalid,
  DimensionMismatch,
  UnknownLabel,
  SupportCapExceeded,
  CapExceeded,
  NotFinite,
  PreconditionViolated,
  EnumerationTooLarge,
  FrequencyNotDivisible,
  ZeroMass,
  DenominatorDividesP,
  NotPrime,
  GroupTooLarge,
  InvalidArgument,
  ConfigInvalid,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::DeterminantNotOne: return "DeterminantNotOne";
    case ErrorKind::WeightsInvalid: return "WeightsInvalid";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::SupportCapExceeded: return "SupportCapExceeded";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::NotFinite: return "NotFinite";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorKind::FrequencyNotDivisible: return "FrequencyNotDivisible";
    case ErrorKind::ZeroMass: return "ZeroMass";
    case ErrorKind::DenominatorDividesP: return "DenominatorDividesP";
    case ErrorKind::NotPrime: return "NotPrime";
    case ErrorKind::GroupTooLarge: return "GroupTooLarge";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }  // without the kind prefix

 private:
  ErrorKind kind_;
  std::string message_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace toruslab
