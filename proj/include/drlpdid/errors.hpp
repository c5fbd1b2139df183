#pragma once

#include <stdexcept>
#include <string>

namespace drlpdid {

// Error taxonomy. The domain drives the CLI exit code: config errors exit 2,
// data errors 3, numerical failures 4.
enum class ErrorCode {
  // configuration / request
  BadConfig,
  AlignmentError,
  // data / construction
  BadPanel,
  InadmissibleBase,
  HorizonOutOfRange,
  EmptyStack,
  NoRetainedCells,
  DuplicateObservation,
  InvalidEntryDate,
  IngestError,
  // numerical
  DegenerateBasis,
  SingularNormalEquations,
  IptDiverged,
  SeparationDetected,
  SingularJacobian,
  TooFewClusters,
  DegenerateBand,
  CampaignFailed,
};

enum class ErrorDomain { Config, Data, Numerical };

inline ErrorDomain domain_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadConfig:
    case ErrorCode::AlignmentError:
      return ErrorDomain::Config;
    case ErrorCode::BadPanel:
    case ErrorCode::InadmissibleBase:
    case ErrorCode::HorizonOutOfRange:
    case ErrorCode::EmptyStack:
    case ErrorCode::NoRetainedCells:
    case ErrorCode::DuplicateObservation:
    case ErrorCode::InvalidEntryDate:
    case ErrorCode::IngestError:
      return ErrorDomain::Data;
    default:
      return ErrorDomain::Numerical;
  }
}

inline const char* name_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::AlignmentError: return "AlignmentError";
    case ErrorCode::BadPanel: return "BadPanel";
    case ErrorCode::InadmissibleBase: return "InadmissibleBase";
    case ErrorCode::HorizonOutOfRange: return "HorizonOutOfRange";
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::NoRetainedCells: return "NoRetainedCells";
    case ErrorCode::DuplicateObservation: return "DuplicateObservation";
    case ErrorCode::InvalidEntryDate: return "InvalidEntryDate";
    case ErrorCode::IngestError: return "IngestError";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::IptDiverged: return "IptDiverged";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::TooFewClusters: return "TooFewClusters";
    case ErrorCode::DegenerateBand: return "DegenerateBand";
    case ErrorCode::CampaignFailed: return "CampaignFailed";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(name_of(code)) + ": " + what),
        code_(code) {}
  ErrorCode code() const { return code_; }
  ErrorDomain domain() const { return domain_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace drlpdid
