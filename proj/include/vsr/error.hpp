#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vsr {

enum class ErrorKind {
  MalformedRow,
  DuplicateKey,
  OutOfRangeProbability,
  MagnitudeMissingForNonNeutral,
  MagnitudePresentForNeutral,
  SignViolation,
  AllZero,
  SingleClassOnly,
  ProbabilityKindUnsupported,
  TooFewRecords,
  EmptyInput,
  BadStep,
  UndefinedGamma,
  ItemSetMismatch,
  EmptyQuestion,
  InsufficientData,
  ZeroExpectedDisagreement,
  LengthMismatch,
  ConstantInput,
  TooFewGroups,
  QuestionSetMismatch,
  EmptyCorpus,
  EmptyDocument,
  RankTooLarge,
  TooFewPoints,
  SingleCluster,
  StratumTooSmall,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::DuplicateKey: return "DuplicateKey";
    case ErrorKind::OutOfRangeProbability: return "OutOfRangeProbability";
    case ErrorKind::MagnitudeMissingForNonNeutral: return "MagnitudeMissingForNonNeutral";
    case ErrorKind::MagnitudePresentForNeutral: return "MagnitudePresentForNeutral";
    case ErrorKind::SignViolation: return "SignViolation";
    case ErrorKind::AllZero: return "AllZero";
    case ErrorKind::SingleClassOnly: return "SingleClassOnly";
    case ErrorKind::ProbabilityKindUnsupported: return "ProbabilityKindUnsupported";
    case ErrorKind::TooFewRecords: return "TooFewRecords";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::BadStep: return "BadStep";
    case ErrorKind::UndefinedGamma: return "UndefinedGamma";
    case ErrorKind::ItemSetMismatch: return "ItemSetMismatch";
    case ErrorKind::EmptyQuestion: return "EmptyQuestion";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::ZeroExpectedDisagreement: return "ZeroExpectedDisagreement";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ConstantInput: return "ConstantInput";
    case ErrorKind::TooFewGroups: return "TooFewGroups";
    case ErrorKind::QuestionSetMismatch: return "QuestionSetMismatch";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::EmptyDocument: return "EmptyDocument";
    case ErrorKind::RankTooLarge: return "RankTooLarge";
    case ErrorKind::TooFewPoints: return "TooFewPoints";
    case ErrorKind::SingleCluster: return "SingleCluster";
    case ErrorKind::StratumTooSmall: return "StratumTooSmall";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Validation or domain failure. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// File could not be opened, read or written. The CLI maps these to exit code 1.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
  throw Error(kind, detail);
}

}  // namespace vsr
