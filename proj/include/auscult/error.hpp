#pragma once

#include <stdexcept>
#include <string>

namespace auscult {

// Error codes named after the contract they break. Tests match on the code,
// not on the message text.
enum class Errc {
  // audio
  NotMono,
  NotPcm16,
  WrongSampleRate,
  TruncatedFile,
  UnknownSubject,
  RecordingTooShort,
  DuplicateChannel,
  MissingDiagnosis,
  DanglingFileReference,
  BadManifest,
  // features
  TooShortForFrame,
  TooShortForDfa,
  IllConditionedLpc,
  // dataset
  MissingUnit,
  MissingChannel,
  MissingWindow,
  FieldUndefinedForVariant,
  AllRowsNaForColumn,
  // models
  SingleClassTrainingSet,
  ColumnMismatch,
  BadModelFile,
  // evaluation
  SingleClassInput,
  TooFewSubjectsForK,
  // fusion
  InconsistentGroupLabel,
  EmptyGroup,
  // cli / io
  EmptyCorpus,
  BadConfig,
  IoFailure,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace auscult
