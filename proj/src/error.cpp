#include "auscult/error.hpp"

namespace auscult {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::NotMono: return "NotMono";
    case Errc::NotPcm16: return "NotPcm16";
    case Errc::WrongSampleRate: return "WrongSampleRate";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::UnknownSubject: return "UnknownSubject";
    case Errc::RecordingTooShort: return "RecordingTooShort";
    case Errc::DuplicateChannel: return "DuplicateChannel";
    case Errc::MissingDiagnosis: return "MissingDiagnosis";
    case Errc::DanglingFileReference: return "DanglingFileReference";
    case Errc::BadManifest: return "BadManifest";
    case Errc::TooShortForFrame: return "TooShortForFrame";
    case Errc::TooShortForDfa: return "TooShortForDfa";
    case Errc::IllConditionedLpc: return "IllConditionedLpc";
    case Errc::MissingUnit: return "MissingUnit";
    case Errc::MissingChannel: return "MissingChannel";
    case Errc::MissingWindow: return "MissingWindow";
    case Errc::FieldUndefinedForVariant: return "FieldUndefinedForVariant";
    case Errc::AllRowsNaForColumn: return "AllRowsNaForColumn";
    case Errc::SingleClassTrainingSet: return "SingleClassTrainingSet";
    case Errc::ColumnMismatch: return "ColumnMismatch";
    case Errc::BadModelFile: return "BadModelFile";
    case Errc::SingleClassInput: return "SingleClassInput";
    case Errc::TooFewSubjectsForK: return "TooFewSubjectsForK";
    case Errc::InconsistentGroupLabel: return "InconsistentGroupLabel";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::BadConfig: return "BadConfig";
    case Errc::IoFailure: return "IoFailure";
  }
  return "UnknownError";
}

}  // namespace auscult
