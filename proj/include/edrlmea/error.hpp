#pragma once

#include <stdexcept>
#include <string>

namespace edrlmea {

// Error codes cover every failure mode the library promises to report.
// All of these are caller-facing ("user error") conditions; genuine bugs
// surface as other exception types.
enum class Errc {
  // input validation
  InvalidCell,
  DimensionMismatch,
  DuplicateId,
  EmptyDataset,
  TooFewRows,
  SingleClassData,
  UnsupportedCategory,
  NonFiniteValue,
  InvalidConfig,
  StageOrder,
  IoError,
  // numerics
  ShapeMismatch,
  InvalidEpsilon,
  NonFiniteGradient,
  MissingCache,
  // audio
  UnsupportedChannels,
  UnsupportedEncoding,
  EmptyAudio,
  SilentSignal,
  SampleRateMismatch,
  // evaluation
  LengthMismatch,
  MissingSnrLevel,
  KeyMismatch,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidCell: return "InvalidCell";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::SingleClassData: return "SingleClassData";
    case Errc::UnsupportedCategory: return "UnsupportedCategory";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::StageOrder: return "StageOrder";
    case Errc::IoError: return "IoError";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::InvalidEpsilon: return "InvalidEpsilon";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::MissingCache: return "MissingCache";
    case Errc::UnsupportedChannels: return "UnsupportedChannels";
    case Errc::UnsupportedEncoding: return "UnsupportedEncoding";
    case Errc::EmptyAudio: return "EmptyAudio";
    case Errc::SilentSignal: return "SilentSignal";
    case Errc::SampleRateMismatch: return "SampleRateMismatch";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::MissingSnrLevel: return "MissingSnrLevel";
    case Errc::KeyMismatch: return "KeyMismatch";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg)
      : std::runtime_error(std::string(errc_name(code)) + ": " + msg),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace edrlmea
