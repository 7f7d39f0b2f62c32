#include "fraudlens/error.hpp"

namespace fraudlens {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::NegativeAmount: return "NegativeAmount";
    case ErrorKind::HashCollision: return "HashCollision";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::UnknownFeature: return "UnknownFeature";
    case ErrorKind::UnknownCard: return "UnknownCard";
    case ErrorKind::UnknownRegion: return "UnknownRegion";
    case ErrorKind::EmptyGraph: return "EmptyGraph";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::InvalidBinLength: return "InvalidBinLength";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoPositives: return "NoPositives";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace fraudlens
