#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fraudlens {

enum class ErrorKind {
  MalformedRow,
  NegativeAmount,
  HashCollision,
  InvalidConfig,
  InvalidParams,
  UnknownFeature,
  UnknownCard,
  UnknownRegion,
  EmptyGraph,
  EmptyInput,
  EmptyMatrix,
  InvalidBinLength,
  DimensionMismatch,
  NoPositives,
  LengthMismatch,
  KTooLarge,
  IoFailure,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (CLI, HTTP
// layer, bindings) can map it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace fraudlens
