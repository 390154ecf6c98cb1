#pragma once

#include <stdexcept>
#include <string>

namespace nlf {

// Mirrors the status codes exposed through the C API (nlf.h).
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kInvalidDomain = 2,
  kSyntax = 3,
  kUnknownIdentifier = 4,
  kArity = 5,
  kPole = 6,
  kEvalDomain = 7,
  kNonSmooth = 8,
  kAsymmetric = 9,
  kUnsupported = 10,
  kPhiNonconvex = 11,
  kBoundary = 12,
  kUndefinedFraction = 13,
  kNonHomogeneous = 14,
  kUnknownName = 15,
  kMismatch = 16,
  kIo = 17,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Parse failures carry the byte offset into the source text.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t offset, const std::string& what)
      : Error(ErrorCode::kSyntax, what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace nlf
