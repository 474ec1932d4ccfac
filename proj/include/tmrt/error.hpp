#pragma once

#include <stdexcept>
#include <string>

namespace tmrt {

// Every failure mode named by the toolchain. The CLI maps these onto its
// exit codes; library code throws and never exits.
enum class ErrorKind {
  InvalidConfig,       // bad architecture/hyperparameter/configuration value
  IndexRange,          // literal/clause/class index out of range
  InvalidDataset,      // dataset dimension or label mismatch
  OffsetOverflow,      // feature index does not fit the 12-bit offset field
  DegenerateClass,     // class with zero Include actions cannot be encoded
  DuplicateInclude,    // same (offset, complement) repeated within a clause
  MalformedStream,     // instruction stream violates toggle/ordering rules
  MalformedModel,      // loaded instructions inconsistent with declared M/Cl
  FaultingInstruction, // instruction offset outside the loaded feature range
  HeaderOverflow,      // header field value does not fit its bit width
  MalformedHeader,     // undecodable header (reserved bits, bad width)
  InvalidBatch,        // feature batch shape violation
  Protocol,            // stream word arrived out of protocol order
  Capacity,            // instruction/feature memory depth exceeded
  State,               // operation requires a state the machine is not in
  Io,                  // file unreadable/unwritable
  Parse,               // file contents unparseable
};

class TmError : public std::runtime_error {
public:
  TmError(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw TmError(kind, msg);
}

// CLI exit codes: 0 success, 1 verification mismatch, 2 I/O or parse,
// 3 protocol/capacity/encoding.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidDataset:
    case ErrorKind::IndexRange:
      return 2;
    default:
      return 3;
  }
}

}  // namespace tmrt
