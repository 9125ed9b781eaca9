#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace logrank {

// Coarse classification used by the CLI to pick an exit code.
enum class ErrorKind {
  Dimension,
  Argument,
  Numerical,
  Format,
  Domain,
  Capability,
  Capacity,
  Partition,
  ProbabilisticFailure,
  InternalConsistency,
  Parse,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define LOGRANK_DEFINE_ERROR(Name, Kind)                                        \
  class Name : public Error {                                                   \
   public:                                                                      \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}    \
  };

LOGRANK_DEFINE_ERROR(DimensionError, Dimension)
LOGRANK_DEFINE_ERROR(ArgumentError, Argument)
LOGRANK_DEFINE_ERROR(DomainError, Domain)
LOGRANK_DEFINE_ERROR(CapabilityError, Capability)
LOGRANK_DEFINE_ERROR(CapacityError, Capacity)
LOGRANK_DEFINE_ERROR(PartitionError, Partition)
LOGRANK_DEFINE_ERROR(InternalConsistencyError, InternalConsistency)
LOGRANK_DEFINE_ERROR(ParseError, Parse)
LOGRANK_DEFINE_ERROR(IoError, Io)

#undef LOGRANK_DEFINE_ERROR

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, long iterations = -1)
      : Error(ErrorKind::Numerical, what), iterations_(iterations) {}
  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

// Raised when a malformed EPSR stream is read; carries the offending byte offset.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(ErrorKind::Format, what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// A randomized construction failed to meet its measured guarantee within the
// retry budget. best_error is the smallest error seen over all attempts.
class ProbabilisticFailure : public Error {
 public:
  ProbabilisticFailure(const std::string& what, double best_error, int attempts)
      : Error(ErrorKind::ProbabilisticFailure, what), best_error_(best_error), attempts_(attempts) {}
  double best_error() const noexcept { return best_error_; }
  int attempts() const noexcept { return attempts_; }

 private:
  double best_error_;
  int attempts_;
};

}  // namespace logrank
