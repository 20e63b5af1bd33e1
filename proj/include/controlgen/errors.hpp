#pragma once

#include <stdexcept>
#include <string>

namespace controlgen {

// Base for all domain errors. `kind()` carries the stable error name that the
// CLI prints verbatim and tests match on.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define CONTROLGEN_DEFINE_ERROR(Name)                         \
  class Name : public Error {                                 \
  public:                                                     \
    explicit Name(const std::string& what) : Error(#Name, what) {} \
  };

CONTROLGEN_DEFINE_ERROR(UnknownStation)
CONTROLGEN_DEFINE_ERROR(DuplicateId)
CONTROLGEN_DEFINE_ERROR(Disconnected)
CONTROLGEN_DEFINE_ERROR(InfeasibleLeg)
CONTROLGEN_DEFINE_ERROR(ParseError)
CONTROLGEN_DEFINE_ERROR(EmptyLog)
CONTROLGEN_DEFINE_ERROR(NegativeCount)
CONTROLGEN_DEFINE_ERROR(SpecInvalid)
CONTROLGEN_DEFINE_ERROR(InsufficientData)
CONTROLGEN_DEFINE_ERROR(NoPath)
CONTROLGEN_DEFINE_ERROR(DegenerateRidership)
CONTROLGEN_DEFINE_ERROR(BudgetTooSmall)
CONTROLGEN_DEFINE_ERROR(EmptyBatch)
CONTROLGEN_DEFINE_ERROR(NonFiniteLoss)
CONTROLGEN_DEFINE_ERROR(EmptySample)
CONTROLGEN_DEFINE_ERROR(NeedTwoPeriods)
CONTROLGEN_DEFINE_ERROR(DimensionMismatch)

#undef CONTROLGEN_DEFINE_ERROR

}  // namespace controlgen
