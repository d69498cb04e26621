#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace logcave {

// Base class for all errors thrown by this library. kind() is a stable
// machine-readable tag; the CLI maps it into error records.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define LOGCAVE_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                           \
    public:                                                               \
        explicit Name(const std::string& msg) : Error(#Name, msg) {}      \
    }

LOGCAVE_DEFINE_ERROR(EmptyInput);
LOGCAVE_DEFINE_ERROR(NonFiniteValue);
LOGCAVE_DEFINE_ERROR(NonPositiveWeight);
LOGCAVE_DEFINE_ERROR(LengthMismatch);
LOGCAVE_DEFINE_ERROR(UnsortedKnots);
LOGCAVE_DEFINE_ERROR(NotConcave);
LOGCAVE_DEFINE_ERROR(NotNormalized);
LOGCAVE_DEFINE_ERROR(NonFiniteMass);
LOGCAVE_DEFINE_ERROR(ZeroScale);
LOGCAVE_DEFINE_ERROR(OutOfRange);
LOGCAVE_DEFINE_ERROR(NonPositiveR);
LOGCAVE_DEFINE_ERROR(DegenerateSupport);
LOGCAVE_DEFINE_ERROR(NoConvergence);
LOGCAVE_DEFINE_ERROR(PerfectFit);
LOGCAVE_DEFINE_ERROR(BadDesign);
LOGCAVE_DEFINE_ERROR(BadInput);
LOGCAVE_DEFINE_ERROR(IoError);

#undef LOGCAVE_DEFINE_ERROR

}  // namespace logcave
