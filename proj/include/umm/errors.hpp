#pragma once

#include <stdexcept>
#include <string>

namespace umm {

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define UMM_DEFINE_ERROR(Name)        \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  }

UMM_DEFINE_ERROR(SymbolUnknown);
UMM_DEFINE_ERROR(DegeneratePartition);
UMM_DEFINE_ERROR(ArgumentOutOfRange);
UMM_DEFINE_ERROR(EmptyPool);
UMM_DEFINE_ERROR(InsufficientData);
UMM_DEFINE_ERROR(ShapeMismatch);
UMM_DEFINE_ERROR(NotPositiveDefinite);
UMM_DEFINE_ERROR(TooFewSymbols);
UMM_DEFINE_ERROR(InconsistentDimensions);
UMM_DEFINE_ERROR(NoAccumulatedMeans);
UMM_DEFINE_ERROR(InvalidConfig);
UMM_DEFINE_ERROR(FormatVersionUnsupported);
UMM_DEFINE_ERROR(CorruptPayload);
UMM_DEFINE_ERROR(MissingLabels);

#undef UMM_DEFINE_ERROR

}  // namespace umm
