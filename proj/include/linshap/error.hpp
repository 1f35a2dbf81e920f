#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace linshap {

// Broad class of a failure; the CLI maps these onto exit codes.
enum class ErrorCategory {
  kUsage,      // bad arguments or configuration
  kData,       // malformed or inconsistent input data / files
  kNumerical,  // a computation could not be carried out reliably
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define LINSHAP_DEFINE_ERROR(Name, Category)                 \
  class Name : public Error {                                \
   public:                                                   \
    explicit Name(const std::string& what)                   \
        : Error(ErrorCategory::Category, #Name ": " + what) {} \
  };

LINSHAP_DEFINE_ERROR(InvalidArgument, kUsage)
LINSHAP_DEFINE_ERROR(DimensionMismatch, kData)
LINSHAP_DEFINE_ERROR(InvalidDistribution, kData)
LINSHAP_DEFINE_ERROR(NotPSD, kData)
LINSHAP_DEFINE_ERROR(TooFewSamples, kData)
LINSHAP_DEFINE_ERROR(NonFiniteInput, kData)
LINSHAP_DEFINE_ERROR(EmptyFile, kData)
LINSHAP_DEFINE_ERROR(FileError, kData)
LINSHAP_DEFINE_ERROR(VersionMismatch, kData)
LINSHAP_DEFINE_ERROR(FingerprintMismatch, kData)
LINSHAP_DEFINE_ERROR(TruncatedFile, kData)
LINSHAP_DEFINE_ERROR(CapExceeded, kUsage)
LINSHAP_DEFINE_ERROR(SingularSubmatrix, kNumerical)
LINSHAP_DEFINE_ERROR(FactorizationFailed, kNumerical)
LINSHAP_DEFINE_ERROR(NotConverged, kNumerical)
LINSHAP_DEFINE_ERROR(SeparableData, kNumerical)

#undef LINSHAP_DEFINE_ERROR

// Malformed CSV cell. Row and column are 1-based and count the header row.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, std::size_t col, const std::string& detail)
      : Error(ErrorCategory::kData,
              "ParseError(" + std::to_string(row) + "," + std::to_string(col) +
                  "): " + detail),
        row_(row),
        col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

}  // namespace linshap
