#ifndef GELVEC_ERROR_HPP
#define GELVEC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace gelvec {

// Base of every library error. Subclasses map one-to-one onto the failure
// modes callers are expected to distinguish.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define GELVEC_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
  public:                                  \
    using Error::Error;                    \
  }

GELVEC_DEFINE_ERROR(FormatError);
GELVEC_DEFINE_ERROR(RangeError);
GELVEC_DEFINE_ERROR(OutOfBounds);
GELVEC_DEFINE_ERROR(DimensionError);
GELVEC_DEFINE_ERROR(InvalidArgument);
GELVEC_DEFINE_ERROR(MissingReference);
GELVEC_DEFINE_ERROR(DegenerateReferences);
GELVEC_DEFINE_ERROR(SpotNotFound);
GELVEC_DEFINE_ERROR(EmptySpotList);
GELVEC_DEFINE_ERROR(DimensionMismatch);
GELVEC_DEFINE_ERROR(SingleClassData);
GELVEC_DEFINE_ERROR(FoldError);
GELVEC_DEFINE_ERROR(FileError);

#undef GELVEC_DEFINE_ERROR

// Manifest/annotation validation failure; key() names the offending field.
class SchemaError : public Error {
public:
  SchemaError(std::string key, const std::string& what)
      : Error("schema error at '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

}  // namespace gelvec

#endif  // GELVEC_ERROR_HPP
