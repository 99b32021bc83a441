#pragma once

#include <stdexcept>
#include <string>

namespace linopt {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonUnitaryInput : public Error { public: using Error::Error; };
class MalformedBlocks : public Error { public: using Error::Error; };
class DimensionMismatch : public Error { public: using Error::Error; };
class ModeIndexOutOfRange : public Error { public: using Error::Error; };
class InvalidParameter : public Error { public: using Error::Error; };
class UnsupportedRegime : public Error { public: using Error::Error; };
class SingularMatrix : public Error { public: using Error::Error; };
class TruncationRisk : public Error { public: using Error::Error; };
class BudgetExceeded : public Error { public: using Error::Error; };
class StageLimitReached : public Error { public: using Error::Error; };
class DegenerateProbe : public Error { public: using Error::Error; };

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter(what);
}

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionMismatch(what);
}

}  // namespace detail
}  // namespace linopt
