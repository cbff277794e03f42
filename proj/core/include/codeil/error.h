#ifndef CODEIL_ERROR_H_
#define CODEIL_ERROR_H_

#include <stdexcept>
#include <string>

namespace codeil {

// Broad failure category. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kInvalidArgument,  // bad shapes, bad configuration values
  kData,             // unreadable, corrupt or mismatched files
  kNumeric,          // non-finite values, non-convergence
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error InvalidArgument(const std::string& message) {
  return Error(ErrorKind::kInvalidArgument, message);
}
inline Error DataError(const std::string& message) {
  return Error(ErrorKind::kData, message);
}
inline Error NumericError(const std::string& message) {
  return Error(ErrorKind::kNumeric, message);
}

}  // namespace codeil

#endif  // CODEIL_ERROR_H_
