#pragma once

#include <stdexcept>
#include <string>

namespace inducer {

// Error classes map onto CLI exit codes.
enum class ErrorClass { config = 2, hypothesis = 3, builder = 4, audit = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, std::string code, const std::string& detail = "")
      : std::runtime_error(detail.empty() ? code : code + ": " + detail),
        cls_(cls),
        code_(std::move(code)) {}
  ErrorClass cls() const { return cls_; }
  const std::string& code() const { return code_; }

 private:
  ErrorClass cls_;
  std::string code_;
};

}  // namespace inducer
