#pragma once

#include <stdexcept>
#include <string>

namespace sacap {

// Single error type for the whole library. The category maps to a CLI exit
// code and to the "error: <category>: ..." line printed on failure.
class Error : public std::runtime_error {
 public:
  enum class Category { Usage, Parse, Validation, Io, Internal };

  Error(Category category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  Category category() const { return category_; }

  const char* category_name() const {
    switch (category_) {
      case Category::Usage: return "usage";
      case Category::Parse: return "parse";
      case Category::Validation: return "validation";
      case Category::Io: return "io";
      case Category::Internal: return "internal";
    }
    return "internal";
  }

 private:
  Category category_;
};

inline Error usage_error(const std::string& msg) { return Error(Error::Category::Usage, msg); }
inline Error parse_error(const std::string& msg) { return Error(Error::Category::Parse, msg); }
inline Error validation_error(const std::string& msg) { return Error(Error::Category::Validation, msg); }
inline Error io_error(const std::string& msg) { return Error(Error::Category::Io, msg); }
inline Error internal_error(const std::string& msg) { return Error(Error::Category::Internal, msg); }

}  // namespace sacap
