#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace geoleak {

// All recoverable failures carry a machine-readable category. The CLI
// prints them as "ERROR:<category>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const { return category_; }

 private:
  std::string category_;
};

namespace errors {

inline Error invalid_input(const std::string& msg) { return Error("invalid-input", msg); }
inline Error invalid_parameter(const std::string& msg) { return Error("invalid-parameter", msg); }
inline Error invalid_data(const std::string& msg) { return Error("invalid-data", msg); }
inline Error insufficient_data(const std::string& msg) { return Error("insufficient-data", msg); }
inline Error empty_training_set(const std::string& msg) { return Error("empty-training-set", msg); }
inline Error empty_test_set(const std::string& msg) { return Error("empty-test-set", msg); }
inline Error config_mismatch(const std::string& msg) { return Error("config-mismatch", msg); }
inline Error ingest(const std::string& msg) { return Error("ingest", msg); }
inline Error io(const std::string& msg) { return Error("io", msg); }
inline Error numeric(const std::string& msg) { return Error("numeric", msg); }

}  // namespace errors
}  // namespace geoleak
