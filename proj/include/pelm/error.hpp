#pragma once

#include <stdexcept>
#include <string>

namespace pelm {

/// Coarse failure category; the CLI maps these onto process exit codes.
enum class error_kind { config, io, validation, internal };

class error : public std::runtime_error {
 public:
  error(error_kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  error_kind kind() const noexcept { return kind_; }

 private:
  error_kind kind_;
};

[[noreturn]] inline void fail_config(const std::string& msg) {
  throw error(error_kind::config, msg);
}
[[noreturn]] inline void fail_io(const std::string& msg) {
  throw error(error_kind::io, msg);
}
[[noreturn]] inline void fail_validation(const std::string& msg) {
  throw error(error_kind::validation, msg);
}
[[noreturn]] inline void fail_internal(const std::string& msg) {
  throw error(error_kind::internal, msg);
}

}  // namespace pelm
