#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rankscale {

enum class ErrorKind {
  invalid_input,
  degenerate_spectrum,
  domain,
  invalid_law,
  unreachable_target,
  invalid_config,
  divergent_start,
  insufficient_data,
  degenerate_variance,
  insufficient_pairs,
  ambiguous_record,
  unsupported_config,
  invalid_record,
  io,
  parse,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rankscale
