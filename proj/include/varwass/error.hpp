#pragma once

#include <stdexcept>
#include <string>

namespace varwass {

enum class ErrorCode {
  invalid_domain,
  size_mismatch,
  nonzero_boundary_flux,
  exponent_out_of_range,
  invalid_density,
  nonpositive_lambda,
  unknown_kind,
  nonpositive_h,
  marginal_mismatch,
  nonpositive_eps,
  nonzero_mean,
  vanishing_density,
  blow_up,
  shape_mismatch,
  index_out_of_range,
  requires_exact_coupling,
  invalid_argument,
};

const char* to_string(ErrorCode code);

// Every library failure is reported through this type; `code()` is stable,
// the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace varwass
