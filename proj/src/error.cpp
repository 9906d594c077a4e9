#include "varwass/error.hpp"

namespace varwass {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_domain: return "invalid-domain";
    case ErrorCode::size_mismatch: return "size-mismatch";
    case ErrorCode::nonzero_boundary_flux: return "nonzero-boundary-flux";
    case ErrorCode::exponent_out_of_range: return "exponent-out-of-range";
    case ErrorCode::invalid_density: return "invalid-density";
    case ErrorCode::nonpositive_lambda: return "nonpositive-lambda";
    case ErrorCode::unknown_kind: return "unknown-kind";
    case ErrorCode::nonpositive_h: return "nonpositive-h";
    case ErrorCode::marginal_mismatch: return "marginal-mismatch";
    case ErrorCode::nonpositive_eps: return "nonpositive-eps";
    case ErrorCode::nonzero_mean: return "nonzero-mean";
    case ErrorCode::vanishing_density: return "vanishing-density";
    case ErrorCode::blow_up: return "blow-up";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::index_out_of_range: return "index-out-of-range";
    case ErrorCode::requires_exact_coupling: return "requires-exact-coupling";
    case ErrorCode::invalid_argument: return "invalid-argument";
  }
  return "unknown";
}

}  // namespace varwass
