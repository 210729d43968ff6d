#pragma once

#include <string>

#include "soaview/transform.hpp"

namespace soaview {

// Offload handling for rewritten loops that carry an offload mark:
//   Off: no device pragmas; linear (non-nested) rewritten loops get a host
//        `#pragma omp parallel for`.
//   Map: `#pragma omp target teams distribute parallel for` with one map
//        clause per view buffer (to/from/tofrom follows the field class).
//   Usm: the same target pragma, no map clauses (unified shared memory).
enum class OffloadMode { Off, Map, Usm };

struct EmitCOptions {
  OffloadMode offload = OffloadMode::Off;
  std::string source_name = "<memory>"; // mentioned in the header comment
};

// Emits a self-contained C11 translation unit. Works for both original and
// rewritten modules; pass the views from the rewrite so buffer groups and
// map clauses can be reconstructed (empty for untransformed modules).
std::string emit_c(const Module &m, const std::vector<ViewPlan> &views,
                   const EmitCOptions &opts);

} // namespace soaview
