#pragma once

#include "soaview/analysis.hpp"
#include "soaview/ast.hpp"

namespace soaview {

/// AoS-to-SoA view rewriting.
///
/// Every annotated loop is replaced by a block that
///   1. materializes one buffer per accessed field (a_in ∪ a_out; fields in
///      a_out \ a_in are allocate-only),
///   2. gathers the a_in fields from the container records,
///   3. runs the loop body with every binder field access redirected into
///      the buffers,
///   4. scatters the a_out fields back into the records.
/// Functions that receive the binder as a &T argument are cloned with the
/// reference parameter replaced by buffer parameters plus an index, so the
/// redirection crosses call boundaries without changing evaluation order.
/// A ConvertHoist(n) view materializes n loop levels further out; the
/// legality of that placement is established by the analysis pass.

// Deterministic identifier mangling: base + "_" + loop_id.
// Injective over (base, id); collisions with user identifiers are resolved
// by the rewriter via a reserved suffix.
std::string mangle(const std::string &base, int loop_id);

struct ViewPlan {
  int loop_id = 0;
  std::string container;
  int struct_index = -1;
  ContainerKind ckind = ContainerKind::Slice;
  bool offload = false;
  int hoist = 0;
  std::vector<int> gather;     // a_in, struct field order
  std::vector<int> alloc_only; // a_out \ a_in, struct field order
  std::vector<int> scatter;    // a_out, struct field order
  std::vector<int> all;        // a_in ∪ a_out, struct field order
  AccessSets sets;
  // mangled names, parallel to `all`
  std::vector<std::string> buf_names;
  std::string count_var;   // n_<id>
  std::string index_var;   // i_<id>, body loop index
  std::string gather_var;  // g_<id>
  std::string scatter_var; // s_<id>
};

ViewPlan plan_view(const Module &m, const LoopInfo &loop);

struct TransformResult {
  Module module;
  std::vector<ViewPlan> views; // indexed by Stmt::view_id of rewritten loops
  std::vector<Diagnostic> diags;
  bool ok() const { return !has_errors(diags); }
};

// Rewrites all annotated loops of `m`. Requires a clean analysis: callers
// must check `pa.ok()` first. The input module is left untouched.
TransformResult rewrite(const Module &m, const ProgramAnalysis &pa);

} // namespace soaview
