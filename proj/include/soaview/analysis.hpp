#pragma once

#include <set>
#include <string>
#include <vector>

#include "soaview/ast.hpp"

namespace soaview {

/// Per-loop access analysis.
///
/// For every annotated loop the analyzer computes the set of record fields
/// the loop body may read (a_in) and may write (a_out) through the loop
/// binder, including accesses that happen inside callees when the binder is
/// passed along as a &T argument. The walk is flow- and path-insensitive:
/// a field counts as read if any occurrence anywhere in the body reads it,
/// and compound assignments count as both a read and a write. Sets only ever
/// grow during the interprocedural fixpoint, and the field universe is
/// finite, so the worklist terminates.

// Field classifications decide the data movement per field:
// ReadOnly fields are gathered, WriteOnly fields are allocated and scattered
// back, ReadWrite fields are both gathered and scattered.
enum class FieldClass { ReadOnly, WriteOnly, ReadWrite };

struct AccessSets {
  std::set<int> in;  // field indices into the loop's struct
  std::set<int> out;
  int bytes_in = 0;
  int bytes_out = 0;

  std::set<int> read_only() const;
  std::set<int> write_only() const;
  std::set<int> read_write() const;
  // in ∪ out, in struct field order
  std::vector<int> all_fields() const;
  FieldClass classify(int field) const;
};

enum class AnalysisErrorKind { Escape, AliasAmbiguity, StaleView, Unsupported };

// Stable diagnostic tag, e.g. "AliasAmbiguityError". Used verbatim in CLI
// output, so changing a name breaks golden tests.
const char *analysis_error_name(AnalysisErrorKind k);

struct AnalysisError {
  AnalysisErrorKind kind;
  SourceLoc loc;
  std::string message;
};

struct LoopInfo {
  const Stmt *loop = nullptr;
  int loop_id = 0;
  SourceLoc loc;
  int fn_index = -1;
  int struct_index = -1;       // element struct of the iterated container
  std::string container;       // container parameter name
  ContainerKind ckind = ContainerKind::Slice;
  LoopAnn ann = LoopAnn::None;
  int hoist = 0;
  int depth = 0;               // number of enclosing loops within the function
  int parent = -1;             // index of innermost enclosing *annotated* loop, or -1
  AccessSets sets;
};

struct ProgramAnalysis {
  std::vector<LoopInfo> loops;  // source order
  std::vector<AnalysisError> errors;
  bool ok() const { return errors.empty(); }
  const LoopInfo *loop_by_id(int id) const {
    for (const auto &l : loops)
      if (l.loop_id == id) return &l;
    return nullptr;
  }
};

// Analyzes every annotated loop in the module and runs the aliasing and
// hoist legality checks. Loop ids are assigned in source order starting at 1.
ProgramAnalysis analyze_program(const Module &m);

// Access sets for a single annotated loop (no legality checks). Exposed for
// unit tests and for the `check` report.
AccessSets analyze_loop(const Module &m, const FunctionDef &fn, const Stmt &loop,
                        std::vector<AnalysisError> &errors);

/// Aliasing rule for nested views. Two containers may reference joint
/// records when they share the element struct and are not asserted disjoint.
/// In that case the inner view must not write any field the outer view
/// gathered or will scatter, i.e. the configuration is rejected iff
///   a_out(inner) ∩ (a_in(outer) ∪ a_out(outer)) ≠ ∅.
// Returns true when the pair is acceptable; otherwise appends an
// AliasAmbiguity error naming the overlapping fields.
bool check_aliasing(const Module &m, const LoopInfo &outer, const LoopInfo &inner,
                    bool assume_disjoint, std::vector<AnalysisError> &errors);

/// Hoist legality. A view hoisted n levels out materializes before the
/// statement that sits n loops above the annotated loop; every statement
/// inside that hoisted region but outside the loop itself must not write any
/// field of the loop's a_in into records the hoisted container may reference,
/// otherwise the gathered copy would go stale.
bool check_hoist(const Module &m, const ProgramAnalysis &pa, const LoopInfo &inner,
                 std::vector<AnalysisError> &errors);

// One line per annotated loop, e.g.
//   loop @3:3  A_in={a,b} (16B)  A_out={a} (8B)
// With `tsv` the report is tab-separated:
//   fn line col record_bytes n_in bytes_in n_out bytes_out ro wo rw
std::string format_check_report(const Module &m, const ProgramAnalysis &pa, bool tsv);

} // namespace soaview
