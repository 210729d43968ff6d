#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "soaview/ast.hpp"

namespace soaview {

/// Reference interpreter. Deterministic tree walk, strict left-to-right
/// evaluation in source order, IEEE-754 binary64 arithmetic. Serves as the
/// semantic oracle for the transform and the C backend.

struct ScalarValue {
  Scalar kind = Scalar::F64;
  double f = 0.0;
  int64_t i = 0;
  bool b = false;

  static ScalarValue of_f64(double v) { return {Scalar::F64, v, 0, false}; }
  static ScalarValue of_i64(int64_t v) { return {Scalar::I64, 0.0, v, false}; }
  static ScalarValue of_bool(bool v) { return {Scalar::Bool, 0.0, 0, v}; }
};

// A pool holds the backing bytes for records of one struct, laid out
// back to back with the packed record size.
struct RecordPool {
  int struct_index = -1;
  int64_t count = 0;
  std::vector<std::byte> bytes;
};

// A container is a view over one pool: a slice covers records [0, count)
// contiguously, a ptrlist holds explicit record indices (−1 encodes a null
// entry, trapping on access).
struct ContainerInput {
  ContainerKind kind = ContainerKind::Slice;
  int pool = -1;
  std::vector<int64_t> refs; // ptrlist only
};

struct RunInput {
  std::vector<RecordPool> pools;
  std::map<std::string, ContainerInput> containers; // keyed by entry parameter
  std::map<std::string, ScalarValue> scalars;
};

struct TraceEvent {
  int64_t record = 0; // record index within the container's pool
  int field = -1;
  bool is_write = false;
};

// Exact per-loop access trace: every read or write that reaches a container
// record through an annotated loop's binder (including inside callees the
// binder was passed to) is recorded, no sampling.
struct LoopTrace {
  int loop_id = 0;
  std::vector<TraceEvent> events;
  std::set<int> fields_read;
  std::set<int> fields_written;
};

struct RunResult {
  std::vector<RecordPool> pools; // final contents, same order as the input
  std::optional<ScalarValue> ret;
  std::vector<LoopTrace> traces; // traced runs only
  // Instrumentation: number of scalar slots written into container records
  // over the whole run (buffer writes do not count).
  int64_t record_writes = 0;
};

// Runtime trap (division by zero on integers, out-of-bounds index, null
// ptrlist entry, missing input, ...). Carries the source location.
struct InterpError : std::runtime_error {
  SourceLoc loc;
  InterpError(SourceLoc l, const std::string &msg) : std::runtime_error(msg), loc(l) {}
};

RunResult interpret(const Module &m, const std::string &entry, const RunInput &input);
RunResult interpret_traced(const Module &m, const std::string &entry, const RunInput &input);

// Typed accessors into pool bytes, shared with tests and the JSON front.
double record_get_f64(const Module &m, const RecordPool &p, int64_t rec, int field, int lane = 0);
int64_t record_get_i64(const Module &m, const RecordPool &p, int64_t rec, int field);
bool record_get_bool(const Module &m, const RecordPool &p, int64_t rec, int field);
void record_set_f64(const Module &m, RecordPool &p, int64_t rec, int field, double v, int lane = 0);
void record_set_i64(const Module &m, RecordPool &p, int64_t rec, int field, int64_t v);
void record_set_bool(const Module &m, RecordPool &p, int64_t rec, int field, bool v);

} // namespace soaview
