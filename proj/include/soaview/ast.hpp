#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "soaview/diagnostics.hpp"

namespace soaview {

// Scalar kinds storable in record fields, lets and buffers.
// Record layout is packed: f64 and i64 take 8 bytes, bool takes a 4-byte
// word (flag and state fields are word-sized), f64[k] takes 8*k bytes.
enum class Scalar { F64, I64, Bool };

inline int scalar_size(Scalar s) { return s == Scalar::Bool ? 4 : 8; }

struct FieldDef {
  std::string name;
  Scalar kind = Scalar::F64;
  int vec_arity = 0; // 0 = scalar field, k >= 2 = f64[k]
  int byte_size = 0;
  int byte_offset = 0;
};

struct StructDef {
  std::string name;
  SourceLoc loc;
  std::vector<FieldDef> fields;
  int record_size = 0;

  int field_index(std::string_view n) const {
    for (size_t i = 0; i < fields.size(); ++i)
      if (fields[i].name == n) return static_cast<int>(i);
    return -1;
  }
};

enum class ContainerKind { Slice, PtrList };

enum class ParamKind {
  ScalarVal, // f64 / i64 / bool, by value
  StructRef, // &T, a reference to one record
  Container, // slice<T> or ptrlist<T>
  Buffer,    // f64[] / f64[k][] / i64[] / bool[] (generated clones)
};

struct Param {
  std::string name;
  ParamKind kind = ParamKind::ScalarVal;
  Scalar scalar = Scalar::F64; // ScalarVal / Buffer element kind
  int vec_arity = 0;           // Buffer of f64[k] slots
  int struct_index = -1;       // StructRef / Container, resolved by sema
  std::string name_of_struct;  // StructRef / Container, as written
  ContainerKind ckind = ContainerKind::Slice;
  int slot = -1; // frame slot, assigned by sema
  SourceLoc loc;
};

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class ExprKind { FloatLit, IntLit, BoolLit, Var, Field, Index, Unary, Binary, Call };

enum class BinOp { Add, Sub, Mul, Div, Mod, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnOp { Neg, Not };

enum class Intrinsic { None, Sqrt, Abs, Min, Max, Floor, Len };

// Static type of an expression, filled in by sema.
struct ValueType {
  enum Cat {
    Invalid,
    F64,
    I64,
    Bool,
    Record,   // reference to a record of structs[struct_index]
    VecField, // f64[k] field path, must be indexed before use
    Buffer,   // whole buffer, only valid as an indexing base
    Container // whole container, only valid under [] / len()
  };
  Cat cat = Invalid;
  int struct_index = -1;
  Scalar elem = Scalar::F64; // Buffer element kind
  int vec_arity = 0;         // VecField / Buffer-of-vector arity
  ContainerKind ckind = ContainerKind::Slice;

  bool is_scalar() const { return cat == F64 || cat == I64 || cat == Bool; }
  static ValueType scalar(Scalar s) {
    ValueType t;
    t.cat = s == Scalar::F64 ? F64 : (s == Scalar::I64 ? I64 : Bool);
    return t;
  }
  Scalar as_scalar() const {
    return cat == F64 ? Scalar::F64 : (cat == I64 ? Scalar::I64 : Scalar::Bool);
  }
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind;
  SourceLoc loc;

  double fval = 0.0;
  int64_t ival = 0;
  bool bval = false;

  std::string name; // Var / Call callee
  int slot = -1;    // Var: frame slot

  ExprPtr a, b; // Field: a = base; Index: a = base, b = index; Unary: a; Binary: a, b
  std::vector<ExprPtr> args; // Call

  int field_index = -1;  // Field
  int struct_index = -1; // Field: owning struct
  BinOp bop = BinOp::Add;
  UnOp uop = UnOp::Neg;
  Intrinsic intr = Intrinsic::None;
  int callee_index = -1; // Call: resolved function index (-1 for intrinsics)

  ValueType type;
};

ExprPtr clone_expr(const Expr &e);

// ---------------------------------------------------------------------------
// Statements
// ---------------------------------------------------------------------------

enum class StmtKind { Let, BufDecl, Assign, If, For, ExprStmt, Return, Block };
enum class AssignOp { Set, Add, Sub, Mul, Div };

// Loop annotations. Convert requests an SoA view around this loop,
// ConvertHoist(n) additionally lifts the view n loop levels out, and
// Offload marks the converted loop for device offload in the C backend.
enum class LoopAnn { None, Convert, ConvertHoist, Offload };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
  StmtKind kind;
  SourceLoc loc;

  // Let: name/scalar/e1 = init; BufDecl: name/scalar/vec_arity/e1 = length
  std::string name;
  Scalar scalar = Scalar::F64;
  int vec_arity = 0;
  int slot = -1;

  ExprPtr e1, e2, e3; // Assign: e1 = lhs, e2 = rhs; If: e1 = cond;
                      // For range: e1..e2; For container: e1; Return: e1
  AssignOp aop = AssignOp::Set;

  std::vector<StmtPtr> body; // If-then / For / Block
  std::vector<StmtPtr> els;  // If-else

  // For:
  bool is_range = false;     // true: `for i in lo..hi`, false: `for p in c`
  std::string binder;        // loop variable name
  int binder_slot = -1;
  LoopAnn ann = LoopAnn::None;
  int hoist = 0;             // ConvertHoist depth
  std::string soa_target;    // indexed form: annotated container param name
  int loop_id = -1;          // assigned during analysis, stable per program
  bool offload_mark = false; // rewritten main loop carries the offload request
  int view_id = -1;          // rewritten main loop: index into TransformResult::views
};

StmtPtr clone_stmt(const Stmt &s);

// ---------------------------------------------------------------------------
// Functions and modules
// ---------------------------------------------------------------------------

struct FunctionDef {
  std::string name;
  SourceLoc loc;
  std::vector<Param> params;
  bool has_ret = false;
  Scalar ret = Scalar::F64;
  bool is_extern = false;
  std::vector<StmtPtr> body;
  int num_slots = 0; // frame size, assigned by sema
  // @assume_disjoint assertions collected for this function's scope,
  // each naming two container parameters.
  std::vector<std::pair<std::string, std::string>> disjoint;

  int param_index(std::string_view n) const {
    for (size_t i = 0; i < params.size(); ++i)
      if (params[i].name == n) return static_cast<int>(i);
    return -1;
  }
};

struct Module {
  std::vector<StructDef> structs;
  std::vector<FunctionDef> fns;

  int struct_index(std::string_view n) const {
    for (size_t i = 0; i < structs.size(); ++i)
      if (structs[i].name == n) return static_cast<int>(i);
    return -1;
  }
  int fn_index(std::string_view n) const {
    for (size_t i = 0; i < fns.size(); ++i)
      if (fns[i].name == n) return static_cast<int>(i);
    return -1;
  }
  const FunctionDef *find_fn(std::string_view n) const {
    int i = fn_index(n);
    return i < 0 ? nullptr : &fns[i];
  }
};

Module clone_module(const Module &m);

// Structural equality, ignoring source locations and sema bookkeeping
// (slots, loop ids). Used by round-trip and idempotence tests.
bool structurally_equal(const Expr &a, const Expr &b);
bool structurally_equal(const Stmt &a, const Stmt &b);
bool structurally_equal(const Module &a, const Module &b);

} // namespace soaview
