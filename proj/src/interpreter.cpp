#include "soaview/interpreter.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>

namespace soaview {

namespace {

size_t field_offset(const Module &m, const RecordPool &p, int64_t rec, int field, int lane) {
  const StructDef &st = m.structs[p.struct_index];
  const FieldDef &f = st.fields[field];
  return static_cast<size_t>(rec) * st.record_size + f.byte_offset +
         static_cast<size_t>(lane) * 8;
}

} // namespace

double record_get_f64(const Module &m, const RecordPool &p, int64_t rec, int field, int lane) {
  double v;
  std::memcpy(&v, p.bytes.data() + field_offset(m, p, rec, field, lane), 8);
  return v;
}

int64_t record_get_i64(const Module &m, const RecordPool &p, int64_t rec, int field) {
  int64_t v;
  std::memcpy(&v, p.bytes.data() + field_offset(m, p, rec, field, 0), 8);
  return v;
}

bool record_get_bool(const Module &m, const RecordPool &p, int64_t rec, int field) {
  int32_t v;
  std::memcpy(&v, p.bytes.data() + field_offset(m, p, rec, field, 0), 4);
  return v != 0;
}

void record_set_f64(const Module &m, RecordPool &p, int64_t rec, int field, double v, int lane) {
  std::memcpy(p.bytes.data() + field_offset(m, p, rec, field, lane), &v, 8);
}

void record_set_i64(const Module &m, RecordPool &p, int64_t rec, int field, int64_t v) {
  std::memcpy(p.bytes.data() + field_offset(m, p, rec, field, 0), &v, 8);
}

void record_set_bool(const Module &m, RecordPool &p, int64_t rec, int field, bool v) {
  int32_t x = v ? 1 : 0;
  std::memcpy(p.bytes.data() + field_offset(m, p, rec, field, 0), &x, 4);
}

namespace {

struct BufferStorage {
  Scalar kind = Scalar::F64;
  int arity = 0; // 0 scalar elements, k lanes otherwise
  int64_t len = 0;
  std::vector<double> f;
  std::vector<int64_t> i;
  std::vector<uint8_t> b;
};

struct RecordRef {
  int pool = -1;
  int64_t rec = 0;
  int trace = -1; // annotated loop id whose binder produced this reference
};

struct ContVal {
  ContainerKind kind = ContainerKind::Slice;
  int pool = -1;
  std::shared_ptr<const std::vector<int64_t>> refs;
};

struct Value {
  enum Kind { Empty, Sc, Rec, Buf, Cont } k = Empty;
  ScalarValue s;
  RecordRef r;
  std::shared_ptr<BufferStorage> buf;
  ContVal c;

  static Value scalar(ScalarValue v) {
    Value x;
    x.k = Sc;
    x.s = v;
    return x;
  }
};

enum class Flow { Normal, Returned };

class Interp {
public:
  Interp(const Module &m, bool tracing) : m_(m), tracing_(tracing) {
    int next = 1;
    for (const auto &fn : m_.fns)
      if (!fn.is_extern) number_loops(fn.body, next);
  }

  RunResult run(const std::string &entry, const RunInput &input) {
    const FunctionDef *fn = m_.find_fn(entry);
    if (!fn) throw InterpError({}, "no function named '" + entry + "'");
    if (fn->is_extern) throw InterpError(fn->loc, "entry '" + entry + "' is extern");
    pools_ = input.pools;
    for (auto &p : pools_) {
      if (p.struct_index < 0 || p.struct_index >= static_cast<int>(m_.structs.size()))
        throw InterpError({}, "pool references an unknown struct");
      size_t need = static_cast<size_t>(p.count) * m_.structs[p.struct_index].record_size;
      if (p.bytes.size() < need) throw InterpError({}, "pool byte storage is too small");
    }

    std::vector<Value> args;
    for (const auto &p : fn->params) {
      switch (p.kind) {
      case ParamKind::ScalarVal: {
        auto it = input.scalars.find(p.name);
        if (it == input.scalars.end())
          throw InterpError(p.loc, "missing scalar input '" + p.name + "'");
        if (it->second.kind != p.scalar)
          throw InterpError(p.loc, "scalar input '" + p.name + "' has the wrong type");
        args.push_back(Value::scalar(it->second));
        break;
      }
      case ParamKind::Container: {
        auto it = input.containers.find(p.name);
        if (it == input.containers.end())
          throw InterpError(p.loc, "missing container input '" + p.name + "'");
        const ContainerInput &ci = it->second;
        if (ci.kind != p.ckind)
          throw InterpError(p.loc, "container input '" + p.name + "' has the wrong kind");
        if (ci.pool < 0 || ci.pool >= static_cast<int>(pools_.size()))
          throw InterpError(p.loc, "container input '" + p.name + "' names no pool");
        if (pools_[ci.pool].struct_index != p.struct_index)
          throw InterpError(p.loc, "container input '" + p.name + "' has the wrong struct");
        Value v;
        v.k = Value::Cont;
        v.c.kind = ci.kind;
        v.c.pool = ci.pool;
        if (ci.kind == ContainerKind::PtrList) {
          for (int64_t r : ci.refs)
            if (r != -1 && (r < 0 || r >= pools_[ci.pool].count))
              throw InterpError(p.loc, "ptrlist input '" + p.name + "' is out of range");
          v.c.refs = std::make_shared<const std::vector<int64_t>>(ci.refs);
        }
        args.push_back(std::move(v));
        break;
      }
      default:
        throw InterpError(p.loc, "entry parameter '" + p.name +
                                     "' must be a scalar or a container");
      }
    }

    RunResult out;
    auto ret = call_fn(static_cast<int>(fn - m_.fns.data()), std::move(args));
    out.pools = std::move(pools_);
    out.ret = ret;
    out.traces = std::move(traces_);
    out.record_writes = record_writes_;
    return out;
  }

private:
  const Module &m_;
  bool tracing_;
  std::vector<RecordPool> pools_;
  std::map<const Stmt *, int> loop_ids_;
  std::map<int, size_t> trace_index_;
  std::vector<LoopTrace> traces_;
  int64_t record_writes_ = 0;

  struct Frame {
    int fn_index = -1;
    std::vector<Value> slots;
  };
  std::vector<Frame> frames_;

  // live indexed views: element accesses through this container slot of this
  // frame are accesses through the loop's binder
  struct IdxCtx {
    int loop_id;
    int slot;
    size_t frame;
  };
  std::vector<IdxCtx> idx_ctx_;

  std::optional<ScalarValue> ret_val_;

  void number_loops(const std::vector<StmtPtr> &body, int &next) {
    for (const auto &sp : body) {
      const Stmt &s = *sp;
      if (s.kind == StmtKind::For && s.ann != LoopAnn::None) loop_ids_[&s] = next++;
      number_loops(s.body, next);
      number_loops(s.els, next);
    }
  }

  LoopTrace &trace_for(int loop_id) {
    auto it = trace_index_.find(loop_id);
    if (it != trace_index_.end()) return traces_[it->second];
    trace_index_[loop_id] = traces_.size();
    traces_.push_back({});
    traces_.back().loop_id = loop_id;
    return traces_.back();
  }

  void trace_read(const RecordRef &r, int field) {
    if (!tracing_ || r.trace < 0) return;
    LoopTrace &t = trace_for(r.trace);
    t.events.push_back({r.rec, field, false});
    t.fields_read.insert(field);
  }

  void trace_write(const RecordRef &r, int field) {
    if (!tracing_ || r.trace < 0) return;
    LoopTrace &t = trace_for(r.trace);
    t.events.push_back({r.rec, field, true});
    t.fields_written.insert(field);
  }

  [[noreturn]] void trap(SourceLoc loc, const std::string &msg) const {
    throw InterpError(loc, msg);
  }

  std::optional<ScalarValue> call_fn(int fn_index, std::vector<Value> args) {
    const FunctionDef &fn = m_.fns[fn_index];
    if (fn.is_extern)
      trap(fn.loc, "call to extern function '" + fn.name + "' (no definition)");
    if (frames_.size() > 512) trap(fn.loc, "call stack exhausted");
    Frame fr;
    fr.fn_index = fn_index;
    fr.slots.resize(fn.num_slots);
    for (size_t i = 0; i < fn.params.size(); ++i) fr.slots[fn.params[i].slot] = std::move(args[i]);
    frames_.push_back(std::move(fr));
    ret_val_.reset();
    Flow f = exec_stmts(fn.body);
    std::optional<ScalarValue> ret;
    if (f == Flow::Returned) ret = ret_val_;
    frames_.pop_back();
    if (fn.has_ret && !ret) trap(fn.loc, "function '" + fn.name + "' fell off the end");
    return ret;
  }

  Frame &frame() { return frames_.back(); }

  Flow exec_stmts(const std::vector<StmtPtr> &body) {
    for (const auto &s : body)
      if (exec_stmt(*s) == Flow::Returned) return Flow::Returned;
    return Flow::Normal;
  }

  Flow exec_stmt(const Stmt &s) {
    switch (s.kind) {
    case StmtKind::Let:
      frame().slots[s.slot] = Value::scalar(eval_scalar(*s.e1));
      return Flow::Normal;
    case StmtKind::BufDecl: {
      int64_t len = eval_scalar(*s.e1).i;
      if (len < 0) trap(s.loc, "buffer '" + s.name + "' declared with negative length");
      auto st = std::make_shared<BufferStorage>();
      st->kind = s.scalar;
      st->arity = s.vec_arity;
      st->len = len;
      size_t n = static_cast<size_t>(len) * (s.vec_arity > 0 ? s.vec_arity : 1);
      switch (s.scalar) {
      case Scalar::F64: st->f.assign(n, 0.0); break;
      case Scalar::I64: st->i.assign(n, 0); break;
      case Scalar::Bool: st->b.assign(n, 0); break;
      }
      Value v;
      v.k = Value::Buf;
      v.buf = std::move(st);
      frame().slots[s.slot] = std::move(v);
      return Flow::Normal;
    }
    case StmtKind::Assign: exec_assign(s); return Flow::Normal;
    case StmtKind::If:
      if (eval_scalar(*s.e1).b) return exec_stmts(s.body);
      return exec_stmts(s.els);
    case StmtKind::For: return exec_for(s);
    case StmtKind::ExprStmt: eval(*s.e1); return Flow::Normal;
    case StmtKind::Return:
      ret_val_.reset();
      if (s.e1) ret_val_ = eval_scalar(*s.e1);
      return Flow::Returned;
    case StmtKind::Block: return exec_stmts(s.body);
    }
    return Flow::Normal;
  }

  Flow exec_for(const Stmt &s) {
    int loop_id = 0;
    if (auto it = loop_ids_.find(&s); it != loop_ids_.end()) loop_id = it->second;
    if (s.is_range) {
      int64_t lo = eval_scalar(*s.e1).i;
      int64_t hi = eval_scalar(*s.e2).i;
      bool ctx = false;
      if (loop_id > 0 && !s.soa_target.empty()) {
        const FunctionDef &fn = m_.fns[frame().fn_index];
        int pi = fn.param_index(s.soa_target);
        if (pi >= 0) {
          idx_ctx_.push_back({loop_id, fn.params[pi].slot, frames_.size() - 1});
          ctx = true;
        }
      }
      Flow out = Flow::Normal;
      for (int64_t i = lo; i < hi; ++i) {
        frame().slots[s.binder_slot] = Value::scalar(ScalarValue::of_i64(i));
        if (exec_stmts(s.body) == Flow::Returned) {
          out = Flow::Returned;
          break;
        }
      }
      if (ctx) idx_ctx_.pop_back();
      return out;
    }
    Value cv = eval(*s.e1);
    int64_t n = container_len(cv.c);
    for (int64_t i = 0; i < n; ++i) {
      RecordRef ref = element(cv.c, i, s.loc);
      if (loop_id > 0) ref.trace = loop_id;
      Value b;
      b.k = Value::Rec;
      b.r = ref;
      frame().slots[s.binder_slot] = b;
      if (exec_stmts(s.body) == Flow::Returned) return Flow::Returned;
    }
    return Flow::Normal;
  }

  int64_t container_len(const ContVal &c) const {
    if (c.kind == ContainerKind::PtrList) return c.refs ? static_cast<int64_t>(c.refs->size()) : 0;
    return pools_[c.pool].count;
  }

  RecordRef element(const ContVal &c, int64_t i, SourceLoc loc) {
    if (c.kind == ContainerKind::PtrList) {
      if (!c.refs || i < 0 || i >= static_cast<int64_t>(c.refs->size()))
        trap(loc, "ptrlist index out of range");
      int64_t r = (*c.refs)[i];
      if (r == -1) trap(loc, "null ptrlist entry dereferenced");
      return {c.pool, r, -1};
    }
    if (i < 0 || i >= pools_[c.pool].count) trap(loc, "container index out of range");
    return {c.pool, i, -1};
  }

  // ----- expression evaluation -----

  ScalarValue eval_scalar(const Expr &e) {
    Value v = eval(e);
    return v.s;
  }

  Value eval(const Expr &e) {
    switch (e.kind) {
    case ExprKind::FloatLit: return Value::scalar(ScalarValue::of_f64(e.fval));
    case ExprKind::IntLit: return Value::scalar(ScalarValue::of_i64(e.ival));
    case ExprKind::BoolLit: return Value::scalar(ScalarValue::of_bool(e.bval));
    case ExprKind::Var: return frame().slots[e.slot];
    case ExprKind::Field: {
      RecordRef r = eval(*e.a).r;
      return Value::scalar(load_field(r, e.field_index, 0, e.loc));
    }
    case ExprKind::Index: return eval_index(e);
    case ExprKind::Unary: {
      ScalarValue v = eval_scalar(*e.a);
      if (e.uop == UnOp::Neg)
        return Value::scalar(v.kind == Scalar::F64 ? ScalarValue::of_f64(-v.f)
                                                   : ScalarValue::of_i64(-v.i));
      return Value::scalar(ScalarValue::of_bool(!v.b));
    }
    case ExprKind::Binary: return eval_binary(e);
    case ExprKind::Call: return eval_call(e);
    }
    return {};
  }

  Value eval_index(const Expr &e) {
    // vector lane through a record: p.v[k]
    if (e.a->kind == ExprKind::Field && e.a->type.cat == ValueType::VecField) {
      RecordRef r = eval(*e.a->a).r;
      int lane = lane_check(*e.b, e.a->type.vec_arity);
      return Value::scalar(load_field(r, e.a->field_index, lane, e.loc));
    }
    Value base = eval(*e.a);
    if (base.k == Value::Cont) {
      int64_t i = eval_scalar(*e.b).i;
      RecordRef ref = element(base.c, i, e.loc);
      if (e.a->kind == ExprKind::Var) {
        for (auto it = idx_ctx_.rbegin(); it != idx_ctx_.rend(); ++it) {
          if (it->slot == e.a->slot && it->frame == frames_.size() - 1) {
            ref.trace = it->loop_id;
            break;
          }
        }
      }
      Value v;
      v.k = Value::Rec;
      v.r = ref;
      return v;
    }
    // vector lane through a buffer: vbuf[i][k]
    if (e.a->type.cat == ValueType::VecField && e.a->kind == ExprKind::Index) {
      auto buf = eval(*e.a->a).buf;
      int64_t i = buf_index(*buf, *e.a->b, e.loc);
      int lane = lane_check(*e.b, buf->arity);
      return Value::scalar(buf_load(*buf, i * buf->arity + lane));
    }
    // scalar buffer element
    int64_t i = buf_index(*base.buf, *e.b, e.loc);
    return Value::scalar(buf_load(*base.buf, i));
  }

  int lane_check(const Expr &laneExpr, int arity) {
    int64_t lane = eval_scalar(laneExpr).i;
    if (lane < 0 || lane >= arity) trap(laneExpr.loc, "vector lane out of range");
    return static_cast<int>(lane);
  }

  int64_t buf_index(const BufferStorage &b, const Expr &idxExpr, SourceLoc loc) {
    int64_t i = eval_scalar(idxExpr).i;
    if (i < 0 || i >= b.len) trap(loc, "buffer index out of range");
    return i;
  }

  ScalarValue buf_load(const BufferStorage &b, int64_t flat) {
    switch (b.kind) {
    case Scalar::F64: return ScalarValue::of_f64(b.f[flat]);
    case Scalar::I64: return ScalarValue::of_i64(b.i[flat]);
    case Scalar::Bool: return ScalarValue::of_bool(b.b[flat] != 0);
    }
    return {};
  }

  ScalarValue load_field(const RecordRef &r, int field, int lane, SourceLoc loc) {
    RecordPool &p = pools_[r.pool];
    if (r.rec < 0 || r.rec >= p.count) trap(loc, "record index out of range");
    trace_read(r, field);
    const FieldDef &f = m_.structs[p.struct_index].fields[field];
    switch (f.kind) {
    case Scalar::F64: return ScalarValue::of_f64(record_get_f64(m_, p, r.rec, field, lane));
    case Scalar::I64: return ScalarValue::of_i64(record_get_i64(m_, p, r.rec, field));
    case Scalar::Bool: return ScalarValue::of_bool(record_get_bool(m_, p, r.rec, field));
    }
    return {};
  }

  void store_field(const RecordRef &r, int field, int lane, ScalarValue v, SourceLoc loc) {
    RecordPool &p = pools_[r.pool];
    if (r.rec < 0 || r.rec >= p.count) trap(loc, "record index out of range");
    trace_write(r, field);
    ++record_writes_;
    const FieldDef &f = m_.structs[p.struct_index].fields[field];
    switch (f.kind) {
    case Scalar::F64: record_set_f64(m_, p, r.rec, field, v.f, lane); break;
    case Scalar::I64: record_set_i64(m_, p, r.rec, field, v.i); break;
    case Scalar::Bool: record_set_bool(m_, p, r.rec, field, v.b); break;
    }
  }

  Value eval_binary(const Expr &e) {
    if (e.bop == BinOp::And) {
      if (!eval_scalar(*e.a).b) return Value::scalar(ScalarValue::of_bool(false));
      return Value::scalar(ScalarValue::of_bool(eval_scalar(*e.b).b));
    }
    if (e.bop == BinOp::Or) {
      if (eval_scalar(*e.a).b) return Value::scalar(ScalarValue::of_bool(true));
      return Value::scalar(ScalarValue::of_bool(eval_scalar(*e.b).b));
    }
    ScalarValue a = eval_scalar(*e.a);
    ScalarValue b = eval_scalar(*e.b);
    return Value::scalar(apply_binop(e.bop, a, b, e.loc));
  }

  ScalarValue apply_binop(BinOp op, ScalarValue a, ScalarValue b, SourceLoc loc) {
    switch (op) {
    case BinOp::Add:
      return a.kind == Scalar::F64 ? ScalarValue::of_f64(a.f + b.f)
                                   : ScalarValue::of_i64(a.i + b.i);
    case BinOp::Sub:
      return a.kind == Scalar::F64 ? ScalarValue::of_f64(a.f - b.f)
                                   : ScalarValue::of_i64(a.i - b.i);
    case BinOp::Mul:
      return a.kind == Scalar::F64 ? ScalarValue::of_f64(a.f * b.f)
                                   : ScalarValue::of_i64(a.i * b.i);
    case BinOp::Div:
      if (a.kind == Scalar::F64) return ScalarValue::of_f64(a.f / b.f);
      check_int_div(a.i, b.i, loc);
      return ScalarValue::of_i64(a.i / b.i);
    case BinOp::Mod:
      check_int_div(a.i, b.i, loc);
      return ScalarValue::of_i64(a.i % b.i);
    case BinOp::Eq:
      return ScalarValue::of_bool(a.kind == Scalar::F64   ? a.f == b.f
                                  : a.kind == Scalar::I64 ? a.i == b.i
                                                          : a.b == b.b);
    case BinOp::Ne:
      return ScalarValue::of_bool(a.kind == Scalar::F64   ? a.f != b.f
                                  : a.kind == Scalar::I64 ? a.i != b.i
                                                          : a.b != b.b);
    case BinOp::Lt:
      return ScalarValue::of_bool(a.kind == Scalar::F64 ? a.f < b.f : a.i < b.i);
    case BinOp::Le:
      return ScalarValue::of_bool(a.kind == Scalar::F64 ? a.f <= b.f : a.i <= b.i);
    case BinOp::Gt:
      return ScalarValue::of_bool(a.kind == Scalar::F64 ? a.f > b.f : a.i > b.i);
    case BinOp::Ge:
      return ScalarValue::of_bool(a.kind == Scalar::F64 ? a.f >= b.f : a.i >= b.i);
    default: return {};
    }
  }

  void check_int_div(int64_t a, int64_t b, SourceLoc loc) {
    if (b == 0) trap(loc, "integer division by zero");
    if (a == std::numeric_limits<int64_t>::min() && b == -1)
      trap(loc, "integer division overflow");
  }

  Value eval_call(const Expr &e) {
    switch (e.intr) {
    case Intrinsic::Len: {
      Value c = eval(*e.args[0]);
      return Value::scalar(ScalarValue::of_i64(container_len(c.c)));
    }
    case Intrinsic::Sqrt:
      return Value::scalar(ScalarValue::of_f64(std::sqrt(eval_scalar(*e.args[0]).f)));
    case Intrinsic::Abs:
      return Value::scalar(ScalarValue::of_f64(std::fabs(eval_scalar(*e.args[0]).f)));
    case Intrinsic::Floor:
      return Value::scalar(ScalarValue::of_f64(std::floor(eval_scalar(*e.args[0]).f)));
    case Intrinsic::Min: {
      double a = eval_scalar(*e.args[0]).f;
      double b = eval_scalar(*e.args[1]).f;
      return Value::scalar(ScalarValue::of_f64(std::fmin(a, b)));
    }
    case Intrinsic::Max: {
      double a = eval_scalar(*e.args[0]).f;
      double b = eval_scalar(*e.args[1]).f;
      return Value::scalar(ScalarValue::of_f64(std::fmax(a, b)));
    }
    case Intrinsic::None: break;
    }
    std::vector<Value> args;
    args.reserve(e.args.size());
    for (const auto &a : e.args) args.push_back(eval(*a));
    auto ret = call_fn(e.callee_index, std::move(args));
    if (!ret) return {};
    return Value::scalar(*ret);
  }

  // ----- assignment -----

  // The left-hand side address is resolved first, then the right-hand side,
  // and for compound assignment the old value is loaded last.
  template <class LoadOld>
  ScalarValue assign_value(const Stmt &s, LoadOld load_old) {
    ScalarValue v = eval_scalar(*s.e2);
    if (s.aop == AssignOp::Set) return v;
    ScalarValue old = load_old();
    switch (s.aop) {
    case AssignOp::Add: return apply_binop(BinOp::Add, old, v, s.loc);
    case AssignOp::Sub: return apply_binop(BinOp::Sub, old, v, s.loc);
    case AssignOp::Mul: return apply_binop(BinOp::Mul, old, v, s.loc);
    case AssignOp::Div: return apply_binop(BinOp::Div, old, v, s.loc);
    default: return v;
    }
  }

  void exec_assign(const Stmt &s) {
    const Expr &lhs = *s.e1;
    if (lhs.kind == ExprKind::Var) {
      ScalarValue v = assign_value(s, [&] { return frame().slots[lhs.slot].s; });
      frame().slots[lhs.slot] = Value::scalar(v);
      return;
    }
    if (lhs.kind == ExprKind::Field) {
      RecordRef r = eval(*lhs.a).r;
      ScalarValue v = assign_value(s, [&] { return load_field(r, lhs.field_index, 0, lhs.loc); });
      store_field(r, lhs.field_index, 0, v, lhs.loc);
      return;
    }
    // Index forms
    const Expr &ix = lhs;
    if (ix.a->kind == ExprKind::Field && ix.a->type.cat == ValueType::VecField) {
      RecordRef r = eval(*ix.a->a).r;
      int lane = lane_check(*ix.b, ix.a->type.vec_arity);
      ScalarValue v =
          assign_value(s, [&] { return load_field(r, ix.a->field_index, lane, ix.loc); });
      store_field(r, ix.a->field_index, lane, v, ix.loc);
      return;
    }
    if (ix.a->type.cat == ValueType::VecField && ix.a->kind == ExprKind::Index) {
      auto buf = eval(*ix.a->a).buf;
      int64_t i = buf_index(*buf, *ix.a->b, ix.loc);
      int lane = lane_check(*ix.b, buf->arity);
      int64_t flat = i * buf->arity + lane;
      ScalarValue v = assign_value(s, [&] { return buf_load(*buf, flat); });
      buf_store(*buf, flat, v);
      return;
    }
    auto buf = eval(*ix.a).buf;
    int64_t i = buf_index(*buf, *ix.b, ix.loc);
    ScalarValue v = assign_value(s, [&] { return buf_load(*buf, i); });
    buf_store(*buf, i, v);
  }

  void buf_store(BufferStorage &b, int64_t flat, ScalarValue v) {
    switch (b.kind) {
    case Scalar::F64: b.f[flat] = v.f; break;
    case Scalar::I64: b.i[flat] = v.i; break;
    case Scalar::Bool: b.b[flat] = v.b ? 1 : 0; break;
    }
  }
};

} // namespace

RunResult interpret(const Module &m, const std::string &entry, const RunInput &input) {
  return Interp(m, false).run(entry, input);
}

RunResult interpret_traced(const Module &m, const std::string &entry, const RunInput &input) {
  return Interp(m, true).run(entry, input);
}

} // namespace soaview
