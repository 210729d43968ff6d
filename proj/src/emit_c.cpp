#include "soaview/emit_c.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace soaview {

namespace {

std::string format_f64(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos) s += ".0";
  return s;
}

const char *c_scalar(Scalar s) {
  switch (s) {
  case Scalar::F64: return "double";
  case Scalar::I64: return "int64_t";
  case Scalar::Bool: return "int32_t";
  }
  return "double";
}

const char *binop_text(BinOp op) {
  switch (op) {
  case BinOp::Add: return "+";
  case BinOp::Sub: return "-";
  case BinOp::Mul: return "*";
  case BinOp::Div: return "/";
  case BinOp::Mod: return "%";
  case BinOp::Lt: return "<";
  case BinOp::Le: return "<=";
  case BinOp::Gt: return ">";
  case BinOp::Ge: return ">=";
  case BinOp::Eq: return "==";
  case BinOp::Ne: return "!=";
  case BinOp::And: return "&&";
  case BinOp::Or: return "||";
  }
  return "+";
}

// C precedence: equality binds looser than the relational operators, so the
// table cannot be shared with the KL printer.
int binop_prec(BinOp op) {
  switch (op) {
  case BinOp::Or: return 1;
  case BinOp::And: return 2;
  case BinOp::Eq:
  case BinOp::Ne: return 3;
  case BinOp::Lt:
  case BinOp::Le:
  case BinOp::Gt:
  case BinOp::Ge: return 4;
  case BinOp::Add:
  case BinOp::Sub: return 5;
  case BinOp::Mul:
  case BinOp::Div:
  case BinOp::Mod: return 6;
  }
  return 0;
}

constexpr int kUnaryPrec = 7;

void collect_stmt_names(const std::vector<StmtPtr> &body, std::set<std::string> &out) {
  for (const auto &sp : body) {
    const Stmt &s = *sp;
    if (s.kind == StmtKind::Let || s.kind == StmtKind::BufDecl) out.insert(s.name);
    if (s.kind == StmtKind::For) out.insert(s.binder);
    collect_stmt_names(s.body, out);
    collect_stmt_names(s.els, out);
  }
}

std::set<std::string> fn_identifiers(const FunctionDef &fn) {
  std::set<std::string> out;
  for (const auto &p : fn.params) out.insert(p.name);
  collect_stmt_names(fn.body, out);
  return out;
}

std::string claim(std::set<std::string> &taken, std::string want) {
  while (!taken.insert(want).second) want += "_x";
  return want;
}

bool writes_var(const std::vector<StmtPtr> &body, int slot) {
  for (const auto &sp : body) {
    const Stmt &s = *sp;
    if (s.kind == StmtKind::Assign && s.e1->kind == ExprKind::Var && s.e1->slot == slot)
      return true;
    if (writes_var(s.body, slot) || writes_var(s.els, slot)) return true;
  }
  return false;
}

bool has_inner_loop(const std::vector<StmtPtr> &body) {
  for (const auto &sp : body) {
    if (sp->kind == StmtKind::For) return true;
    if (has_inner_loop(sp->body) || has_inner_loop(sp->els)) return true;
  }
  return false;
}

void collect_local_slots(const std::vector<StmtPtr> &body, std::set<int> &out) {
  for (const auto &sp : body) {
    if (sp->kind == StmtKind::Let || sp->kind == StmtKind::BufDecl) out.insert(sp->slot);
    collect_local_slots(sp->body, out);
    collect_local_slots(sp->els, out);
  }
}

bool calls_stay_scalar(const Expr &e) {
  if (e.kind == ExprKind::Call && e.intr == Intrinsic::None) {
    for (const auto &a : e.args)
      if (!a->type.is_scalar()) return false;
  }
  if (e.a && !calls_stay_scalar(*e.a)) return false;
  if (e.b && !calls_stay_scalar(*e.b)) return false;
  for (const auto &a : e.args)
    if (!calls_stay_scalar(*a)) return false;
  return true;
}

// Host parallelization is only added when each iteration provably owns what
// it writes: stores go to loop-local scalars or to buffer lanes selected by
// the loop variable itself, and no callee smuggles a pointer out.
bool parallel_safe(const Stmt &loop, const std::set<int> &locals) {
  struct Walk {
    const Stmt &loop;
    const std::set<int> &locals;
    bool ok = true;

    void stmts(const std::vector<StmtPtr> &body) {
      for (const auto &sp : body) {
        if (!ok) return;
        const Stmt &s = *sp;
        if (s.kind == StmtKind::Return) ok = false;
        if (s.kind == StmtKind::Assign) {
          if (!safe_lhs(*s.e1)) ok = false;
        }
        if (s.e1 && s.kind != StmtKind::Assign && !calls_stay_scalar(*s.e1)) ok = false;
        if (s.kind == StmtKind::Assign && !calls_stay_scalar(*s.e2)) ok = false;
        else if (s.e2 && !calls_stay_scalar(*s.e2)) ok = false;
        stmts(s.body);
        stmts(s.els);
      }
    }

    bool safe_lhs(const Expr &lhs) {
      if (lhs.kind == ExprKind::Var) return locals.count(lhs.slot) != 0;
      if (lhs.kind == ExprKind::Index) {
        const Expr *base = lhs.a.get();
        const Expr *index = lhs.b.get();
        if (base->type.cat == ValueType::VecField && base->kind == ExprKind::Index) {
          index = base->b.get();
          base = base->a.get();
        }
        return base->kind == ExprKind::Var && base->type.cat == ValueType::Buffer &&
               index->kind == ExprKind::Var && index->slot == loop.binder_slot;
      }
      return false;
    }
  };
  Walk w{loop, locals};
  w.stmts(loop.body);
  return w.ok;
}

void collect_var_names(const std::vector<StmtPtr> &body, std::set<std::string> &out);

void collect_var_names_expr(const Expr &e, std::set<std::string> &out) {
  if (e.kind == ExprKind::Var) out.insert(e.name);
  if (e.a) collect_var_names_expr(*e.a, out);
  if (e.b) collect_var_names_expr(*e.b, out);
  for (const auto &a : e.args) collect_var_names_expr(*a, out);
}

void collect_var_names(const std::vector<StmtPtr> &body, std::set<std::string> &out) {
  for (const auto &sp : body) {
    const Stmt &s = *sp;
    if (s.e1) collect_var_names_expr(*s.e1, out);
    if (s.e2) collect_var_names_expr(*s.e2, out);
    collect_var_names(s.body, out);
    collect_var_names(s.els, out);
  }
}

class CEmitter {
public:
  CEmitter(const Module &m, const std::vector<ViewPlan> &views, const EmitCOptions &opts)
      : m_(m), views_(views), opts_(opts) {}

  std::string run() {
    out_ += "/* generated by soaview from " + opts_.source_name + " */\n";
    out_ += "#include <math.h>\n";
    out_ += "#include <stdint.h>\n";
    out_ += "#include <string.h>\n";
    if (opts_.offload == OffloadMode::Usm)
      out_ += "\n#pragma omp requires unified_shared_memory\n";
    for (const auto &sd : m_.structs) {
      out_ += "\n";
      print_struct(sd);
    }
    if (!m_.fns.empty()) out_ += "\n";
    for (const auto &fn : m_.fns) {
      print_signature(fn);
      out_ += ";\n";
    }
    for (const auto &fn : m_.fns) {
      if (fn.is_extern) continue;
      out_ += "\n";
      print_fn(fn);
    }
    return std::move(out_);
  }

private:
  const Module &m_;
  const std::vector<ViewPlan> &views_;
  EmitCOptions opts_;
  std::string out_;
  int indent_ = 0;
  const FunctionDef *fn_ = nullptr;
  std::set<std::string> taken_;

  void line_start() { out_.append(static_cast<size_t>(indent_) * 2, ' '); }

  // Records use the source layout verbatim (f64 and i64 are 8 bytes, bool is
  // a 4-byte flag, f64[k] is 8k bytes, no padding anywhere), so pool bytes
  // can be handed between the interpreter and compiled code unchanged.
  void print_struct(const StructDef &sd) {
    out_ += "#pragma pack(push, 1)\n";
    out_ += "typedef struct " + sd.name + " {\n";
    for (const auto &fd : sd.fields) {
      out_ += "  ";
      out_ += c_scalar(fd.kind);
      out_ += " " + fd.name;
      if (fd.vec_arity > 0) out_ += "[" + std::to_string(fd.vec_arity) + "]";
      out_ += ";\n";
    }
    out_ += "} " + sd.name + ";\n";
    out_ += "#pragma pack(pop)\n";
    out_ += "typedef struct { " + sd.name + " *p; int64_t n; } slice_" + sd.name + ";\n";
    out_ += "typedef struct { " + sd.name + " *const *refs; int64_t n; } ptrlist_" + sd.name +
            ";\n";
  }

  void print_param(const Param &p) {
    switch (p.kind) {
    case ParamKind::ScalarVal:
      out_ += c_scalar(p.scalar);
      out_ += " " + p.name;
      break;
    case ParamKind::StructRef: out_ += m_.structs[p.struct_index].name + " *" + p.name; break;
    case ParamKind::Container:
      out_ += (p.ckind == ContainerKind::Slice ? "slice_" : "ptrlist_");
      out_ += m_.structs[p.struct_index].name;
      out_ += " " + p.name;
      break;
    case ParamKind::Buffer:
      out_ += c_scalar(p.scalar);
      if (p.vec_arity > 0)
        out_ += " (*restrict " + p.name + ")[" + std::to_string(p.vec_arity) + "]";
      else
        out_ += " *restrict " + p.name;
      break;
    }
  }

  void print_signature(const FunctionDef &fn) {
    out_ += fn.has_ret ? c_scalar(fn.ret) : "void";
    out_ += " " + fn.name + "(";
    if (fn.params.empty()) out_ += "void";
    for (size_t i = 0; i < fn.params.size(); ++i) {
      if (i) out_ += ", ";
      print_param(fn.params[i]);
    }
    out_ += ")";
  }

  void print_fn(const FunctionDef &fn) {
    fn_ = &fn;
    taken_ = fn_identifiers(fn);
    print_signature(fn);
    out_ += " {\n";
    indent_ = 1;
    stmts(fn.body);
    out_ += "}\n";
  }

  void stmts(const std::vector<StmtPtr> &body) {
    for (const auto &s : body) stmt(*s);
  }

  void stmt(const Stmt &s) {
    switch (s.kind) {
    case StmtKind::Let:
      line_start();
      out_ += c_scalar(s.scalar);
      out_ += " " + s.name + " = ";
      expr(*s.e1);
      out_ += ";\n";
      return;
    case StmtKind::BufDecl: print_bufdecl(s); return;
    case StmtKind::Assign: {
      line_start();
      expr(*s.e1);
      const char *op = s.aop == AssignOp::Set   ? " = "
                       : s.aop == AssignOp::Add ? " += "
                       : s.aop == AssignOp::Sub ? " -= "
                       : s.aop == AssignOp::Mul ? " *= "
                                                : " /= ";
      out_ += op;
      expr(*s.e2);
      out_ += ";\n";
      return;
    }
    case StmtKind::If: print_if(s, true); return;
    case StmtKind::For: print_for(s); return;
    case StmtKind::ExprStmt:
      line_start();
      expr(*s.e1);
      out_ += ";\n";
      return;
    case StmtKind::Return:
      line_start();
      out_ += "return";
      if (s.e1) {
        out_ += " ";
        expr(*s.e1);
      }
      out_ += ";\n";
      return;
    case StmtKind::Block:
      line_start();
      out_ += "{\n";
      ++indent_;
      stmts(s.body);
      --indent_;
      line_start();
      out_ += "}\n";
      return;
    }
  }

  // Stack buffer over-allocated by an alignment slack, carved to a 64-byte
  // aligned typed pointer and zeroed, mirroring the interpreter's buffers.
  void print_bufdecl(const Stmt &s) {
    std::string raw = claim(taken_, s.name + "_raw");
    int esz = s.vec_arity > 0 ? 8 * s.vec_arity : (s.scalar == Scalar::Bool ? 4 : 8);
    std::string elem = std::to_string(esz);
    std::string bytes = "(size_t)(";
    {
      std::string saved = std::move(out_);
      out_.clear();
      expr(*s.e1);
      bytes += out_;
      out_ = std::move(saved);
    }
    bytes += ") * " + elem;
    line_start();
    out_ += "char " + raw + "[" + bytes + " + 63];\n";
    line_start();
    out_ += c_scalar(s.scalar);
    std::string cast;
    if (s.vec_arity > 0) {
      std::string k = std::to_string(s.vec_arity);
      out_ += " (*restrict " + s.name + ")[" + k + "] = (";
      out_ += c_scalar(s.scalar);
      out_ += " (*)[" + k + "])";
    } else {
      out_ += " *restrict " + s.name + " = (";
      out_ += c_scalar(s.scalar);
      out_ += " *)";
    }
    out_ += "(((uintptr_t)" + raw + " + 63) & ~(uintptr_t)63);\n";
    line_start();
    out_ += "memset(" + s.name + ", 0, " + bytes + ");\n";
  }

  void print_if(const Stmt &s, bool lead) {
    if (lead) line_start();
    out_ += "if (";
    expr(*s.e1);
    out_ += ") {\n";
    ++indent_;
    stmts(s.body);
    --indent_;
    line_start();
    if (s.els.empty()) {
      out_ += "}\n";
      return;
    }
    if (s.els.size() == 1 && s.els[0]->kind == StmtKind::If) {
      out_ += "} else ";
      print_if(*s.els[0], false);
      return;
    }
    out_ += "} else {\n";
    ++indent_;
    stmts(s.els);
    --indent_;
    line_start();
    out_ += "}\n";
  }

  bool bound_needs_temp(const Expr &e, const Stmt &loop) {
    if (e.kind == ExprKind::IntLit) return false;
    if (e.kind == ExprKind::Var) return writes_var(loop.body, e.slot);
    return true;
  }

  void print_for(const Stmt &s) {
    if (!s.is_range) {
      print_container_for(s);
      return;
    }
    std::string lo, hi;
    if (bound_needs_temp(*s.e1, s)) {
      lo = claim(taken_, s.binder + "_lo");
      line_start();
      out_ += "int64_t " + lo + " = ";
      expr(*s.e1);
      out_ += ";\n";
    }
    if (bound_needs_temp(*s.e2, s)) {
      hi = claim(taken_, s.binder + "_end");
      line_start();
      out_ += "int64_t " + hi + " = ";
      expr(*s.e2);
      out_ += ";\n";
    }
    print_loop_pragma(s);
    line_start();
    out_ += "for (int64_t " + s.binder + " = ";
    if (lo.empty())
      expr(*s.e1);
    else
      out_ += lo;
    out_ += "; " + s.binder + " < ";
    if (hi.empty())
      expr(*s.e2);
    else
      out_ += hi;
    out_ += "; ++" + s.binder + ") {\n";
    ++indent_;
    stmts(s.body);
    --indent_;
    line_start();
    out_ += "}\n";
  }

  void print_container_for(const Stmt &s) {
    const std::string &c = s.e1->name;
    bool ptrlist = s.e1->type.ckind == ContainerKind::PtrList;
    std::string it = claim(taken_, s.binder + "_it");
    line_start();
    out_ += "for (int64_t " + it + " = 0; " + it + " < " + c + ".n; ++" + it + ") {\n";
    ++indent_;
    line_start();
    const std::string &sname = m_.structs[s.e1->type.struct_index].name;
    if (ptrlist)
      out_ += sname + " *" + s.binder + " = " + c + ".refs[" + it + "];\n";
    else
      out_ += sname + " *" + s.binder + " = &" + c + ".p[" + it + "];\n";
    stmts(s.body);
    --indent_;
    line_start();
    out_ += "}\n";
  }

  // A rewritten loop body only touches buffer lanes selected by the loop
  // variable when the view came from a binder-form loop, so only those are
  // safe to parallelize on the host without a user annotation.
  bool binder_form_view(const Stmt &s) const {
    if (s.view_id < 0 || s.view_id >= static_cast<int>(views_.size())) return false;
    const ViewPlan &v = views_[s.view_id];
    return s.e1->kind == ExprKind::IntLit && s.e1->ival == 0 &&
           s.e2->kind == ExprKind::Var && s.e2->name == v.count_var;
  }

  void print_loop_pragma(const Stmt &s) {
    if (s.view_id < 0) return;
    bool device = s.offload_mark && opts_.offload != OffloadMode::Off;
    if (!device) {
      std::set<int> locals;
      collect_local_slots(s.body, locals);
      if (binder_form_view(s) && !has_inner_loop(s.body) && parallel_safe(s, locals)) {
        line_start();
        out_ += "#pragma omp parallel for\n";
      }
      return;
    }
    line_start();
    out_ += "#pragma omp target teams distribute parallel for";
    if (opts_.offload == OffloadMode::Map) print_map_clauses(s);
    out_ += "\n";
  }

  // Maps every view buffer the offloaded region touches: the loop's own view
  // plus any view hoisted to wrap it (those buffers are declared outside the
  // pragma and show up in the body by name).
  void print_map_clauses(const Stmt &s) {
    std::set<std::string> used;
    collect_var_names(s.body, used);
    std::string to, from, tofrom;
    for (size_t vi = 0; vi < views_.size(); ++vi) {
      const ViewPlan &v = views_[vi];
      bool touched = s.view_id == static_cast<int>(vi);
      for (const auto &b : v.buf_names)
        if (used.count(b)) touched = true;
      if (!touched) continue;
      for (size_t k = 0; k < v.all.size(); ++k) {
        bool g = std::binary_search(v.gather.begin(), v.gather.end(), v.all[k]);
        bool sc = std::binary_search(v.scatter.begin(), v.scatter.end(), v.all[k]);
        std::string section = v.buf_names[k] + "[0:" + v.count_var + "]";
        std::string &group = g && sc ? tofrom : (g ? to : from);
        if (!group.empty()) group += ", ";
        group += section;
      }
    }
    if (!to.empty()) out_ += " map(to: " + to + ")";
    if (!from.empty()) out_ += " map(from: " + from + ")";
    if (!tofrom.empty()) out_ += " map(tofrom: " + tofrom + ")";
  }

  // ----- expressions -----

  void expr(const Expr &e, int parent_prec = 0) {
    switch (e.kind) {
    case ExprKind::FloatLit: out_ += format_f64(e.fval); return;
    case ExprKind::IntLit:
      out_ += std::to_string(e.ival);
      if (e.ival > INT32_MAX || e.ival < INT32_MIN) out_ += "LL";
      return;
    case ExprKind::BoolLit: out_ += e.bval ? "1" : "0"; return;
    case ExprKind::Var: out_ += e.name; return;
    case ExprKind::Field: field_access(e); return;
    case ExprKind::Index: print_index(e); return;
    case ExprKind::Unary: {
      bool paren = parent_prec > kUnaryPrec;
      if (paren) out_ += "(";
      out_ += e.uop == UnOp::Neg ? "-" : "!";
      expr(*e.a, kUnaryPrec);
      if (paren) out_ += ")";
      return;
    }
    case ExprKind::Binary: {
      int prec = binop_prec(e.bop);
      bool paren = prec < parent_prec;
      if (paren) out_ += "(";
      expr(*e.a, prec);
      out_ += " ";
      out_ += binop_text(e.bop);
      out_ += " ";
      expr(*e.b, prec + 1);
      if (paren) out_ += ")";
      return;
    }
    case ExprKind::Call: print_call(e); return;
    }
  }

  // Record-typed expressions are either a pointer-valued variable (binder or
  // &T parameter) or a container element.
  void field_access(const Expr &e) {
    const Expr &base = *e.a;
    if (base.kind == ExprKind::Var) {
      out_ += base.name + "->" + e.name;
      return;
    }
    const std::string &c = base.a->name;
    if (base.a->type.ckind == ContainerKind::PtrList) {
      out_ += c + ".refs[";
      expr(*base.b);
      out_ += "]->" + e.name;
    } else {
      out_ += c + ".p[";
      expr(*base.b);
      out_ += "]." + e.name;
    }
  }

  void record_arg(const Expr &e) {
    if (e.kind == ExprKind::Var) {
      out_ += e.name;
      return;
    }
    const std::string &c = e.a->name;
    if (e.a->type.ckind == ContainerKind::PtrList) {
      out_ += c + ".refs[";
      expr(*e.b);
      out_ += "]";
    } else {
      out_ += "&" + c + ".p[";
      expr(*e.b);
      out_ += "]";
    }
  }

  void print_index(const Expr &e) {
    if (e.a->type.cat == ValueType::VecField) {
      if (e.a->kind == ExprKind::Field)
        field_access(*e.a);
      else
        print_index(*e.a);
      out_ += "[";
      expr(*e.b);
      out_ += "]";
      return;
    }
    // buffer element; container elements only appear under Field or as args
    expr(*e.a, kUnaryPrec + 1);
    out_ += "[";
    expr(*e.b);
    out_ += "]";
  }

  void print_call(const Expr &e) {
    switch (e.intr) {
    case Intrinsic::Len:
      expr(*e.args[0], kUnaryPrec + 1);
      out_ += ".n";
      return;
    case Intrinsic::Sqrt: out_ += "sqrt"; break;
    case Intrinsic::Abs: out_ += "fabs"; break;
    case Intrinsic::Min: out_ += "fmin"; break;
    case Intrinsic::Max: out_ += "fmax"; break;
    case Intrinsic::Floor: out_ += "floor"; break;
    case Intrinsic::None: out_ += e.name; break;
    }
    out_ += "(";
    for (size_t i = 0; i < e.args.size(); ++i) {
      if (i) out_ += ", ";
      if (e.args[i]->type.cat == ValueType::Record)
        record_arg(*e.args[i]);
      else
        expr(*e.args[i]);
    }
    out_ += ")";
  }
};

} // namespace

std::string emit_c(const Module &m, const std::vector<ViewPlan> &views,
                   const EmitCOptions &opts) {
  return CEmitter(m, views, opts).run();
}

} // namespace soaview
