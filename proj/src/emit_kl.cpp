#include "soaview/emit_kl.hpp"

#include <charconv>

namespace soaview {

namespace {

std::string format_f64(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

const char *scalar_name(Scalar s) {
  switch (s) {
  case Scalar::F64: return "f64";
  case Scalar::I64: return "i64";
  case Scalar::Bool: return "bool";
  }
  return "f64";
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

int binop_prec(BinOp op) {
  switch (op) {
  case BinOp::Or: return 1;
  case BinOp::And: return 2;
  case BinOp::Lt:
  case BinOp::Le:
  case BinOp::Gt:
  case BinOp::Ge:
  case BinOp::Eq:
  case BinOp::Ne: return 3;
  case BinOp::Add:
  case BinOp::Sub: return 4;
  case BinOp::Mul:
  case BinOp::Div:
  case BinOp::Mod: return 5;
  }
  return 0;
}

constexpr int kUnaryPrec = 6;

class Printer {
public:
  explicit Printer(const Module &m) : m_(m) {}

  std::string run() {
    for (size_t i = 0; i < m_.structs.size(); ++i) {
      if (i) out_ += "\n";
      print_struct(m_.structs[i]);
    }
    for (const auto &fn : m_.fns) {
      if (!out_.empty()) out_ += "\n";
      print_fn(fn);
    }
    return std::move(out_);
  }

  std::string take() { return std::move(out_); }

  void expr(const Expr &e, int parent_prec = 0) {
    switch (e.kind) {
    case ExprKind::FloatLit: out_ += format_f64(e.fval); return;
    case ExprKind::IntLit: out_ += std::to_string(e.ival); return;
    case ExprKind::BoolLit: out_ += e.bval ? "true" : "false"; return;
    case ExprKind::Var: out_ += e.name; return;
    case ExprKind::Field:
      expr(*e.a, kUnaryPrec + 1);
      out_ += ".";
      out_ += e.name;
      return;
    case ExprKind::Index:
      expr(*e.a, kUnaryPrec + 1);
      out_ += "[";
      expr(*e.b);
      out_ += "]";
      return;
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
      expr(*e.b, prec + 1); // left-associative
      if (paren) out_ += ")";
      return;
    }
    case ExprKind::Call:
      out_ += e.name;
      out_ += "(";
      for (size_t i = 0; i < e.args.size(); ++i) {
        if (i) out_ += ", ";
        expr(*e.args[i]);
      }
      out_ += ")";
      return;
    }
  }

private:
  const Module &m_;
  std::string out_;
  int indent_ = 0;
  const FunctionDef *fn_ = nullptr;
  bool disjoint_printed_ = false;

  void line_start() { out_.append(static_cast<size_t>(indent_) * 2, ' '); }

  void print_struct(const StructDef &sd) {
    out_ += "struct " + sd.name + " {\n";
    for (const auto &fd : sd.fields) {
      out_ += "  " + fd.name + ": ";
      out_ += scalar_name(fd.kind);
      if (fd.vec_arity > 0) out_ += "[" + std::to_string(fd.vec_arity) + "]";
      out_ += ";\n";
    }
    out_ += "}\n";
  }

  void print_param(const Param &p) {
    out_ += p.name + ": ";
    switch (p.kind) {
    case ParamKind::ScalarVal: out_ += scalar_name(p.scalar); break;
    case ParamKind::StructRef: out_ += "&" + m_.structs[p.struct_index].name; break;
    case ParamKind::Container:
      out_ += p.ckind == ContainerKind::Slice ? "slice<" : "ptrlist<";
      out_ += m_.structs[p.struct_index].name;
      out_ += ">";
      break;
    case ParamKind::Buffer:
      out_ += scalar_name(p.scalar);
      if (p.vec_arity > 0) out_ += "[" + std::to_string(p.vec_arity) + "]";
      out_ += "[]";
      break;
    }
  }

  void print_fn(const FunctionDef &fn) {
    fn_ = &fn;
    disjoint_printed_ = fn.disjoint.empty();
    if (fn.is_extern) out_ += "extern ";
    out_ += "fn " + fn.name + "(";
    for (size_t i = 0; i < fn.params.size(); ++i) {
      if (i) out_ += ", ";
      print_param(fn.params[i]);
    }
    out_ += ")";
    if (fn.has_ret) {
      out_ += " -> ";
      out_ += scalar_name(fn.ret);
    }
    if (fn.is_extern) {
      out_ += ";\n";
      return;
    }
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
      out_ += "let " + s.name + ": ";
      out_ += scalar_name(s.scalar);
      out_ += " = ";
      expr(*s.e1);
      out_ += ";\n";
      return;
    case StmtKind::BufDecl:
      line_start();
      out_ += "let " + s.name + ": ";
      out_ += scalar_name(s.scalar);
      if (s.vec_arity > 0) out_ += "[" + std::to_string(s.vec_arity) + "]";
      out_ += "[";
      expr(*s.e1);
      out_ += "];\n";
      return;
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

  void print_if(const Stmt &s, bool fresh_line) {
    if (fresh_line) line_start();
    out_ += "if ";
    expr(*s.e1);
    out_ += " {\n";
    ++indent_;
    stmts(s.body);
    --indent_;
    line_start();
    out_ += "}";
    if (!s.els.empty()) {
      if (s.els.size() == 1 && s.els[0]->kind == StmtKind::If) {
        out_ += " else ";
        print_if(*s.els[0], false);
        return;
      }
      out_ += " else {\n";
      ++indent_;
      stmts(s.els);
      --indent_;
      line_start();
      out_ += "}";
    }
    out_ += "\n";
  }

  void print_for(const Stmt &s) {
    if (!disjoint_printed_) {
      disjoint_printed_ = true;
      for (const auto &[a, b] : fn_->disjoint) {
        line_start();
        out_ += "@assume_disjoint(" + a + ", " + b + ")\n";
      }
    }
    if (s.ann != LoopAnn::None) {
      line_start();
      switch (s.ann) {
      case LoopAnn::Convert: out_ += "@soa_convert\n"; break;
      case LoopAnn::ConvertHoist:
        out_ += "@soa_convert_hoist(" + std::to_string(s.hoist) + ")\n";
        break;
      case LoopAnn::Offload: out_ += "@soa_offload\n"; break;
      case LoopAnn::None: break;
      }
    }
    if (!s.soa_target.empty()) {
      line_start();
      out_ += "@soa_target(" + s.soa_target + ")\n";
    }
    line_start();
    out_ += "for " + s.binder + " in ";
    if (s.is_range) {
      expr(*s.e1, kUnaryPrec + 1);
      out_ += "..";
      expr(*s.e2, kUnaryPrec + 1);
    } else {
      expr(*s.e1);
    }
    out_ += " {\n";
    ++indent_;
    stmts(s.body);
    --indent_;
    line_start();
    out_ += "}\n";
  }
};

} // namespace

std::string emit_kl(const Module &m) { return Printer(m).run(); }

std::string emit_kl_expr(const Expr &e) {
  static const Module kEmpty;
  Printer p(kEmpty);
  p.expr(e);
  return p.take();
}

} // namespace soaview
