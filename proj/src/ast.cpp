#include "soaview/ast.hpp"

namespace soaview {

ExprPtr clone_expr(const Expr &e) {
  auto out = std::make_unique<Expr>();
  out->kind = e.kind;
  out->loc = e.loc;
  out->fval = e.fval;
  out->ival = e.ival;
  out->bval = e.bval;
  out->name = e.name;
  out->slot = e.slot;
  if (e.a) out->a = clone_expr(*e.a);
  if (e.b) out->b = clone_expr(*e.b);
  out->args.reserve(e.args.size());
  for (const auto &arg : e.args) out->args.push_back(clone_expr(*arg));
  out->field_index = e.field_index;
  out->struct_index = e.struct_index;
  out->bop = e.bop;
  out->uop = e.uop;
  out->intr = e.intr;
  out->callee_index = e.callee_index;
  out->type = e.type;
  return out;
}

StmtPtr clone_stmt(const Stmt &s) {
  auto out = std::make_unique<Stmt>();
  out->kind = s.kind;
  out->loc = s.loc;
  out->name = s.name;
  out->scalar = s.scalar;
  out->vec_arity = s.vec_arity;
  out->slot = s.slot;
  if (s.e1) out->e1 = clone_expr(*s.e1);
  if (s.e2) out->e2 = clone_expr(*s.e2);
  if (s.e3) out->e3 = clone_expr(*s.e3);
  out->aop = s.aop;
  out->body.reserve(s.body.size());
  for (const auto &b : s.body) out->body.push_back(clone_stmt(*b));
  out->els.reserve(s.els.size());
  for (const auto &b : s.els) out->els.push_back(clone_stmt(*b));
  out->is_range = s.is_range;
  out->binder = s.binder;
  out->binder_slot = s.binder_slot;
  out->ann = s.ann;
  out->hoist = s.hoist;
  out->soa_target = s.soa_target;
  out->loop_id = s.loop_id;
  out->offload_mark = s.offload_mark;
  out->view_id = s.view_id;
  return out;
}

Module clone_module(const Module &m) {
  Module out;
  out.structs = m.structs;
  out.fns.reserve(m.fns.size());
  for (const auto &f : m.fns) {
    FunctionDef g;
    g.name = f.name;
    g.loc = f.loc;
    g.params = f.params;
    g.has_ret = f.has_ret;
    g.ret = f.ret;
    g.is_extern = f.is_extern;
    g.num_slots = f.num_slots;
    g.disjoint = f.disjoint;
    g.body.reserve(f.body.size());
    for (const auto &s : f.body) g.body.push_back(clone_stmt(*s));
    out.fns.push_back(std::move(g));
  }
  return out;
}

namespace {

bool eq(const ExprPtr &a, const ExprPtr &b) {
  if (!a || !b) return !a && !b;
  return structurally_equal(*a, *b);
}

bool eq(const std::vector<StmtPtr> &a, const std::vector<StmtPtr> &b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!structurally_equal(*a[i], *b[i])) return false;
  return true;
}

} // namespace

bool structurally_equal(const Expr &a, const Expr &b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
  case ExprKind::FloatLit:
    // literal identity must be bit-exact for round-trip guarantees
    return a.fval == b.fval || (a.fval != a.fval && b.fval != b.fval);
  case ExprKind::IntLit: return a.ival == b.ival;
  case ExprKind::BoolLit: return a.bval == b.bval;
  case ExprKind::Var: return a.name == b.name;
  case ExprKind::Field: return a.name == b.name && eq(a.a, b.a);
  case ExprKind::Index: return eq(a.a, b.a) && eq(a.b, b.b);
  case ExprKind::Unary: return a.uop == b.uop && eq(a.a, b.a);
  case ExprKind::Binary: return a.bop == b.bop && eq(a.a, b.a) && eq(a.b, b.b);
  case ExprKind::Call: {
    if (a.name != b.name || a.args.size() != b.args.size()) return false;
    for (size_t i = 0; i < a.args.size(); ++i)
      if (!structurally_equal(*a.args[i], *b.args[i])) return false;
    return true;
  }
  }
  return false;
}

bool structurally_equal(const Stmt &a, const Stmt &b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
  case StmtKind::Let:
    return a.name == b.name && a.scalar == b.scalar && eq(a.e1, b.e1);
  case StmtKind::BufDecl:
    return a.name == b.name && a.scalar == b.scalar && a.vec_arity == b.vec_arity &&
           eq(a.e1, b.e1);
  case StmtKind::Assign: return a.aop == b.aop && eq(a.e1, b.e1) && eq(a.e2, b.e2);
  case StmtKind::If: return eq(a.e1, b.e1) && eq(a.body, b.body) && eq(a.els, b.els);
  case StmtKind::For:
    return a.is_range == b.is_range && a.binder == b.binder && a.ann == b.ann &&
           a.hoist == b.hoist && a.soa_target == b.soa_target && eq(a.e1, b.e1) &&
           eq(a.e2, b.e2) && eq(a.body, b.body);
  case StmtKind::ExprStmt: return eq(a.e1, b.e1);
  case StmtKind::Return: return eq(a.e1, b.e1);
  case StmtKind::Block: return eq(a.body, b.body);
  }
  return false;
}

bool structurally_equal(const Module &a, const Module &b) {
  if (a.structs.size() != b.structs.size() || a.fns.size() != b.fns.size()) return false;
  for (size_t i = 0; i < a.structs.size(); ++i) {
    const auto &sa = a.structs[i];
    const auto &sb = b.structs[i];
    if (sa.name != sb.name || sa.fields.size() != sb.fields.size()) return false;
    for (size_t j = 0; j < sa.fields.size(); ++j) {
      const auto &fa = sa.fields[j];
      const auto &fb = sb.fields[j];
      if (fa.name != fb.name || fa.kind != fb.kind || fa.vec_arity != fb.vec_arity)
        return false;
    }
  }
  for (size_t i = 0; i < a.fns.size(); ++i) {
    const auto &fa = a.fns[i];
    const auto &fb = b.fns[i];
    if (fa.name != fb.name || fa.is_extern != fb.is_extern || fa.has_ret != fb.has_ret)
      return false;
    if (fa.has_ret && fa.ret != fb.ret) return false;
    if (fa.params.size() != fb.params.size()) return false;
    for (size_t j = 0; j < fa.params.size(); ++j) {
      const auto &pa = fa.params[j];
      const auto &pb = fb.params[j];
      if (pa.name != pb.name || pa.kind != pb.kind) return false;
      if (pa.kind == ParamKind::ScalarVal && pa.scalar != pb.scalar) return false;
      if (pa.kind == ParamKind::Buffer &&
          (pa.scalar != pb.scalar || pa.vec_arity != pb.vec_arity))
        return false;
      if (pa.kind == ParamKind::Container && pa.ckind != pb.ckind) return false;
      if ((pa.kind == ParamKind::StructRef || pa.kind == ParamKind::Container) &&
          pa.struct_index != pb.struct_index)
        return false;
    }
    if (fa.disjoint != fb.disjoint) return false;
    if (!eq(fa.body, fb.body)) return false;
  }
  return true;
}

} // namespace soaview
