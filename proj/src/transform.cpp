#include "soaview/transform.hpp"

#include <algorithm>
#include <map>

#include "soaview/parser.hpp"

namespace soaview {

std::string mangle(const std::string &base, int id) {
  return base + "_" + std::to_string(id);
}

namespace {

ExprPtr mkvar(const std::string &name) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Var;
  e->name = name;
  return e;
}

ExprPtr mkint(long long v) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::IntLit;
  e->ival = v;
  return e;
}

ExprPtr mkindex(ExprPtr a, ExprPtr b) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Index;
  e->a = std::move(a);
  e->b = std::move(b);
  return e;
}

ExprPtr mkfield(ExprPtr base, const std::string &field) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Field;
  e->a = std::move(base);
  e->name = field;
  return e;
}

ExprPtr mklen(const std::string &container) {
  auto e = std::make_unique<Expr>();
  e->kind = ExprKind::Call;
  e->name = "len";
  e->args.push_back(mkvar(container));
  return e;
}

StmtPtr mklet_i64(const std::string &name, ExprPtr init, SourceLoc loc) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::Let;
  s->loc = loc;
  s->name = name;
  s->scalar = Scalar::I64;
  s->e1 = std::move(init);
  return s;
}

StmtPtr mkbufdecl(const std::string &name, Scalar kind, int vec_arity, ExprPtr len,
                  SourceLoc loc) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::BufDecl;
  s->loc = loc;
  s->name = name;
  s->scalar = kind;
  s->vec_arity = vec_arity;
  s->e1 = std::move(len);
  return s;
}

StmtPtr mkassign(ExprPtr lhs, ExprPtr rhs, SourceLoc loc) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::Assign;
  s->loc = loc;
  s->aop = AssignOp::Set;
  s->e1 = std::move(lhs);
  s->e2 = std::move(rhs);
  return s;
}

StmtPtr mkrange_for(const std::string &binder, ExprPtr lo, ExprPtr hi, SourceLoc loc) {
  auto s = std::make_unique<Stmt>();
  s->kind = StmtKind::For;
  s->loc = loc;
  s->is_range = true;
  s->binder = binder;
  s->e1 = std::move(lo);
  s->e2 = std::move(hi);
  return s;
}

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

// Deterministic collision handling: keep appending the reserved suffix until
// the name is unused, then claim it.
std::string claim(std::set<std::string> &taken, std::string want) {
  while (taken.count(want)) want += "_x";
  taken.insert(want);
  return want;
}

bool find_loop_path(const std::vector<StmtPtr> &body, const Stmt *target,
                    std::vector<const Stmt *> &path) {
  for (const auto &sp : body) {
    const Stmt &s = *sp;
    if (&s == target) return true;
    switch (s.kind) {
    case StmtKind::For:
      path.push_back(&s);
      if (find_loop_path(s.body, target, path)) return true;
      path.pop_back();
      break;
    case StmtKind::If:
      if (find_loop_path(s.body, target, path)) return true;
      if (find_loop_path(s.els, target, path)) return true;
      break;
    case StmtKind::Block:
      if (find_loop_path(s.body, target, path)) return true;
      break;
    default: break;
    }
  }
  return false;
}

class Rewriter {
public:
  Rewriter(const Module &m, const ProgramAnalysis &pa) : src_(m), pa_(pa) {}

  TransformResult run() {
    if (pa_.loops.empty()) {
      result_.module = clone_module(src_);
      return std::move(result_);
    }

    for (const auto &li : pa_.loops) {
      loop_view_[li.loop] = static_cast<int>(result_.views.size());
      result_.views.push_back(plan_view(src_, li));
    }
    for (size_t i = 0; i < pa_.loops.size(); ++i) {
      const LoopInfo &li = pa_.loops[i];
      if (li.hoist <= 0) continue;
      std::vector<const Stmt *> path;
      if (!find_loop_path(src_.fns[li.fn_index].body, li.loop, path)) continue;
      pending_[path[path.size() - li.hoist]].push_back(static_cast<int>(i));
    }
    for (const auto &fn : src_.fns) fn_names_.insert(fn.name);

    out_.structs = src_.structs;
    for (size_t i = 0; i < src_.fns.size(); ++i) out_.fns.push_back(rewrite_fn(src_.fns[i]));
    // generate_clone may queue further clones, growing the vector
    for (size_t i = 0; i < clone_queue_.size(); ++i) {
      CloneReq req = clone_queue_[i];
      generate_clone(req);
    }

    std::vector<Diagnostic> sema_diags;
    run_sema(out_, sema_diags);
    if (has_errors(sema_diags)) {
      internal_error({}, "transformed module failed to re-check");
      for (auto &d : sema_diags) result_.diags.push_back(std::move(d));
    }
    result_.module = std::move(out_);
    return std::move(result_);
  }

private:
  struct Redirect {
    int view = -1;
    int slot = -1;                      // record binder / container param slot
    bool indexed = false;               // match `c[e].f` instead of `p.f`
    std::string index_name;             // buffer subscript for the binder form
    std::vector<std::string> buf_names; // parallel to the plan's `all`
  };

  struct CloneReq {
    int fn_index;
    std::vector<std::pair<int, int>> bindings; // (param index, view) ordered
    std::string name;
  };

  const Module &src_;
  const ProgramAnalysis &pa_;
  TransformResult result_;
  Module out_;
  std::map<const Stmt *, int> loop_view_;
  std::map<const Stmt *, std::vector<int>> pending_;
  std::vector<Redirect> redirects_;
  std::set<std::string> fn_names_;
  std::map<std::pair<int, std::vector<std::pair<int, int>>>, std::string> clone_names_;
  std::vector<CloneReq> clone_queue_;

  void internal_error(SourceLoc loc, const std::string &msg) {
    result_.diags.push_back({Severity::Error, loc, "internal invariant violated: " + msg});
  }

  FunctionDef rewrite_fn(const FunctionDef &fn) {
    FunctionDef out;
    out.name = fn.name;
    out.loc = fn.loc;
    out.params = fn.params;
    out.has_ret = fn.has_ret;
    out.ret = fn.ret;
    out.is_extern = fn.is_extern;
    if (!fn.is_extern) out.body = walk_stmts(fn.body);
    return out;
  }

  std::vector<StmtPtr> walk_stmts(const std::vector<StmtPtr> &in) {
    std::vector<StmtPtr> out;
    for (const auto &s : in) walk_stmt(*s, out);
    return out;
  }

  void walk_stmt(const Stmt &s, std::vector<StmtPtr> &out) {
    auto push = [&](StmtPtr built) { out.push_back(wrap_pending(&s, std::move(built))); };
    switch (s.kind) {
    case StmtKind::For: {
      auto it = loop_view_.find(&s);
      if (it != loop_view_.end()) {
        rewrite_view_loop(s, it->second, out);
        return;
      }
      auto f = std::make_unique<Stmt>();
      f->kind = StmtKind::For;
      f->loc = s.loc;
      f->is_range = s.is_range;
      f->binder = s.binder;
      f->binder_slot = s.binder_slot;
      f->e1 = rewrite_expr(*s.e1);
      if (s.e2) f->e2 = rewrite_expr(*s.e2);
      f->body = walk_stmts(s.body);
      push(std::move(f));
      return;
    }
    case StmtKind::If: {
      auto n = std::make_unique<Stmt>();
      n->kind = StmtKind::If;
      n->loc = s.loc;
      n->e1 = rewrite_expr(*s.e1);
      n->body = walk_stmts(s.body);
      n->els = walk_stmts(s.els);
      out.push_back(std::move(n));
      return;
    }
    case StmtKind::Block: {
      auto n = std::make_unique<Stmt>();
      n->kind = StmtKind::Block;
      n->loc = s.loc;
      n->body = walk_stmts(s.body);
      out.push_back(std::move(n));
      return;
    }
    default: {
      auto n = std::make_unique<Stmt>();
      n->kind = s.kind;
      n->loc = s.loc;
      n->name = s.name;
      n->scalar = s.scalar;
      n->vec_arity = s.vec_arity;
      n->slot = s.slot;
      n->aop = s.aop;
      if (s.e1) n->e1 = rewrite_expr(*s.e1);
      if (s.e2) n->e2 = rewrite_expr(*s.e2);
      out.push_back(std::move(n));
      return;
    }
    }
  }

  // Decl + gather statements of one view, in plan order.
  void emit_prologue(int vi, std::vector<StmtPtr> &out, SourceLoc loc) {
    const ViewPlan &v = result_.views[vi];
    const StructDef &st = src_.structs[v.struct_index];
    out.push_back(mklet_i64(v.count_var, mklen(v.container), loc));
    for (size_t k = 0; k < v.all.size(); ++k) {
      const FieldDef &f = st.fields[v.all[k]];
      out.push_back(mkbufdecl(v.buf_names[k], f.kind, f.vec_arity, mkvar(v.count_var), loc));
    }
    if (v.gather.empty()) return;
    auto loop = mkrange_for(v.gather_var, mkint(0), mkvar(v.count_var), loc);
    for (int field : v.gather) {
      size_t k = buf_pos(v, field);
      const FieldDef &f = st.fields[field];
      auto elem = [&] { return mkindex(mkvar(v.container), mkvar(v.gather_var)); };
      auto buf_at = [&] { return mkindex(mkvar(v.buf_names[k]), mkvar(v.gather_var)); };
      if (f.vec_arity > 0) {
        for (int lane = 0; lane < f.vec_arity; ++lane)
          loop->body.push_back(mkassign(mkindex(buf_at(), mkint(lane)),
                                        mkindex(mkfield(elem(), f.name), mkint(lane)), loc));
      } else {
        loop->body.push_back(mkassign(buf_at(), mkfield(elem(), f.name), loc));
      }
    }
    out.push_back(std::move(loop));
  }

  void emit_epilogue(int vi, std::vector<StmtPtr> &out, SourceLoc loc) {
    const ViewPlan &v = result_.views[vi];
    if (v.scatter.empty()) return;
    const StructDef &st = src_.structs[v.struct_index];
    auto loop = mkrange_for(v.scatter_var, mkint(0), mkvar(v.count_var), loc);
    for (int field : v.scatter) {
      size_t k = buf_pos(v, field);
      const FieldDef &f = st.fields[field];
      auto elem = [&] { return mkindex(mkvar(v.container), mkvar(v.scatter_var)); };
      auto buf_at = [&] { return mkindex(mkvar(v.buf_names[k]), mkvar(v.scatter_var)); };
      if (f.vec_arity > 0) {
        for (int lane = 0; lane < f.vec_arity; ++lane)
          loop->body.push_back(mkassign(mkindex(mkfield(elem(), f.name), mkint(lane)),
                                        mkindex(buf_at(), mkint(lane)), loc));
      } else {
        loop->body.push_back(mkassign(mkfield(elem(), f.name), buf_at(), loc));
      }
    }
    out.push_back(std::move(loop));
  }

  static size_t buf_pos(const ViewPlan &v, int field) {
    return static_cast<size_t>(std::find(v.all.begin(), v.all.end(), field) - v.all.begin());
  }

  void rewrite_view_loop(const Stmt &s, int vi, std::vector<StmtPtr> &out) {
    const ViewPlan &v = result_.views[vi];
    const LoopInfo &li = pa_.loops[vi];

    auto main = std::make_unique<Stmt>();
    main->kind = StmtKind::For;
    main->loc = s.loc;
    main->is_range = true;
    if (s.is_range) {
      main->binder = s.binder;
      main->e1 = rewrite_expr(*s.e1);
      main->e2 = rewrite_expr(*s.e2);
    } else {
      main->binder = v.index_var;
      main->e1 = mkint(0);
      main->e2 = mkvar(v.count_var);
    }
    main->loop_id = v.loop_id;
    main->offload_mark = v.offload;
    main->view_id = vi;

    Redirect r;
    r.view = vi;
    r.buf_names = v.buf_names;
    if (s.is_range) {
      r.indexed = true;
      int pi = src_.fns[li.fn_index].param_index(v.container);
      r.slot = src_.fns[li.fn_index].params[pi].slot;
    } else {
      r.slot = s.binder_slot;
      r.index_name = v.index_var;
    }
    redirects_.push_back(std::move(r));
    main->body = walk_stmts(s.body);
    redirects_.pop_back();

    if (!s.is_range) check_residuals(main->body, s.binder, s.loc);

    StmtPtr placed = wrap_pending(&s, std::move(main));
    if (v.hoist > 0) {
      out.push_back(std::move(placed));
      return;
    }
    auto blk = std::make_unique<Stmt>();
    blk->kind = StmtKind::Block;
    blk->loc = s.loc;
    emit_prologue(vi, blk->body, s.loc);
    blk->body.push_back(std::move(placed));
    emit_epilogue(vi, blk->body, s.loc);
    out.push_back(std::move(blk));
  }

  StmtPtr wrap_pending(const Stmt *orig, StmtPtr built) {
    auto it = pending_.find(orig);
    if (it == pending_.end()) return built;
    auto blk = std::make_unique<Stmt>();
    blk->kind = StmtKind::Block;
    blk->loc = built->loc;
    for (int vi : it->second) emit_prologue(vi, blk->body, built->loc);
    blk->body.push_back(std::move(built));
    for (auto v = it->second.rbegin(); v != it->second.rend(); ++v)
      emit_epilogue(*v, blk->body, blk->loc);
    return blk;
  }

  const Redirect *match_record(const Expr &rec) const {
    for (const auto &r : redirects_) {
      if (!r.indexed && rec.kind == ExprKind::Var && rec.slot == r.slot) return &r;
      if (r.indexed && rec.kind == ExprKind::Index && rec.a->kind == ExprKind::Var &&
          rec.a->slot == r.slot)
        return &r;
    }
    return nullptr;
  }

  ExprPtr buffer_access(const Redirect &r, const Expr &rec, const std::string &field) {
    const ViewPlan &v = result_.views[r.view];
    int fi = src_.structs[v.struct_index].field_index(field);
    const std::string &buf = r.buf_names[buf_pos(v, fi)];
    ExprPtr idx = r.indexed ? rewrite_expr(*rec.b) : mkvar(r.index_name);
    return mkindex(mkvar(buf), std::move(idx));
  }

  ExprPtr rewrite_expr(const Expr &e) {
    if (e.kind == ExprKind::Field) {
      if (const Redirect *r = match_record(*e.a)) return buffer_access(*r, *e.a, e.name);
    }
    if (e.kind == ExprKind::Call) return rewrite_call(e);
    auto n = std::make_unique<Expr>();
    n->kind = e.kind;
    n->loc = e.loc;
    n->fval = e.fval;
    n->ival = e.ival;
    n->bval = e.bval;
    n->name = e.name;
    n->slot = e.slot;
    n->field_index = e.field_index;
    n->struct_index = e.struct_index;
    n->bop = e.bop;
    n->uop = e.uop;
    n->intr = e.intr;
    n->callee_index = e.callee_index;
    n->type = e.type;
    if (e.a) n->a = rewrite_expr(*e.a);
    if (e.b) n->b = rewrite_expr(*e.b);
    for (const auto &arg : e.args) n->args.push_back(rewrite_expr(*arg));
    return n;
  }

  ExprPtr rewrite_call(const Expr &e) {
    auto n = std::make_unique<Expr>();
    n->kind = ExprKind::Call;
    n->loc = e.loc;
    n->name = e.name;
    n->intr = e.intr;
    n->callee_index = e.callee_index;
    n->type = e.type;
    std::vector<std::pair<int, int>> bindings;
    for (size_t i = 0; i < e.args.size(); ++i) {
      const Expr &arg = *e.args[i];
      const Redirect *r = e.intr == Intrinsic::None ? match_record(arg) : nullptr;
      if (!r) {
        n->args.push_back(rewrite_expr(arg));
        continue;
      }
      for (const auto &buf : r->buf_names) n->args.push_back(mkvar(buf));
      n->args.push_back(r->indexed ? rewrite_expr(*arg.b) : mkvar(r->index_name));
      bindings.emplace_back(static_cast<int>(i), r->view);
    }
    if (!bindings.empty()) n->name = ensure_clone(e.callee_index, std::move(bindings));
    return n;
  }

  std::string ensure_clone(int fn_index, std::vector<std::pair<int, int>> bindings) {
    auto key = std::make_pair(fn_index, bindings);
    auto it = clone_names_.find(key);
    if (it != clone_names_.end()) return it->second;
    std::string name = src_.fns[fn_index].name;
    for (const auto &[param, view] : bindings)
      name += "_" + std::to_string(result_.views[view].loop_id);
    name = claim(fn_names_, std::move(name));
    clone_names_.emplace(std::move(key), name);
    clone_queue_.push_back({fn_index, std::move(bindings), name});
    return name;
  }

  void generate_clone(const CloneReq &req) {
    const FunctionDef &orig = src_.fns[req.fn_index];
    FunctionDef c;
    c.name = req.name;
    c.loc = orig.loc;
    c.has_ret = orig.has_ret;
    c.ret = orig.ret;

    std::set<std::string> taken = fn_identifiers(orig);
    std::vector<Redirect> saved = std::move(redirects_);
    redirects_.clear();

    for (size_t i = 0; i < orig.params.size(); ++i) {
      auto bound = std::find_if(req.bindings.begin(), req.bindings.end(),
                                [&](const auto &b) { return b.first == static_cast<int>(i); });
      if (bound == req.bindings.end()) {
        c.params.push_back(orig.params[i]);
        continue;
      }
      const ViewPlan &v = result_.views[bound->second];
      const StructDef &st = src_.structs[v.struct_index];
      Redirect r;
      r.view = bound->second;
      r.slot = orig.params[i].slot;
      for (size_t k = 0; k < v.all.size(); ++k) {
        const FieldDef &f = st.fields[v.all[k]];
        Param bp;
        bp.name = claim(taken, orig.params[i].name + "_" + f.name);
        bp.kind = ParamKind::Buffer;
        bp.scalar = f.kind;
        bp.vec_arity = f.vec_arity;
        r.buf_names.push_back(bp.name);
        c.params.push_back(std::move(bp));
      }
      Param ip;
      ip.name = claim(taken, orig.params[i].name + "_idx");
      ip.kind = ParamKind::ScalarVal;
      ip.scalar = Scalar::I64;
      r.index_name = ip.name;
      c.params.push_back(std::move(ip));
      redirects_.push_back(std::move(r));
    }

    c.body = walk_stmts(out_.fns[req.fn_index].body);
    for (const auto &b : req.bindings)
      check_residuals(c.body, orig.params[b.first].name, orig.loc);
    redirects_ = std::move(saved);
    out_.fns.push_back(std::move(c));
  }

  // The redirection must be total: after the rewrite no expression may still
  // name the record variable whose storage the view replaced.
  void check_residuals(const std::vector<StmtPtr> &body, const std::string &record,
                       SourceLoc loc) {
    for (const auto &sp : body) {
      const Stmt &s = *sp;
      if (s.e1) check_residual_expr(*s.e1, record, loc);
      if (s.e2) check_residual_expr(*s.e2, record, loc);
      check_residuals(s.body, record, loc);
      check_residuals(s.els, record, loc);
    }
  }

  void check_residual_expr(const Expr &e, const std::string &record, SourceLoc loc) {
    if (e.kind == ExprKind::Var && e.name == record)
      internal_error(e.loc.valid() ? e.loc : loc,
                     "rewritten body still references record '" + record + "'");
    if (e.a) check_residual_expr(*e.a, record, loc);
    if (e.b) check_residual_expr(*e.b, record, loc);
    for (const auto &arg : e.args) check_residual_expr(*arg, record, loc);
  }
};

} // namespace

ViewPlan plan_view(const Module &m, const LoopInfo &loop) {
  ViewPlan v;
  v.loop_id = loop.loop_id;
  v.container = loop.container;
  v.struct_index = loop.struct_index;
  v.ckind = loop.ckind;
  v.offload = loop.ann == LoopAnn::Offload;
  v.hoist = loop.hoist;
  v.sets = loop.sets;

  std::set<int> all_set = loop.sets.in;
  all_set.insert(loop.sets.out.begin(), loop.sets.out.end());
  v.all.assign(all_set.begin(), all_set.end());
  bool indexed = loop.loop && loop.loop->is_range;
  if (indexed) {
    // Indexed loops may touch any element, including ones the loop range
    // skips, so written fields are gathered too: the scatter then restores
    // untouched elements bit-identically.
    v.gather = v.all;
  } else {
    v.gather.assign(loop.sets.in.begin(), loop.sets.in.end());
    for (int f : loop.sets.out)
      if (!loop.sets.in.count(f)) v.alloc_only.push_back(f);
  }
  v.scatter.assign(loop.sets.out.begin(), loop.sets.out.end());

  std::set<std::string> taken = fn_identifiers(m.fns[loop.fn_index]);
  v.count_var = claim(taken, mangle("n", v.loop_id));
  v.index_var = indexed ? loop.loop->binder : claim(taken, mangle("i", v.loop_id));
  v.gather_var = claim(taken, mangle("g", v.loop_id));
  v.scatter_var = claim(taken, mangle("s", v.loop_id));
  const StructDef &st = m.structs[loop.struct_index];
  for (int f : v.all) v.buf_names.push_back(claim(taken, mangle(st.fields[f].name, v.loop_id)));
  return v;
}

TransformResult rewrite(const Module &m, const ProgramAnalysis &pa) {
  return Rewriter(m, pa).run();
}

} // namespace soaview
