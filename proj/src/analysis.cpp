#include "soaview/analysis.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>

namespace soaview {

namespace {

std::set<int> set_union(const std::set<int> &a, const std::set<int> &b) {
  std::set<int> r = a;
  r.insert(b.begin(), b.end());
  return r;
}

std::set<int> set_intersect(const std::set<int> &a, const std::set<int> &b) {
  std::set<int> r;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(r, r.begin()));
  return r;
}

std::set<int> set_minus(const std::set<int> &a, const std::set<int> &b) {
  std::set<int> r;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::inserter(r, r.begin()));
  return r;
}

std::string field_list(const Module &m, int struct_index, const std::set<int> &fields) {
  std::string out = "{";
  bool first = true;
  for (int f : fields) {
    if (!first) out += ",";
    first = false;
    out += m.structs[struct_index].fields[f].name;
  }
  out += "}";
  return out;
}

int byte_sum(const Module &m, int struct_index, const std::set<int> &fields) {
  int sum = 0;
  for (int f : fields) sum += m.structs[struct_index].fields[f].byte_size;
  return sum;
}

bool pair_disjoint(const FunctionDef &fn, const std::string &a, const std::string &b) {
  for (const auto &[x, y] : fn.disjoint)
    if ((x == a && y == b) || (x == b && y == a)) return true;
  return false;
}

// The left-hand side of an assignment that touches a record field is either
// `rec.f` or `rec.f[lane]`. Returns the Field node, or null for plain
// variable and buffer assignments.
const Expr *lhs_field(const Expr &lhs) {
  if (lhs.kind == ExprKind::Field) return &lhs;
  if (lhs.kind == ExprKind::Index && lhs.a->kind == ExprKind::Field) return lhs.a.get();
  return nullptr;
}

// ---------------------------------------------------------------------------
// Per-loop access analysis with interprocedural summaries.
// ---------------------------------------------------------------------------

struct Summary {
  std::set<int> in, out;           // accesses through view-bound records
  std::set<int> self_in, self_out; // accesses through other records of the
                                   // same container (certain aliasing)
  bool escapes = false;
  SourceLoc escape_loc{};
  std::string escape_msg;

  bool operator==(const Summary &o) const {
    return in == o.in && out == o.out && self_in == o.self_in &&
           self_out == o.self_out && escapes == o.escapes;
  }
};

struct SummaryKey {
  int fn;
  uint64_t view_mask;
  uint64_t self_mask;
  bool operator<(const SummaryKey &o) const {
    if (fn != o.fn) return fn < o.fn;
    if (view_mask != o.view_mask) return view_mask < o.view_mask;
    return self_mask < o.self_mask;
  }
  bool operator==(const SummaryKey &o) const {
    return fn == o.fn && view_mask == o.view_mask && self_mask == o.self_mask;
  }
};

class LoopAnalyzer {
public:
  LoopAnalyzer(const Module &m, const FunctionDef &fn, const Stmt &loop,
               std::vector<AnalysisError> &errors)
      : m_(m), fn_(fn), loop_(loop), errors_(errors) {}

  AccessSets run() {
    resolve_container();
    AccessSets sets;
    if (struct_index_ < 0) return sets;

    // Round-based fixpoint: each round recomputes every reachable summary
    // from scratch, reading the previous round's table at recursion points.
    // Sets grow monotonically in a finite universe, so this terminates.
    for (;;) {
      fresh_.clear();
      top_ = Summary{};
      Ctx ctx;
      ctx.fn = &fn_;
      if (!loop_.is_range) ctx.view_slots.insert(loop_.binder_slot);
      walk_stmts(loop_.body, ctx, top_);
      if (fresh_ == memo_) break;
      memo_ = std::move(fresh_);
    }

    // Accesses that reach elements of the container around the binder are
    // only sound when they cannot conflict with the buffered fields.
    std::set<int> conflict = set_union(
        set_intersect(top_.self_out, set_union(top_.in, top_.out)),
        set_intersect(top_.self_in, top_.out));
    if (!conflict.empty()) {
      report(AnalysisErrorKind::AliasAmbiguity, loop_.loc,
             "loop over '" + container_ + "' accesses elements of '" + container_ +
                 "' outside its binder with conflicting fields " +
                 field_list(m_, struct_index_, conflict));
    }

    sets.in = top_.in;
    sets.out = top_.out;
    sets.bytes_in = byte_sum(m_, struct_index_, sets.in);
    sets.bytes_out = byte_sum(m_, struct_index_, sets.out);
    return sets;
  }

private:
  struct Ctx {
    const FunctionDef *fn = nullptr;
    std::set<int> view_slots; // slots holding records of the view
    std::set<int> self_slots; // slots holding other records of the container
    bool top = true;          // inside the annotated loop's own function
  };

  const Module &m_;
  const FunctionDef &fn_;
  const Stmt &loop_;
  std::vector<AnalysisError> &errors_;

  int struct_index_ = -1;
  int container_slot_ = -1;
  std::string container_;
  bool indexed_ = false;

  Summary top_;
  std::map<SummaryKey, Summary> memo_, fresh_;
  std::set<SummaryKey> visiting_;
  std::set<std::string> reported_;

  void resolve_container() {
    if (loop_.is_range) {
      indexed_ = true;
      container_ = loop_.soa_target;
    } else {
      container_ = loop_.e1->name;
    }
    int pi = fn_.param_index(container_);
    if (pi < 0) return;
    const Param &p = fn_.params[pi];
    struct_index_ = p.struct_index;
    container_slot_ = p.slot;
  }

  void report(AnalysisErrorKind kind, SourceLoc loc, const std::string &msg) {
    std::string key = std::to_string(static_cast<int>(kind)) + "|" +
                      std::to_string(loc.line) + ":" + std::to_string(loc.col) + "|" + msg;
    if (!reported_.insert(key).second) return;
    errors_.push_back({kind, loc, msg});
  }

  enum class RecordClass { NotRecord, View, SelfAlias, Other };

  // Classifies a record-typed expression: either a variable holding a bound
  // record, or an element access through the loop's container.
  RecordClass classify(const Expr &rec, const Ctx &ctx) const {
    if (rec.type.cat != ValueType::Record) return RecordClass::NotRecord;
    if (rec.kind == ExprKind::Var) {
      if (ctx.view_slots.count(rec.slot)) return RecordClass::View;
      if (ctx.self_slots.count(rec.slot)) return RecordClass::SelfAlias;
      return RecordClass::Other;
    }
    if (rec.kind == ExprKind::Index && rec.a->kind == ExprKind::Var && ctx.top &&
        rec.a->slot == container_slot_) {
      return indexed_ ? RecordClass::View : RecordClass::SelfAlias;
    }
    return RecordClass::Other;
  }

  void walk_stmts(const std::vector<StmtPtr> &body, Ctx &ctx, Summary &sum) {
    for (const auto &s : body) walk_stmt(*s, ctx, sum);
  }

  void walk_stmt(const Stmt &s, Ctx &ctx, Summary &sum) {
    switch (s.kind) {
    case StmtKind::Let:
    case StmtKind::BufDecl: walk_expr(*s.e1, ctx, sum); return;
    case StmtKind::Assign: {
      if (const Expr *f = lhs_field(*s.e1)) {
        RecordClass cls = classify(*f->a, ctx);
        if (cls == RecordClass::View) {
          sum.out.insert(f->field_index);
          if (s.aop != AssignOp::Set) sum.in.insert(f->field_index);
        } else if (cls == RecordClass::SelfAlias) {
          sum.self_out.insert(f->field_index);
          if (s.aop != AssignOp::Set) sum.self_in.insert(f->field_index);
        }
        // index expressions under the lvalue are ordinary reads
        if (f->a->kind == ExprKind::Index) walk_expr(*f->a->b, ctx, sum);
        if (s.e1->kind == ExprKind::Index) walk_expr(*s.e1->b, ctx, sum);
      } else {
        // variable or buffer slot: walk index expressions, skip the base
        const Expr *e = s.e1.get();
        while (e->kind == ExprKind::Index) {
          walk_expr(*e->b, ctx, sum);
          e = e->a.get();
        }
      }
      walk_expr(*s.e2, ctx, sum);
      return;
    }
    case StmtKind::If:
      walk_expr(*s.e1, ctx, sum);
      walk_stmts(s.body, ctx, sum);
      walk_stmts(s.els, ctx, sum);
      return;
    case StmtKind::For: {
      if (s.is_range) {
        walk_expr(*s.e1, ctx, sum);
        walk_expr(*s.e2, ctx, sum);
        walk_stmts(s.body, ctx, sum);
        return;
      }
      // container loop: a further unannotated loop over the analyzed
      // container binds records that alias the view
      bool self_loop = ctx.top && s.e1->kind == ExprKind::Var &&
                       s.e1->slot == container_slot_ && s.ann == LoopAnn::None;
      if (self_loop) ctx.self_slots.insert(s.binder_slot);
      walk_stmts(s.body, ctx, sum);
      if (self_loop) ctx.self_slots.erase(s.binder_slot);
      return;
    }
    case StmtKind::ExprStmt: walk_expr(*s.e1, ctx, sum); return;
    case StmtKind::Return:
      if (s.e1) walk_expr(*s.e1, ctx, sum);
      return;
    case StmtKind::Block: walk_stmts(s.body, ctx, sum); return;
    }
  }

  void walk_expr(const Expr &e, Ctx &ctx, Summary &sum) {
    switch (e.kind) {
    case ExprKind::FloatLit:
    case ExprKind::IntLit:
    case ExprKind::BoolLit:
    case ExprKind::Var: return;
    case ExprKind::Field: {
      RecordClass cls = classify(*e.a, ctx);
      if (cls == RecordClass::View) sum.in.insert(e.field_index);
      if (cls == RecordClass::SelfAlias) sum.self_in.insert(e.field_index);
      if (e.a->kind == ExprKind::Index) walk_expr(*e.a->b, ctx, sum);
      return;
    }
    case ExprKind::Index:
      walk_expr(*e.a, ctx, sum);
      walk_expr(*e.b, ctx, sum);
      return;
    case ExprKind::Unary: walk_expr(*e.a, ctx, sum); return;
    case ExprKind::Binary:
      walk_expr(*e.a, ctx, sum);
      walk_expr(*e.b, ctx, sum);
      return;
    case ExprKind::Call: walk_call(e, ctx, sum); return;
    }
  }

  void walk_call(const Expr &e, Ctx &ctx, Summary &sum) {
    if (e.intr != Intrinsic::None) {
      // len(c) is always fine: the length is invariant and carries no fields
      if (e.intr == Intrinsic::Len) return;
      for (const auto &a : e.args) walk_expr(*a, ctx, sum);
      return;
    }
    const FunctionDef &callee = m_.fns[e.callee_index];
    uint64_t view_mask = 0, self_mask = 0;
    for (size_t i = 0; i < e.args.size(); ++i) {
      const Expr &arg = *e.args[i];
      if (arg.type.cat == ValueType::Record) {
        RecordClass cls = classify(arg, ctx);
        if (arg.kind == ExprKind::Index) walk_expr(*arg.b, ctx, sum);
        if (cls == RecordClass::View) view_mask |= uint64_t{1} << i;
        if (cls == RecordClass::SelfAlias) self_mask |= uint64_t{1} << i;
        if (callee.is_extern && (cls == RecordClass::View || cls == RecordClass::SelfAlias)) {
          sum.escapes = true;
          sum.escape_loc = arg.loc;
          sum.escape_msg = "record of the converted loop escapes to extern function '" +
                           callee.name + "'";
        }
        continue;
      }
      if (arg.type.cat == ValueType::Container) {
        if (ctx.top && arg.kind == ExprKind::Var && arg.slot == container_slot_) {
          if (callee.is_extern) {
            sum.escapes = true;
            sum.escape_loc = arg.loc;
            sum.escape_msg = "container '" + container_ +
                             "' of the converted loop escapes to extern function '" +
                             callee.name + "'";
          } else {
            report(AnalysisErrorKind::Unsupported, arg.loc,
                   "container '" + container_ +
                       "' of a converted loop cannot be passed to '" + callee.name +
                       "' inside that loop");
          }
        }
        continue;
      }
      walk_expr(arg, ctx, sum);
    }
    if (sum.escapes && ctx.top) flush_escape(sum);
    if (callee.is_extern || (view_mask == 0 && self_mask == 0)) return;

    const Summary &s = summarize({e.callee_index, view_mask, self_mask});
    sum.in.insert(s.in.begin(), s.in.end());
    sum.out.insert(s.out.begin(), s.out.end());
    sum.self_in.insert(s.self_in.begin(), s.self_in.end());
    sum.self_out.insert(s.self_out.begin(), s.self_out.end());
    if (s.escapes) {
      sum.escapes = true;
      sum.escape_loc = s.escape_loc;
      sum.escape_msg = s.escape_msg;
      if (ctx.top) flush_escape(sum);
    }
  }

  void flush_escape(Summary &sum) {
    report(AnalysisErrorKind::Escape, sum.escape_loc, sum.escape_msg);
    sum.escapes = false;
  }

  const Summary &summarize(SummaryKey key) {
    auto done = fresh_.find(key);
    if (done != fresh_.end()) return done->second;
    if (visiting_.count(key)) return memo_[key];
    visiting_.insert(key);

    const FunctionDef &callee = m_.fns[key.fn];
    Ctx ctx;
    ctx.fn = &callee;
    ctx.top = false;
    for (size_t i = 0; i < callee.params.size(); ++i) {
      if (key.view_mask & (uint64_t{1} << i)) ctx.view_slots.insert(callee.params[i].slot);
      if (key.self_mask & (uint64_t{1} << i)) ctx.self_slots.insert(callee.params[i].slot);
    }
    Summary sum;
    walk_stmts(callee.body, ctx, sum);

    visiting_.erase(key);
    return fresh_.emplace(key, std::move(sum)).first->second;
  }
};

// Conservative set of fields a statement region may write into records of
// one struct, ignoring writes that provably touch disjoint containers.
// Used by the hoist staleness check.
class RegionWriteScan {
public:
  RegionWriteScan(const Module &m, const FunctionDef &fn, int struct_index,
                  const std::string &hoisted_container)
      : m_(m), fn_(fn), struct_index_(struct_index), hoisted_(hoisted_container) {}

  // field index -> location of the first write found
  std::map<int, SourceLoc> run(const Stmt &region, const Stmt &excluded) {
    for (const auto &p : fn_.params) {
      if (p.kind == ParamKind::StructRef && p.struct_index == struct_index_)
        provenance_[p.slot] = ""; // unknown origin: may alias
      if (p.kind == ParamKind::Container) container_slots_[p.slot] = p.name;
    }
    excluded_ = &excluded;
    walk_stmt(region);
    return std::move(writes_);
  }

private:
  const Module &m_;
  const FunctionDef &fn_;
  int struct_index_;
  std::string hoisted_;
  const Stmt *excluded_ = nullptr;
  std::map<int, std::string> provenance_;     // record slot -> container name ("" unknown)
  std::map<int, std::string> container_slots_; // container param slot -> name
  std::map<int, SourceLoc> writes_;

  bool may_alias(const std::string &container) const {
    if (container.empty()) return true;
    return !pair_disjoint(fn_, container, hoisted_);
  }

  void add_write(int field, SourceLoc loc) { writes_.try_emplace(field, loc); }

  void add_all_fields(SourceLoc loc) {
    for (size_t f = 0; f < m_.structs[struct_index_].fields.size(); ++f)
      add_write(static_cast<int>(f), loc);
  }

  // Returns the container name a record expression originates from, or ""
  // when unknown, or nullopt when it is not a record of the watched struct.
  std::optional<std::string> record_origin(const Expr &rec) const {
    if (rec.type.cat != ValueType::Record || rec.type.struct_index != struct_index_)
      return std::nullopt;
    if (rec.kind == ExprKind::Var) {
      auto it = provenance_.find(rec.slot);
      if (it != provenance_.end()) return it->second;
      return std::string{};
    }
    if (rec.kind == ExprKind::Index && rec.a->kind == ExprKind::Var) {
      auto it = container_slots_.find(rec.a->slot);
      if (it != container_slots_.end()) return it->second;
    }
    return std::string{};
  }

  void walk_stmts(const std::vector<StmtPtr> &body) {
    for (const auto &s : body) walk_stmt(*s);
  }

  void walk_stmt(const Stmt &s) {
    if (&s == excluded_) return;
    switch (s.kind) {
    case StmtKind::Let:
    case StmtKind::BufDecl: walk_expr(*s.e1, s.loc); return;
    case StmtKind::Assign:
      if (const Expr *f = lhs_field(*s.e1)) {
        if (auto origin = record_origin(*f->a); origin && may_alias(*origin))
          add_write(f->field_index, s.loc);
      }
      walk_expr(*s.e2, s.loc);
      return;
    case StmtKind::If:
      walk_expr(*s.e1, s.loc);
      walk_stmts(s.body);
      walk_stmts(s.els);
      return;
    case StmtKind::For: {
      bool bound = false;
      if (!s.is_range && s.e1->kind == ExprKind::Var) {
        auto it = container_slots_.find(s.e1->slot);
        if (it != container_slots_.end()) {
          provenance_[s.binder_slot] = it->second;
          bound = true;
        }
      }
      walk_stmts(s.body);
      if (bound) provenance_.erase(s.binder_slot);
      return;
    }
    case StmtKind::ExprStmt: walk_expr(*s.e1, s.loc); return;
    case StmtKind::Return:
      if (s.e1) walk_expr(*s.e1, s.loc);
      return;
    case StmtKind::Block: walk_stmts(s.body); return;
    }
  }

  void walk_expr(const Expr &e, SourceLoc loc) {
    switch (e.kind) {
    case ExprKind::Call: {
      for (const auto &a : e.args) walk_expr(*a, loc);
      if (e.intr != Intrinsic::None) return;
      const FunctionDef &callee = m_.fns[e.callee_index];
      for (size_t i = 0; i < e.args.size(); ++i) {
        const Expr &arg = *e.args[i];
        if (arg.type.cat == ValueType::Record) {
          auto origin = record_origin(arg);
          if (!origin || !may_alias(*origin)) continue;
          if (callee.is_extern) {
            add_all_fields(arg.loc);
          } else {
            for (int f : param_write_set(e.callee_index, static_cast<int>(i)))
              add_write(f, arg.loc);
          }
        } else if (arg.type.cat == ValueType::Container &&
                   arg.type.struct_index == struct_index_) {
          std::string name = arg.kind == ExprKind::Var && container_slots_.count(arg.slot)
                                 ? container_slots_.at(arg.slot)
                                 : std::string{};
          // a callee owning the whole container may write anything in it
          if (may_alias(name)) add_all_fields(arg.loc);
        }
      }
      return;
    }
    case ExprKind::Field:
    case ExprKind::Index:
    case ExprKind::Unary:
      if (e.a) walk_expr(*e.a, loc);
      if (e.b) walk_expr(*e.b, loc);
      return;
    case ExprKind::Binary:
      walk_expr(*e.a, loc);
      walk_expr(*e.b, loc);
      return;
    default: return;
    }
  }

  // Fields the callee may write through its record parameter, transitively.
  // Recursive call chains degrade to "may write everything".
  std::set<int> param_write_set(int fn_index, int param) {
    auto key = std::make_pair(fn_index, param);
    auto it = write_memo_.find(key);
    if (it != write_memo_.end()) return it->second;
    if (in_progress_.count(key)) {
      std::set<int> all;
      for (size_t f = 0; f < m_.structs[struct_index_].fields.size(); ++f)
        all.insert(static_cast<int>(f));
      return all;
    }
    in_progress_.insert(key);
    const FunctionDef &fn = m_.fns[fn_index];
    std::set<int> out;
    collect_param_writes(fn, fn.body, fn.params[param].slot, out);
    in_progress_.erase(key);
    write_memo_[key] = out;
    return out;
  }

  void collect_param_writes(const FunctionDef &fn, const std::vector<StmtPtr> &body,
                            int slot, std::set<int> &out) {
    for (const auto &sp : body) {
      const Stmt &s = *sp;
      switch (s.kind) {
      case StmtKind::Assign:
        if (const Expr *f = lhs_field(*s.e1)) {
          if (f->a->kind == ExprKind::Var && f->a->slot == slot)
            out.insert(f->field_index);
        }
        collect_call_writes(fn, *s.e2, slot, out);
        break;
      case StmtKind::If:
        collect_call_writes(fn, *s.e1, slot, out);
        collect_param_writes(fn, s.body, slot, out);
        collect_param_writes(fn, s.els, slot, out);
        break;
      case StmtKind::For:
      case StmtKind::Block:
        collect_param_writes(fn, s.body, slot, out);
        break;
      case StmtKind::ExprStmt: collect_call_writes(fn, *s.e1, slot, out); break;
      case StmtKind::Return:
        if (s.e1) collect_call_writes(fn, *s.e1, slot, out);
        break;
      default: break;
      }
    }
  }

  void collect_call_writes(const FunctionDef &fn, const Expr &e, int slot,
                           std::set<int> &out) {
    if (e.kind == ExprKind::Call && e.intr == Intrinsic::None) {
      const FunctionDef &callee = m_.fns[e.callee_index];
      for (size_t i = 0; i < e.args.size(); ++i) {
        if (e.args[i]->kind == ExprKind::Var && e.args[i]->slot == slot) {
          if (callee.is_extern) {
            for (size_t f = 0; f < m_.structs[struct_index_].fields.size(); ++f)
              out.insert(static_cast<int>(f));
          } else {
            auto sub = param_write_set(e.callee_index, static_cast<int>(i));
            out.insert(sub.begin(), sub.end());
          }
        }
      }
    }
    if (e.a) collect_call_writes(fn, *e.a, slot, out);
    if (e.b) collect_call_writes(fn, *e.b, slot, out);
    for (const auto &a : e.args) collect_call_writes(fn, *a, slot, out);
  }

  std::map<std::pair<int, int>, std::set<int>> write_memo_;
  std::set<std::pair<int, int>> in_progress_;
};

// Walks a function, collecting LoopInfo entries for annotated loops in
// source order. Tracks loop depth and the innermost annotated ancestor.
class LoopCollector {
public:
  LoopCollector(const Module &m, ProgramAnalysis &pa, int &next_id)
      : m_(m), pa_(pa), next_id_(next_id) {}

  void run(int fn_index) {
    fn_index_ = fn_index;
    walk(m_.fns[fn_index].body);
  }

private:
  const Module &m_;
  ProgramAnalysis &pa_;
  int &next_id_;
  int fn_index_ = -1;
  int depth_ = 0;
  std::vector<int> annotated_stack_;

  void walk(const std::vector<StmtPtr> &body) {
    for (const auto &sp : body) {
      const Stmt &s = *sp;
      switch (s.kind) {
      case StmtKind::If:
        walk(s.body);
        walk(s.els);
        break;
      case StmtKind::Block: walk(s.body); break;
      case StmtKind::For: {
        bool annotated = s.ann != LoopAnn::None;
        if (annotated) {
          const FunctionDef &fn = m_.fns[fn_index_];
          LoopInfo li;
          li.loop = &s;
          li.loop_id = next_id_++;
          li.loc = s.loc;
          li.fn_index = fn_index_;
          li.ann = s.ann;
          li.hoist = s.hoist;
          li.depth = depth_;
          li.parent = annotated_stack_.empty() ? -1 : annotated_stack_.back();
          li.container = s.is_range ? s.soa_target : s.e1->name;
          int pi = fn.param_index(li.container);
          if (pi >= 0) {
            li.struct_index = fn.params[pi].struct_index;
            li.ckind = fn.params[pi].ckind;
          }
          li.sets = analyze_loop(m_, fn, s, pa_.errors);
          pa_.loops.push_back(std::move(li));
          annotated_stack_.push_back(static_cast<int>(pa_.loops.size()) - 1);
        }
        ++depth_;
        walk(s.body);
        --depth_;
        if (annotated) annotated_stack_.pop_back();
        break;
      }
      default: break;
      }
    }
  }
};

// Finds the chain of loops enclosing `target` in the function body,
// outermost first, excluding the target itself.
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

bool is_ancestor(const ProgramAnalysis &pa, int outer_index, int inner_index) {
  for (int p = pa.loops[inner_index].parent; p >= 0; p = pa.loops[p].parent)
    if (p == outer_index) return true;
  return false;
}

} // namespace

// ---------------------------------------------------------------------------

std::set<int> AccessSets::read_only() const { return set_minus(in, out); }
std::set<int> AccessSets::write_only() const { return set_minus(out, in); }
std::set<int> AccessSets::read_write() const { return set_intersect(in, out); }

std::vector<int> AccessSets::all_fields() const {
  std::set<int> u = set_union(in, out);
  return {u.begin(), u.end()};
}

FieldClass AccessSets::classify(int field) const {
  bool r = in.count(field) > 0, w = out.count(field) > 0;
  if (r && w) return FieldClass::ReadWrite;
  return r ? FieldClass::ReadOnly : FieldClass::WriteOnly;
}

AccessSets analyze_loop(const Module &m, const FunctionDef &fn, const Stmt &loop,
                        std::vector<AnalysisError> &errors) {
  return LoopAnalyzer(m, fn, loop, errors).run();
}

bool check_aliasing(const Module &m, const LoopInfo &outer, const LoopInfo &inner,
                    bool assume_disjoint, std::vector<AnalysisError> &errors) {
  if (outer.struct_index != inner.struct_index) return true;
  if (assume_disjoint) return true;
  std::set<int> outer_all = set_union(outer.sets.in, outer.sets.out);
  std::set<int> conflict = set_intersect(inner.sets.out, outer_all);
  if (conflict.empty()) return true;
  errors.push_back(
      {AnalysisErrorKind::AliasAmbiguity, inner.loc,
       "aliasing ambiguity between the view over '" + inner.container +
           "' and the enclosing view over '" + outer.container + "': both range over '" +
           m.structs[inner.struct_index].name + "' records, the inner view writes " +
           field_list(m, inner.struct_index, inner.sets.out) + ", the outer view uses " +
           field_list(m, outer.struct_index, outer_all) + ", conflicting on " +
           field_list(m, inner.struct_index, conflict) + "; add @assume_disjoint(" +
           outer.container + ", " + inner.container +
           ") if the containers never share records"});
  return false;
}

bool check_hoist(const Module &m, const ProgramAnalysis &pa, const LoopInfo &inner,
                 std::vector<AnalysisError> &errors) {
  (void)pa;
  if (inner.hoist <= 0) return true;
  const FunctionDef &fn = m.fns[inner.fn_index];
  std::vector<const Stmt *> path;
  if (!find_loop_path(fn.body, inner.loop, path)) return true;
  if (static_cast<int>(path.size()) < inner.hoist) return true; // sema rejected already
  const Stmt *anchor = path[path.size() - inner.hoist];

  RegionWriteScan scan(m, fn, inner.struct_index, inner.container);
  auto writes = scan.run(*anchor, *inner.loop);

  bool ok = true;
  for (const auto &[field, loc] : writes) {
    if (!inner.sets.in.count(field)) continue;
    ok = false;
    errors.push_back({AnalysisErrorKind::StaleView, loc,
                      "hoisted view over '" + inner.container + "' goes stale: field '" +
                          m.structs[inner.struct_index].fields[field].name +
                          "' is gathered by the view but written inside the hoisted "
                          "region outside the loop"});
  }
  return ok;
}

ProgramAnalysis analyze_program(const Module &m) {
  ProgramAnalysis pa;
  int next_id = 1;
  for (size_t i = 0; i < m.fns.size(); ++i) {
    if (m.fns[i].is_extern) continue;
    LoopCollector(m, pa, next_id).run(static_cast<int>(i));
  }

  for (size_t i = 0; i < pa.loops.size(); ++i) {
    const LoopInfo &inner = pa.loops[i];
    for (int p = inner.parent; p >= 0; p = pa.loops[p].parent) {
      const LoopInfo &outer = pa.loops[p];
      bool disjoint = pair_disjoint(m.fns[inner.fn_index], outer.container, inner.container);
      check_aliasing(m, outer, inner, disjoint, pa.errors);
    }
    if (inner.hoist > 0) check_hoist(m, pa, inner, pa.errors);
  }

  // Offloaded regions must be free of interior view machinery: every nested
  // view has to hoist at least up to the offloaded loop itself.
  for (size_t i = 0; i < pa.loops.size(); ++i) {
    const LoopInfo &outer = pa.loops[i];
    if (outer.ann != LoopAnn::Offload) continue;
    for (size_t j = 0; j < pa.loops.size(); ++j) {
      if (i == j || !is_ancestor(pa, static_cast<int>(i), static_cast<int>(j))) continue;
      const LoopInfo &inner = pa.loops[j];
      if (inner.ann == LoopAnn::Offload) {
        pa.errors.push_back({AnalysisErrorKind::Unsupported, inner.loc,
                             "offloaded loop nested inside another offloaded loop"});
      } else if (inner.depth - inner.hoist > outer.depth) {
        pa.errors.push_back(
            {AnalysisErrorKind::Unsupported, inner.loc,
             "view of the loop over '" + inner.container +
                 "' would materialize inside the offloaded region; hoist it at least " +
                 std::to_string(inner.depth - outer.depth) + " levels"});
      }
    }
  }
  return pa;
}

const char *analysis_error_name(AnalysisErrorKind k) {
  switch (k) {
  case AnalysisErrorKind::Escape: return "EscapeError";
  case AnalysisErrorKind::AliasAmbiguity: return "AliasAmbiguityError";
  case AnalysisErrorKind::StaleView: return "StaleViewError";
  case AnalysisErrorKind::Unsupported: return "UnsupportedError";
  }
  return "AnalysisError";
}

std::string format_check_report(const Module &m, const ProgramAnalysis &pa, bool tsv) {
  std::string out;
  if (tsv)
    out += "fn\tline\tcol\trecord_bytes\tn_in\tbytes_in\tn_out\tbytes_out\tro\two\trw\n";
  for (const auto &li : pa.loops) {
    if (li.struct_index < 0) continue;
    if (tsv) {
      auto names = [&](const std::set<int> &fs) {
        if (fs.empty()) return std::string("-");
        std::string s = field_list(m, li.struct_index, fs);
        return s.substr(1, s.size() - 2);
      };
      out += m.fns[li.fn_index].name + "\t" + std::to_string(li.loc.line) + "\t" +
             std::to_string(li.loc.col) + "\t" +
             std::to_string(m.structs[li.struct_index].record_size) + "\t" +
             std::to_string(li.sets.in.size()) + "\t" + std::to_string(li.sets.bytes_in) +
             "\t" + std::to_string(li.sets.out.size()) + "\t" +
             std::to_string(li.sets.bytes_out) + "\t" + names(li.sets.read_only()) + "\t" +
             names(li.sets.write_only()) + "\t" + names(li.sets.read_write()) + "\n";
    } else {
      out += "loop @" + std::to_string(li.loc.line) + ":" + std::to_string(li.loc.col) +
             "  A_in=" + field_list(m, li.struct_index, li.sets.in) + " (" +
             std::to_string(li.sets.bytes_in) + "B)  A_out=" +
             field_list(m, li.struct_index, li.sets.out) + " (" +
             std::to_string(li.sets.bytes_out) + "B)\n";
    }
  }
  return out;
}

} // namespace soaview
