#include "soaview/parser.hpp"

#include <unordered_map>
#include <unordered_set>

#include "soaview/lexer.hpp"

namespace soaview {

namespace {

// ---------------------------------------------------------------------------
// Grammar pass: tokens -> unresolved AST.
// ---------------------------------------------------------------------------

class Parser {
public:
  Parser(std::vector<Token> toks, std::vector<Diagnostic> &diags)
      : toks_(std::move(toks)), diags_(diags) {}

  Module run() {
    Module m;
    while (!at(Tok::End)) {
      if (at(Tok::KwStruct)) {
        parse_struct(m);
      } else if (at(Tok::KwFn) || at(Tok::KwExtern)) {
        parse_fn(m);
      } else {
        error(peek().loc, std::string("expected 'struct', 'fn' or 'extern', got ") +
                              token_name(peek().kind));
        sync_toplevel();
      }
      if (fatal_) break;
    }
    return m;
  }

private:
  std::vector<Token> toks_;
  std::vector<Diagnostic> &diags_;
  size_t pos_ = 0;
  bool fatal_ = false;

  const Token &peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(Tok k) const { return peek().kind == k; }
  Token take() {
    Token t = peek();
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool accept(Tok k) {
    if (!at(k)) return false;
    take();
    return true;
  }
  Token expect(Tok k) {
    if (at(k)) return take();
    error(peek().loc, std::string("expected ") + token_name(k) + ", got " +
                          token_name(peek().kind));
    fatal_ = true;
    return peek();
  }
  void error(SourceLoc loc, const std::string &msg) {
    diags_.push_back({Severity::Error, loc, msg});
  }
  void sync_toplevel() {
    while (!at(Tok::End) && !at(Tok::KwStruct) && !at(Tok::KwFn) && !at(Tok::KwExtern)) take();
  }

  // struct Name { field: type; ... }
  void parse_struct(Module &m) {
    StructDef sd;
    sd.loc = take().loc; // struct
    sd.name = expect(Tok::Ident).text;
    expect(Tok::LBrace);
    while (!at(Tok::RBrace) && !at(Tok::End) && !fatal_) {
      FieldDef fd;
      fd.name = expect(Tok::Ident).text;
      expect(Tok::Colon);
      parse_field_type(fd);
      expect(Tok::Semi);
      if (fatal_) return;
      sd.fields.push_back(std::move(fd));
    }
    expect(Tok::RBrace);
    m.structs.push_back(std::move(sd));
  }

  void parse_field_type(FieldDef &fd) {
    if (accept(Tok::KwF64)) {
      fd.kind = Scalar::F64;
      if (accept(Tok::LBracket)) {
        Token n = expect(Tok::IntLit);
        fd.vec_arity = static_cast<int>(n.ival);
        expect(Tok::RBracket);
        if (fd.vec_arity < 1) error(n.loc, "vector arity must be at least 1");
      }
    } else if (accept(Tok::KwI64)) {
      fd.kind = Scalar::I64;
    } else if (accept(Tok::KwBool)) {
      fd.kind = Scalar::Bool;
    } else {
      error(peek().loc, std::string("expected field type, got ") + token_name(peek().kind));
      fatal_ = true;
    }
  }

  bool parse_scalar_kind(Scalar &out) {
    if (accept(Tok::KwF64)) {
      out = Scalar::F64;
      return true;
    }
    if (accept(Tok::KwI64)) {
      out = Scalar::I64;
      return true;
    }
    if (accept(Tok::KwBool)) {
      out = Scalar::Bool;
      return true;
    }
    return false;
  }

  void parse_fn(Module &m) {
    FunctionDef fn;
    fn.is_extern = accept(Tok::KwExtern);
    fn.loc = expect(Tok::KwFn).loc;
    fn.name = expect(Tok::Ident).text;
    expect(Tok::LParen);
    while (!at(Tok::RParen) && !at(Tok::End) && !fatal_) {
      if (!fn.params.empty()) expect(Tok::Comma);
      Param p;
      Token id = expect(Tok::Ident);
      p.name = id.text;
      p.loc = id.loc;
      expect(Tok::Colon);
      parse_param_type(p);
      fn.params.push_back(std::move(p));
    }
    expect(Tok::RParen);
    if (accept(Tok::Arrow)) {
      fn.has_ret = true;
      if (!parse_scalar_kind(fn.ret)) {
        error(peek().loc, "expected scalar return type");
        fatal_ = true;
      }
    }
    if (fn.is_extern) {
      expect(Tok::Semi);
    } else {
      expect(Tok::LBrace);
      fn.body = parse_stmts(fn);
      expect(Tok::RBrace);
    }
    m.fns.push_back(std::move(fn));
  }

  void parse_param_type(Param &p) {
    if (accept(Tok::Amp)) {
      p.kind = ParamKind::StructRef;
      p.name_of_struct = expect(Tok::Ident).text;
      return;
    }
    if (at(Tok::KwSlice) || at(Tok::KwPtrList)) {
      p.kind = ParamKind::Container;
      p.ckind = take().kind == Tok::KwSlice ? ContainerKind::Slice : ContainerKind::PtrList;
      expect(Tok::Lt);
      p.name_of_struct = expect(Tok::Ident).text;
      expect(Tok::Gt);
      return;
    }
    Scalar s;
    if (parse_scalar_kind(s)) {
      p.kind = ParamKind::ScalarVal;
      p.scalar = s;
      // `f64[]` and `f64[k][]` are buffer parameters (generated clones)
      if (accept(Tok::LBracket)) {
        p.kind = ParamKind::Buffer;
        if (at(Tok::IntLit)) {
          p.vec_arity = static_cast<int>(take().ival);
          expect(Tok::RBracket);
          expect(Tok::LBracket);
        }
        expect(Tok::RBracket);
      }
      return;
    }
    error(peek().loc, std::string("expected parameter type, got ") + token_name(peek().kind));
    fatal_ = true;
  }

  std::vector<StmtPtr> parse_stmts(FunctionDef &fn) {
    std::vector<StmtPtr> out;
    while (!at(Tok::RBrace) && !at(Tok::End) && !fatal_) {
      auto s = parse_stmt(fn);
      if (s) out.push_back(std::move(s));
    }
    return out;
  }

  StmtPtr parse_stmt(FunctionDef &fn) {
    switch (peek().kind) {
    case Tok::KwLet: return parse_let();
    case Tok::KwIf: return parse_if(fn);
    case Tok::KwReturn: return parse_return();
    case Tok::LBrace: {
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::Block;
      s->loc = take().loc;
      s->body = parse_stmts(fn);
      expect(Tok::RBrace);
      return s;
    }
    case Tok::KwFor:
    case Tok::AtConvert:
    case Tok::AtConvertHoist:
    case Tok::AtOffload:
    case Tok::AtTarget:
    case Tok::AtAssumeDisjoint: return parse_for(fn);
    default: return parse_assign_or_call();
    }
  }

  // `let x: f64 = e;` declares a scalar; `let x: f64[e];` (optionally
  // `let x: f64[k][e];`) declares a zero-initialized buffer of e slots.
  StmtPtr parse_let() {
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Let;
    s->loc = take().loc; // let
    s->name = expect(Tok::Ident).text;
    expect(Tok::Colon);
    if (!parse_scalar_kind(s->scalar)) {
      error(peek().loc, "expected scalar type after ':'");
      fatal_ = true;
      return nullptr;
    }
    if (accept(Tok::LBracket)) {
      s->kind = StmtKind::BufDecl;
      // an immediate IntLit followed by ']' '[' is a vector arity
      if (at(Tok::IntLit) && peek(1).kind == Tok::RBracket && peek(2).kind == Tok::LBracket) {
        s->vec_arity = static_cast<int>(take().ival);
        expect(Tok::RBracket);
        expect(Tok::LBracket);
      }
      s->e1 = parse_expr();
      expect(Tok::RBracket);
      expect(Tok::Semi);
      return s;
    }
    expect(Tok::Assign);
    s->e1 = parse_expr();
    expect(Tok::Semi);
    return s;
  }

  StmtPtr parse_if(FunctionDef &fn) {
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::If;
    s->loc = take().loc; // if
    s->e1 = parse_expr();
    expect(Tok::LBrace);
    s->body = parse_stmts(fn);
    expect(Tok::RBrace);
    if (accept(Tok::KwElse)) {
      if (at(Tok::KwIf)) {
        s->els.push_back(parse_if(fn));
      } else {
        expect(Tok::LBrace);
        s->els = parse_stmts(fn);
        expect(Tok::RBrace);
      }
    }
    return s;
  }

  StmtPtr parse_return() {
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Return;
    s->loc = take().loc;
    if (!at(Tok::Semi)) s->e1 = parse_expr();
    expect(Tok::Semi);
    return s;
  }

  StmtPtr parse_for(FunctionDef &fn) {
    // annotation group
    LoopAnn ann = LoopAnn::None;
    int hoist = 0;
    std::string target;
    SourceLoc ann_loc{};
    while (true) {
      if (at(Tok::AtConvert) || at(Tok::AtConvertHoist) || at(Tok::AtOffload)) {
        Token t = take();
        if (ann != LoopAnn::None) {
          error(t.loc, "conflicting conversion annotations on one loop");
        }
        if (!ann_loc.valid()) ann_loc = t.loc;
        if (t.kind == Tok::AtConvert) ann = LoopAnn::Convert;
        if (t.kind == Tok::AtOffload) ann = LoopAnn::Offload;
        if (t.kind == Tok::AtConvertHoist) {
          ann = LoopAnn::ConvertHoist;
          expect(Tok::LParen);
          Token n = expect(Tok::IntLit);
          hoist = static_cast<int>(n.ival);
          expect(Tok::RParen);
          if (hoist < 1) error(n.loc, "hoist depth must be at least 1");
        }
        continue;
      }
      if (at(Tok::AtTarget)) {
        Token t = take();
        if (!target.empty()) error(t.loc, "duplicate @soa_target");
        expect(Tok::LParen);
        target = expect(Tok::Ident).text;
        expect(Tok::RParen);
        continue;
      }
      if (at(Tok::AtAssumeDisjoint)) {
        take();
        expect(Tok::LParen);
        std::string a = expect(Tok::Ident).text;
        expect(Tok::Comma);
        std::string b = expect(Tok::Ident).text;
        expect(Tok::RParen);
        fn.disjoint.emplace_back(a, b);
        continue;
      }
      break;
    }

    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::For;
    s->loc = expect(Tok::KwFor).loc;
    // annotated loops report the annotation's position
    if (ann_loc.valid()) s->loc = ann_loc;
    s->ann = ann;
    s->hoist = hoist;
    s->soa_target = target;
    s->binder = expect(Tok::Ident).text;
    expect(Tok::KwIn);
    s->e1 = parse_expr();
    if (accept(Tok::DotDot)) {
      s->is_range = true;
      s->e2 = parse_expr();
    }
    expect(Tok::LBrace);
    s->body = parse_stmts(fn);
    expect(Tok::RBrace);
    return s;
  }

  StmtPtr parse_assign_or_call() {
    SourceLoc loc = peek().loc;
    ExprPtr lhs = parse_expr();
    if (fatal_ || !lhs) return nullptr;
    if (at(Tok::Semi)) {
      take();
      if (lhs->kind != ExprKind::Call) {
        error(loc, "expression statement must be a call");
      }
      auto s = std::make_unique<Stmt>();
      s->kind = StmtKind::ExprStmt;
      s->loc = loc;
      s->e1 = std::move(lhs);
      return s;
    }
    AssignOp op;
    switch (peek().kind) {
    case Tok::Assign: op = AssignOp::Set; break;
    case Tok::PlusAssign: op = AssignOp::Add; break;
    case Tok::MinusAssign: op = AssignOp::Sub; break;
    case Tok::StarAssign: op = AssignOp::Mul; break;
    case Tok::SlashAssign: op = AssignOp::Div; break;
    default:
      error(peek().loc, std::string("expected assignment or ';', got ") +
                            token_name(peek().kind));
      fatal_ = true;
      return nullptr;
    }
    take();
    auto s = std::make_unique<Stmt>();
    s->kind = StmtKind::Assign;
    s->loc = loc;
    s->aop = op;
    s->e1 = std::move(lhs);
    s->e2 = parse_expr();
    expect(Tok::Semi);
    return s;
  }

  // Pratt expression parser.
  ExprPtr parse_expr() { return parse_or(); }

  ExprPtr parse_or() {
    auto lhs = parse_and();
    while (at(Tok::OrOr) && !fatal_) {
      SourceLoc loc = take().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Binary;
      e->loc = loc;
      e->bop = BinOp::Or;
      e->a = std::move(lhs);
      e->b = parse_and();
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_and() {
    auto lhs = parse_cmp();
    while (at(Tok::AndAnd) && !fatal_) {
      SourceLoc loc = take().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Binary;
      e->loc = loc;
      e->bop = BinOp::And;
      e->a = std::move(lhs);
      e->b = parse_cmp();
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_cmp() {
    auto lhs = parse_add();
    while (!fatal_) {
      BinOp op;
      switch (peek().kind) {
      case Tok::Lt: op = BinOp::Lt; break;
      case Tok::Le: op = BinOp::Le; break;
      case Tok::Gt: op = BinOp::Gt; break;
      case Tok::Ge: op = BinOp::Ge; break;
      case Tok::EqEq: op = BinOp::Eq; break;
      case Tok::NotEq: op = BinOp::Ne; break;
      default: return lhs;
      }
      SourceLoc loc = take().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Binary;
      e->loc = loc;
      e->bop = op;
      e->a = std::move(lhs);
      e->b = parse_add();
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_add() {
    auto lhs = parse_mul();
    while ((at(Tok::Plus) || at(Tok::Minus)) && !fatal_) {
      BinOp op = at(Tok::Plus) ? BinOp::Add : BinOp::Sub;
      SourceLoc loc = take().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Binary;
      e->loc = loc;
      e->bop = op;
      e->a = std::move(lhs);
      e->b = parse_mul();
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_mul() {
    auto lhs = parse_unary();
    while ((at(Tok::Star) || at(Tok::Slash) || at(Tok::Percent)) && !fatal_) {
      BinOp op = at(Tok::Star) ? BinOp::Mul : (at(Tok::Slash) ? BinOp::Div : BinOp::Mod);
      SourceLoc loc = take().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Binary;
      e->loc = loc;
      e->bop = op;
      e->a = std::move(lhs);
      e->b = parse_unary();
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    if (at(Tok::Minus) || at(Tok::Not)) {
      UnOp op = at(Tok::Minus) ? UnOp::Neg : UnOp::Not;
      SourceLoc loc = take().loc;
      auto e = std::make_unique<Expr>();
      e->kind = ExprKind::Unary;
      e->loc = loc;
      e->uop = op;
      e->a = parse_unary();
      return e;
    }
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    auto e = parse_primary();
    while (!fatal_) {
      if (at(Tok::Dot)) {
        SourceLoc loc = take().loc;
        auto f = std::make_unique<Expr>();
        f->kind = ExprKind::Field;
        f->loc = loc;
        f->name = expect(Tok::Ident).text;
        f->a = std::move(e);
        e = std::move(f);
        continue;
      }
      if (at(Tok::LBracket)) {
        SourceLoc loc = take().loc;
        auto ix = std::make_unique<Expr>();
        ix->kind = ExprKind::Index;
        ix->loc = loc;
        ix->a = std::move(e);
        ix->b = parse_expr();
        expect(Tok::RBracket);
        e = std::move(ix);
        continue;
      }
      break;
    }
    return e;
  }

  ExprPtr parse_primary() {
    auto e = std::make_unique<Expr>();
    e->loc = peek().loc;
    switch (peek().kind) {
    case Tok::FloatLit:
      e->kind = ExprKind::FloatLit;
      e->fval = take().fval;
      return e;
    case Tok::IntLit:
      e->kind = ExprKind::IntLit;
      e->ival = take().ival;
      return e;
    case Tok::KwTrue:
      take();
      e->kind = ExprKind::BoolLit;
      e->bval = true;
      return e;
    case Tok::KwFalse:
      take();
      e->kind = ExprKind::BoolLit;
      e->bval = false;
      return e;
    case Tok::LParen: {
      take();
      auto inner = parse_expr();
      expect(Tok::RParen);
      return inner;
    }
    case Tok::Ident: {
      Token id = take();
      if (at(Tok::LParen)) {
        take();
        e->kind = ExprKind::Call;
        e->name = id.text;
        while (!at(Tok::RParen) && !at(Tok::End) && !fatal_) {
          if (!e->args.empty()) expect(Tok::Comma);
          e->args.push_back(parse_expr());
        }
        expect(Tok::RParen);
        return e;
      }
      e->kind = ExprKind::Var;
      e->name = id.text;
      return e;
    }
    default:
      error(peek().loc, std::string("expected expression, got ") + token_name(peek().kind));
      fatal_ = true;
      e->kind = ExprKind::IntLit;
      return e;
    }
  }
};

// ---------------------------------------------------------------------------
// Resolution and type checking.
// ---------------------------------------------------------------------------

class Sema {
public:
  Sema(Module &m, std::vector<Diagnostic> &diags) : m_(m), diags_(diags) {}

  void run() {
    check_structs();
    check_fn_signatures();
    if (has_errors(diags_)) return;
    for (auto &fn : m_.fns) {
      if (fn.is_extern) continue;
      check_fn_body(fn);
    }
  }

private:
  Module &m_;
  std::vector<Diagnostic> &diags_;

  struct Local {
    enum Kind { ScalarVar, BufferVar, ParamRef, Binder, IndexVar, ContainerRef, BufferParam } kind;
    Scalar scalar = Scalar::F64;
    int vec_arity = 0;
    int struct_index = -1;
    ContainerKind ckind = ContainerKind::Slice;
    int slot = -1;
  };
  // one flat scope per function: shadowing is rejected
  std::unordered_map<std::string, Local> scope_;
  FunctionDef *fn_ = nullptr;
  int next_slot_ = 0;
  int loop_depth_ = 0;
  bool allow_void_ = false; // set while checking an expression statement

  void error(SourceLoc loc, const std::string &msg) {
    diags_.push_back({Severity::Error, loc, msg});
  }

  void check_structs() {
    std::unordered_set<std::string> names;
    for (auto &sd : m_.structs) {
      if (!names.insert(sd.name).second)
        error(sd.loc, "duplicate struct '" + sd.name + "'");
      std::unordered_set<std::string> fields;
      int offset = 0;
      for (auto &fd : sd.fields) {
        if (!fields.insert(fd.name).second)
          error(sd.loc, "duplicate field '" + fd.name + "' in struct '" + sd.name + "'");
        fd.byte_size = fd.vec_arity > 0 ? 8 * fd.vec_arity : scalar_size(fd.kind);
        fd.byte_offset = offset;
        offset += fd.byte_size;
      }
      sd.record_size = offset;
      if (sd.fields.empty()) error(sd.loc, "struct '" + sd.name + "' has no fields");
    }
  }

  void check_fn_signatures() {
    std::unordered_set<std::string> names;
    for (auto &fn : m_.fns) {
      if (!names.insert(fn.name).second)
        error(fn.loc, "duplicate function '" + fn.name + "'");
      std::unordered_set<std::string> pnames;
      for (auto &p : fn.params) {
        if (!pnames.insert(p.name).second)
          error(p.loc, "duplicate parameter '" + p.name + "'");
        if (p.kind == ParamKind::StructRef || p.kind == ParamKind::Container) {
          p.struct_index = m_.struct_index(p.name_of_struct);
          if (p.struct_index < 0)
            error(p.loc, "unknown struct '" + p.name_of_struct + "'");
        }
      }
      // disjointness assertions must name container parameters
      for (auto &[a, b] : fn.disjoint) {
        for (const std::string &n : {a, b}) {
          int pi = fn.param_index(n);
          if (pi < 0 || fn.params[pi].kind != ParamKind::Container)
            error(fn.loc, "@assume_disjoint argument '" + n +
                              "' is not a container parameter of '" + fn.name + "'");
        }
      }
    }
  }

  void check_fn_body(FunctionDef &fn) {
    fn_ = &fn;
    scope_.clear();
    next_slot_ = 0;
    loop_depth_ = 0;
    for (auto &p : fn.params) {
      p.slot = next_slot_++;
      Local l;
      l.slot = p.slot;
      switch (p.kind) {
      case ParamKind::ScalarVal:
        l.kind = Local::ScalarVar;
        l.scalar = p.scalar;
        break;
      case ParamKind::StructRef:
        l.kind = Local::ParamRef;
        l.struct_index = p.struct_index;
        break;
      case ParamKind::Container:
        l.kind = Local::ContainerRef;
        l.struct_index = p.struct_index;
        l.ckind = p.ckind;
        break;
      case ParamKind::Buffer:
        l.kind = Local::BufferParam;
        l.scalar = p.scalar;
        l.vec_arity = p.vec_arity;
        break;
      }
      scope_.emplace(p.name, l);
    }
    check_block(fn.body);
    fn.num_slots = next_slot_;
    if (fn.has_ret && !ends_with_return(fn.body))
      error(fn.loc, "function '" + fn.name + "' may reach the end without returning");
  }

  static bool ends_with_return(const std::vector<StmtPtr> &body) {
    if (body.empty()) return false;
    const Stmt &last = *body.back();
    if (last.kind == StmtKind::Return) return true;
    if (last.kind == StmtKind::Block) return ends_with_return(last.body);
    if (last.kind == StmtKind::If)
      return !last.els.empty() && ends_with_return(last.body) && ends_with_return(last.els);
    return false;
  }

  void declare(const std::string &name, SourceLoc loc, Local l) {
    if (scope_.count(name)) {
      error(loc, "redeclaration of '" + name + "'");
      return;
    }
    scope_.emplace(name, l);
  }

  void check_block(std::vector<StmtPtr> &body) {
    for (auto &s : body) check_stmt(*s);
  }

  void check_stmt(Stmt &s) {
    switch (s.kind) {
    case StmtKind::Let: {
      ValueType t = check_expr(*s.e1);
      ValueType want = ValueType::scalar(s.scalar);
      if (t.cat != ValueType::Invalid && t.cat != want.cat)
        error(s.loc, "initializer type does not match 'let " + s.name + "'");
      s.slot = next_slot_++;
      Local l;
      l.kind = Local::ScalarVar;
      l.scalar = s.scalar;
      l.slot = s.slot;
      declare(s.name, s.loc, l);
      break;
    }
    case StmtKind::BufDecl: {
      ValueType t = check_expr(*s.e1);
      if (t.cat != ValueType::Invalid && t.cat != ValueType::I64)
        error(s.loc, "buffer length must be i64");
      s.slot = next_slot_++;
      Local l;
      l.kind = Local::BufferVar;
      l.scalar = s.scalar;
      l.vec_arity = s.vec_arity;
      l.slot = s.slot;
      declare(s.name, s.loc, l);
      break;
    }
    case StmtKind::Assign: {
      ValueType lt = check_lvalue(*s.e1);
      ValueType rt = check_expr(*s.e2);
      if (lt.cat == ValueType::Invalid || rt.cat == ValueType::Invalid) break;
      if (lt.cat != rt.cat) {
        error(s.loc, "assignment type mismatch");
        break;
      }
      if (s.aop != AssignOp::Set && lt.cat == ValueType::Bool)
        error(s.loc, "compound assignment needs a numeric left-hand side");
      break;
    }
    case StmtKind::If: {
      ValueType t = check_expr(*s.e1);
      if (t.cat != ValueType::Invalid && t.cat != ValueType::Bool)
        error(s.loc, "if condition must be bool");
      check_block(s.body);
      check_block(s.els);
      break;
    }
    case StmtKind::For: check_for(s); break;
    case StmtKind::ExprStmt:
      allow_void_ = true;
      check_expr(*s.e1);
      allow_void_ = false;
      break;
    case StmtKind::Return: {
      if (!fn_->has_ret) {
        if (s.e1) error(s.loc, "'" + fn_->name + "' does not return a value");
      } else if (!s.e1) {
        error(s.loc, "'" + fn_->name + "' must return a value");
      } else {
        ValueType t = check_expr(*s.e1);
        if (t.cat != ValueType::Invalid && t.cat != ValueType::scalar(fn_->ret).cat)
          error(s.loc, "return type mismatch");
      }
      break;
    }
    case StmtKind::Block: check_block(s.body); break;
    }
  }

  void check_for(Stmt &s) {
    bool has_conversion = s.ann != LoopAnn::None;
    if (s.is_range) {
      ValueType lo = check_expr(*s.e1);
      ValueType hi = check_expr(*s.e2);
      if ((lo.cat != ValueType::Invalid && lo.cat != ValueType::I64) ||
          (hi.cat != ValueType::Invalid && hi.cat != ValueType::I64))
        error(s.loc, "range bounds must be i64");
      if (has_conversion && s.soa_target.empty()) {
        error(s.loc, "annotation on a non-container loop (use @soa_target to name the array)");
      }
      if (!s.soa_target.empty()) {
        if (!has_conversion)
          error(s.loc, "@soa_target without a conversion annotation");
        auto it = scope_.find(s.soa_target);
        if (it == scope_.end() || it->second.kind != Local::ContainerRef)
          error(s.loc, "@soa_target argument '" + s.soa_target +
                           "' is not a container in scope");
      }
      s.binder_slot = next_slot_++;
      Local l;
      l.kind = Local::IndexVar;
      l.scalar = Scalar::I64;
      l.slot = s.binder_slot;
      declare(s.binder, s.loc, l);
    } else {
      if (!s.soa_target.empty())
        error(s.loc, "@soa_target is only valid on indexed loops");
      ValueType ct = check_expr(*s.e1);
      if (ct.cat != ValueType::Container) {
        error(s.loc, "loop source must be a container");
        return;
      }
      s.binder_slot = next_slot_++;
      Local l;
      l.kind = Local::Binder;
      l.struct_index = ct.struct_index;
      l.slot = s.binder_slot;
      declare(s.binder, s.loc, l);
    }
    if (s.ann == LoopAnn::ConvertHoist && s.hoist > loop_depth_) {
      error(s.loc, "hoist depth " + std::to_string(s.hoist) +
                       " exceeds loop nesting depth " + std::to_string(loop_depth_));
    }
    ++loop_depth_;
    check_block(s.body);
    --loop_depth_;
  }

  ValueType check_lvalue(Expr &e) {
    ValueType t = check_expr(e);
    if (t.cat == ValueType::Invalid) return t;
    bool ok = false;
    if (e.kind == ExprKind::Var) {
      auto it = scope_.find(e.name);
      ok = it != scope_.end() &&
           (it->second.kind == Local::ScalarVar || it->second.kind == Local::IndexVar);
    } else if (e.kind == ExprKind::Field) {
      ok = t.is_scalar(); // scalar field of a record ref
    } else if (e.kind == ExprKind::Index) {
      ok = t.is_scalar(); // buffer slot / vector lane
    }
    if (!ok) {
      error(e.loc, "expression is not assignable");
      return ValueType{};
    }
    return t;
  }

  ValueType check_expr(Expr &e) {
    switch (e.kind) {
    case ExprKind::FloatLit: e.type = ValueType::scalar(Scalar::F64); return e.type;
    case ExprKind::IntLit: e.type = ValueType::scalar(Scalar::I64); return e.type;
    case ExprKind::BoolLit: e.type = ValueType::scalar(Scalar::Bool); return e.type;
    case ExprKind::Var: return check_var(e);
    case ExprKind::Field: return check_field(e);
    case ExprKind::Index: return check_index(e);
    case ExprKind::Unary: {
      ValueType t = check_expr(*e.a);
      if (t.cat == ValueType::Invalid) return t;
      if (e.uop == UnOp::Not) {
        if (t.cat != ValueType::Bool) {
          error(e.loc, "'!' needs a bool operand");
          return ValueType{};
        }
      } else {
        if (t.cat != ValueType::F64 && t.cat != ValueType::I64) {
          error(e.loc, "'-' needs a numeric operand");
          return ValueType{};
        }
      }
      e.type = t;
      return t;
    }
    case ExprKind::Binary: return check_binary(e);
    case ExprKind::Call: return check_call(e);
    }
    return ValueType{};
  }

  ValueType check_var(Expr &e) {
    auto it = scope_.find(e.name);
    if (it == scope_.end()) {
      error(e.loc, "unknown identifier '" + e.name + "'");
      return ValueType{};
    }
    const Local &l = it->second;
    e.slot = l.slot;
    ValueType t;
    switch (l.kind) {
    case Local::ScalarVar:
    case Local::IndexVar: t = ValueType::scalar(l.scalar); break;
    case Local::ParamRef:
    case Local::Binder:
      t.cat = ValueType::Record;
      t.struct_index = l.struct_index;
      break;
    case Local::ContainerRef:
      t.cat = ValueType::Container;
      t.struct_index = l.struct_index;
      t.ckind = l.ckind;
      break;
    case Local::BufferVar:
    case Local::BufferParam:
      t.cat = ValueType::Buffer;
      t.elem = l.scalar;
      t.vec_arity = l.vec_arity;
      break;
    }
    e.type = t;
    return t;
  }

  ValueType check_field(Expr &e) {
    ValueType base = check_expr(*e.a);
    if (base.cat == ValueType::Invalid) return base;
    if (base.cat != ValueType::Record) {
      error(e.loc, "field access on a non-record value");
      return ValueType{};
    }
    const StructDef &sd = m_.structs[base.struct_index];
    int fi = sd.field_index(e.name);
    if (fi < 0) {
      error(e.loc, "struct '" + sd.name + "' has no field '" + e.name + "'");
      return ValueType{};
    }
    e.field_index = fi;
    e.struct_index = base.struct_index;
    const FieldDef &fd = sd.fields[fi];
    ValueType t;
    if (fd.vec_arity > 0) {
      t.cat = ValueType::VecField;
      t.vec_arity = fd.vec_arity;
    } else {
      t = ValueType::scalar(fd.kind);
    }
    e.type = t;
    return t;
  }

  ValueType check_index(Expr &e) {
    ValueType base = check_expr(*e.a);
    ValueType idx = check_expr(*e.b);
    if (base.cat == ValueType::Invalid || idx.cat == ValueType::Invalid) return ValueType{};
    if (idx.cat != ValueType::I64) {
      error(e.loc, "index must be i64");
      return ValueType{};
    }
    ValueType t;
    switch (base.cat) {
    case ValueType::Container:
      t.cat = ValueType::Record;
      t.struct_index = base.struct_index;
      break;
    case ValueType::Buffer:
      if (base.vec_arity > 0) {
        t.cat = ValueType::VecField;
        t.vec_arity = base.vec_arity;
        t.elem = base.elem;
      } else {
        t = ValueType::scalar(base.elem);
      }
      break;
    case ValueType::VecField:
      t = ValueType::scalar(Scalar::F64);
      break;
    default:
      error(e.loc, "value is not indexable");
      return ValueType{};
    }
    e.type = t;
    return t;
  }

  ValueType check_binary(Expr &e) {
    ValueType a = check_expr(*e.a);
    ValueType b = check_expr(*e.b);
    if (a.cat == ValueType::Invalid || b.cat == ValueType::Invalid) return ValueType{};
    auto fail = [&](const char *msg) {
      error(e.loc, msg);
      return ValueType{};
    };
    switch (e.bop) {
    case BinOp::And:
    case BinOp::Or:
      if (a.cat != ValueType::Bool || b.cat != ValueType::Bool)
        return fail("logical operator needs bool operands");
      e.type = ValueType::scalar(Scalar::Bool);
      return e.type;
    case BinOp::Eq:
    case BinOp::Ne:
      if (!a.is_scalar() || a.cat != b.cat) return fail("comparison needs matching scalars");
      e.type = ValueType::scalar(Scalar::Bool);
      return e.type;
    case BinOp::Lt:
    case BinOp::Le:
    case BinOp::Gt:
    case BinOp::Ge:
      if (!((a.cat == ValueType::F64 && b.cat == ValueType::F64) ||
            (a.cat == ValueType::I64 && b.cat == ValueType::I64)))
        return fail("comparison needs matching numeric operands");
      e.type = ValueType::scalar(Scalar::Bool);
      return e.type;
    case BinOp::Mod:
      if (a.cat != ValueType::I64 || b.cat != ValueType::I64)
        return fail("'%' needs i64 operands");
      e.type = ValueType::scalar(Scalar::I64);
      return e.type;
    default:
      if (a.cat == ValueType::F64 && b.cat == ValueType::F64) {
        e.type = ValueType::scalar(Scalar::F64);
        return e.type;
      }
      if (a.cat == ValueType::I64 && b.cat == ValueType::I64) {
        e.type = ValueType::scalar(Scalar::I64);
        return e.type;
      }
      return fail("arithmetic needs matching numeric operands (no implicit conversions)");
    }
  }

  ValueType check_call(Expr &e) {
    bool void_ok = allow_void_;
    allow_void_ = false;
    // intrinsics first
    static const std::unordered_map<std::string, Intrinsic> kIntr = {
        {"sqrt", Intrinsic::Sqrt}, {"abs", Intrinsic::Abs},     {"min", Intrinsic::Min},
        {"max", Intrinsic::Max},   {"floor", Intrinsic::Floor}, {"len", Intrinsic::Len},
    };
    auto ii = kIntr.find(e.name);
    if (ii != kIntr.end()) {
      e.intr = ii->second;
      size_t want = (e.intr == Intrinsic::Min || e.intr == Intrinsic::Max) ? 2 : 1;
      if (e.args.size() != want) {
        error(e.loc, "'" + e.name + "' takes " + std::to_string(want) + " argument(s)");
        return ValueType{};
      }
      if (e.intr == Intrinsic::Len) {
        ValueType t = check_expr(*e.args[0]);
        if (t.cat != ValueType::Invalid && t.cat != ValueType::Container)
          error(e.loc, "len() needs a container");
        e.type = ValueType::scalar(Scalar::I64);
        return e.type;
      }
      for (auto &arg : e.args) {
        ValueType t = check_expr(*arg);
        if (t.cat != ValueType::Invalid && t.cat != ValueType::F64)
          error(arg->loc, "'" + e.name + "' needs f64 arguments");
      }
      e.type = ValueType::scalar(Scalar::F64);
      return e.type;
    }

    int fi = m_.fn_index(e.name);
    if (fi < 0) {
      error(e.loc, "unknown function '" + e.name + "'");
      return ValueType{};
    }
    e.callee_index = fi;
    const FunctionDef &callee = m_.fns[fi];
    if (e.args.size() != callee.params.size()) {
      error(e.loc, "'" + e.name + "' expects " + std::to_string(callee.params.size()) +
                       " argument(s), got " + std::to_string(e.args.size()));
      return ValueType{};
    }
    for (size_t i = 0; i < e.args.size(); ++i) {
      ValueType t = check_expr(*e.args[i]);
      if (t.cat == ValueType::Invalid) continue;
      const Param &p = callee.params[i];
      switch (p.kind) {
      case ParamKind::ScalarVal:
        if (t.cat != ValueType::scalar(p.scalar).cat)
          error(e.args[i]->loc, "argument type mismatch for '" + p.name + "'");
        break;
      case ParamKind::StructRef:
        if (t.cat != ValueType::Record || t.struct_index != p.struct_index)
          error(e.args[i]->loc, "argument '" + p.name + "' needs a &" +
                                    m_.structs[p.struct_index].name + " record");
        break;
      case ParamKind::Container:
        if (t.cat != ValueType::Container || t.struct_index != p.struct_index ||
            t.ckind != p.ckind)
          error(e.args[i]->loc, "argument '" + p.name + "' needs a matching container");
        break;
      case ParamKind::Buffer:
        if (t.cat != ValueType::Buffer || t.elem != p.scalar || t.vec_arity != p.vec_arity)
          error(e.args[i]->loc, "argument '" + p.name + "' needs a matching buffer");
        break;
      }
    }
    if (callee.has_ret) {
      e.type = ValueType::scalar(callee.ret);
      return e.type;
    }
    if (!void_ok)
      error(e.loc, "call to '" + e.name + "' in value position, but it returns nothing");
    e.type = ValueType{};
    return e.type;
  }
};

} // namespace

ParseResult parse(std::string_view source) {
  ParseResult res;
  auto tokens = lex(source, res.diags);
  if (has_errors(res.diags)) return res;
  Parser p(std::move(tokens), res.diags);
  Module m = p.run();
  if (has_errors(res.diags)) return res;
  Sema sema(m, res.diags);
  sema.run();
  if (has_errors(res.diags)) return res;
  res.module = std::move(m);
  return res;
}

void run_sema(Module &m, std::vector<Diagnostic> &diags) {
  Sema sema(m, diags);
  sema.run();
}

} // namespace soaview
