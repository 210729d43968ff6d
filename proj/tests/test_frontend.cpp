#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "soaview/emit_kl.hpp"
#include "soaview/lexer.hpp"
#include "soaview/parser.hpp"

using namespace soaview;

namespace {

std::vector<Token> lex_ok(std::string_view src) {
  std::vector<Diagnostic> diags;
  auto toks = lex(src, diags);
  REQUIRE(!has_errors(diags));
  return toks;
}

Module parse_ok(std::string_view src) {
  auto res = parse(src);
  for (const auto &d : res.diags) INFO(format_diagnostic("<test>", d));
  REQUIRE(res.ok());
  return std::move(*res.module);
}

std::string first_error(std::string_view src) {
  auto res = parse(src);
  REQUIRE(!res.ok());
  for (const auto &d : res.diags)
    if (d.severity == Severity::Error) return d.message;
  return {};
}

const char *kListing = R"(struct Data {
  a: f64;
  b: f64;
  unused: f64;
}

fn kernel(items: slice<Data>) {
  @soa_convert
  for p in items {
    p.a = p.a + p.b;
  }
}
)";

} // namespace

TEST_CASE("lexer: basic token stream") {
  auto t = lex_ok("fn f(x: f64) -> f64 { return x * 2.0; }");
  CHECK(t[0].kind == Tok::KwFn);
  CHECK(t[1].kind == Tok::Ident);
  CHECK(t[1].text == "f");
  CHECK(t[7].kind == Tok::Arrow);
  CHECK(t.back().kind == Tok::End);
}

TEST_CASE("lexer: range dots do not eat an integer literal") {
  auto t = lex_ok("0..n");
  REQUIRE(t.size() == 4); // 0, .., n, End
  CHECK(t[0].kind == Tok::IntLit);
  CHECK(t[0].ival == 0);
  CHECK(t[1].kind == Tok::DotDot);
  CHECK(t[2].kind == Tok::Ident);
}

TEST_CASE("lexer: float shapes") {
  auto t = lex_ok("1.5 2e3 7.25e-2 10");
  CHECK(t[0].kind == Tok::FloatLit);
  CHECK(t[0].fval == 1.5);
  CHECK(t[1].kind == Tok::FloatLit);
  CHECK(t[1].fval == 2000.0);
  CHECK(t[2].kind == Tok::FloatLit);
  CHECK(t[2].fval == 0.0725);
  CHECK(t[3].kind == Tok::IntLit);
  CHECK(t[3].ival == 10);
}

TEST_CASE("lexer: comments and annotations") {
  auto t = lex_ok("// line\n@soa_convert /* block\n more */ @soa_convert_hoist "
                  "@soa_offload @soa_target @assume_disjoint");
  CHECK(t[0].kind == Tok::AtConvert);
  CHECK(t[1].kind == Tok::AtConvertHoist);
  CHECK(t[2].kind == Tok::AtOffload);
  CHECK(t[3].kind == Tok::AtTarget);
  CHECK(t[4].kind == Tok::AtAssumeDisjoint);
}

TEST_CASE("lexer: unknown annotation is an error") {
  std::vector<Diagnostic> diags;
  lex("@soa_magic", diags);
  REQUIRE(has_errors(diags));
  CHECK(diags[0].message.find("annotation") != std::string::npos);
}

TEST_CASE("lexer: compound assignment and logic operators") {
  auto t = lex_ok("+= -= *= /= && || ! != == <= >= < > % &");
  Tok want[] = {Tok::PlusAssign, Tok::MinusAssign, Tok::StarAssign, Tok::SlashAssign,
                Tok::AndAnd,     Tok::OrOr,        Tok::Not,        Tok::NotEq,
                Tok::EqEq,       Tok::Le,          Tok::Ge,         Tok::Lt,
                Tok::Gt,         Tok::Percent,     Tok::Amp};
  for (size_t i = 0; i < std::size(want); ++i) CHECK(t[i].kind == want[i]);
}

TEST_CASE("parser: record layout is packed with word-sized bools") {
  Module m = parse_ok("struct S { x: f64[2]; m: f64; frozen: bool; moved: bool; id: i64; }");
  const StructDef &s = m.structs[0];
  CHECK(s.fields[0].byte_offset == 0);
  CHECK(s.fields[0].byte_size == 16);
  CHECK(s.fields[1].byte_offset == 16);
  CHECK(s.fields[2].byte_offset == 24);
  CHECK(s.fields[2].byte_size == 4);
  CHECK(s.fields[3].byte_offset == 28);
  CHECK(s.fields[4].byte_offset == 32);
  CHECK(s.record_size == 40);
}

TEST_CASE("parser: annotated container loop round-trips") {
  Module m = parse_ok(kListing);
  REQUIRE(m.fns.size() == 1);
  const Stmt &loop = *m.fns[0].body[0];
  CHECK(loop.kind == StmtKind::For);
  CHECK(loop.ann == LoopAnn::Convert);
  CHECK(!loop.is_range);
  CHECK(loop.binder == "p");

  std::string printed = emit_kl(m);
  Module again = parse_ok(printed);
  CHECK(structurally_equal(m, again));
  CHECK(emit_kl(again) == printed);
}

TEST_CASE("parser: printing is a fixed point over a mixed program") {
  const char *src = R"(struct P { x: f64[2]; h: f64; n: i64; live: bool; }

extern fn report(v: f64);

fn clamp01(v: f64) -> f64 {
  return max(0.0, min(v, 1.0));
}

fn step(ps: ptrlist<P>, cells: slice<P>, dt: f64) -> i64 {
  let count: i64 = 0;
  let total: f64 = 0.0;
  @assume_disjoint(ps, cells)
  for p in ps {
    if p.live && p.h > 0.0 {
      p.x[0] += dt * clamp01(p.h);
      count = count + 1;
    } else if !p.live {
      p.n = p.n % 7;
    } else {
      p.h = -p.h;
    }
  }
  @soa_convert
  @soa_target(cells)
  for i in 0..len(cells) {
    total = total + cells[i].h;
  }
  for q in cells {
    q.h = floor(abs(q.h)) + sqrt(q.h) * 0.5;
  }
  report(total);
  return count;
}
)";
  Module m = parse_ok(src);
  std::string once = emit_kl(m);
  Module m2 = parse_ok(once);
  CHECK(structurally_equal(m, m2));
  CHECK(emit_kl(m2) == once);
}

TEST_CASE("parser: hoist annotation must fit the nesting depth") {
  std::string msg = first_error(R"(struct S { a: f64; }
fn f(outer: slice<S>, inner: slice<S>) {
  @soa_convert_hoist(2)
  for q in inner {
    q.a = 1.0;
  }
}
)");
  CHECK(msg.find("exceeds loop nesting depth") != std::string::npos);
}

TEST_CASE("parser: hoist inside one enclosing loop is accepted") {
  parse_ok(R"(struct S { a: f64; }
fn f(outer: slice<S>, inner: slice<S>) {
  for p in outer {
    @soa_convert_hoist(1)
    for q in inner {
      q.a = 1.0;
    }
  }
}
)");
}

TEST_CASE("parser: conversion annotation needs a container loop") {
  std::string msg = first_error(R"(struct S { a: f64; }
fn f(xs: slice<S>) {
  @soa_convert
  for i in 0..10 {
    let y: i64 = i;
  }
}
)");
  CHECK(msg.find("non-container loop") != std::string::npos);
}

TEST_CASE("parser: indexed loop with @soa_target is accepted") {
  Module m = parse_ok(R"(struct S { a: f64; }
fn f(xs: slice<S>) {
  @soa_convert
  @soa_target(xs)
  for i in 0..len(xs) {
    xs[i].a = 2.0 * xs[i].a;
  }
}
)");
  const Stmt &loop = *m.fns[0].body[0];
  CHECK(loop.is_range);
  CHECK(loop.soa_target == "xs");
}

TEST_CASE("parser: semantic rejections") {
  CHECK(first_error("struct S { a: f64; } struct S { b: f64; }").find("duplicate struct") !=
        std::string::npos);
  CHECK(first_error("struct S { a: f64; a: i64; }").find("duplicate field") !=
        std::string::npos);
  CHECK(first_error("fn f() {} fn f() {}").find("duplicate function") != std::string::npos);
  CHECK(first_error("fn f(x: f64, x: f64) {}").find("duplicate parameter") !=
        std::string::npos);
  CHECK(first_error("fn f(x: f64) { let x: f64 = 1.0; }").find("redeclaration") !=
        std::string::npos);
  CHECK(first_error("fn f() { let x: f64 = 1; }").find("does not match") !=
        std::string::npos);
  CHECK(first_error("fn f() { let x: f64 = 1.0 + 2; }").find("no implicit conversions") !=
        std::string::npos);
  CHECK(first_error("fn f() { let b: bool = true; b += true; }")
            .find("numeric left-hand side") != std::string::npos);
  CHECK(first_error("fn f() { let x: f64 = 1.0 % 2.0; }").find("i64") != std::string::npos);
  CHECK(first_error("fn f() { if 1 { } }").find("must be bool") != std::string::npos);
  CHECK(first_error("fn f() { for i in 0.0..4 { } }").find("i64") != std::string::npos);
  CHECK(first_error("fn f() { return 1.0; }").find("does not return") != std::string::npos);
  CHECK(first_error("fn f() -> f64 { return; }").find("must return") != std::string::npos);
  CHECK(first_error("fn f() -> f64 { let x: f64 = 0.0; }")
            .find("without returning") != std::string::npos);
  CHECK(first_error("fn g() {} fn f() { let x: f64 = g(); }").find("value position") !=
        std::string::npos);
  CHECK(first_error("fn f() { undeclared = 3.0; }").find("unknown identifier") !=
        std::string::npos);
  CHECK(first_error("fn f() { h(1.0); }").find("unknown function") != std::string::npos);
  CHECK(first_error("struct S { a: f64; } fn f(xs: slice<S>) { xs = xs; }")
            .find("not assignable") != std::string::npos);
  CHECK(first_error("struct S { a: f64; } fn f(p: &S) { p.b = 1.0; }")
            .find("no field") != std::string::npos);
  CHECK(first_error("struct S { v: f64[2]; } fn f(p: &S) { p.v = 1.0; }")
            .find("not assignable") != std::string::npos);
  CHECK(first_error("fn f(x: f64) { x[0] = 1.0; }").find("not indexable") !=
        std::string::npos);
  CHECK(first_error("struct S { a: f64; } fn f(xs: slice<S>) { let n: i64 = len(xs); "
                    "let m: f64 = len(1.0); }")
            .find("needs a container") != std::string::npos);
  CHECK(first_error("fn f(q: &Missing) {}").find("unknown struct") != std::string::npos);
  CHECK(first_error("struct S { a: f64; } fn f(xs: slice<S>, x: f64) { @assume_disjoint(xs, x) "
                    "for p in xs { p.a = 1.0; } }")
            .find("container parameter") != std::string::npos);
  CHECK(first_error("struct S { a: f64; } fn f(xs: slice<S>) { @soa_target(xs) for p in xs "
                    "{ p.a = 1.0; } }")
            .find("indexed loops") != std::string::npos);
  CHECK(first_error("struct S { a: f64; } fn f(xs: slice<S>) { @soa_convert @soa_offload "
                    "for p in xs { p.a = 1.0; } }")
            .find("conflicting conversion annotations") != std::string::npos);
}

TEST_CASE("parser: buffer declarations round-trip") {
  Module m = parse_ok(R"(fn f(n: i64) {
  let speeds: f64[2][n];
  let mass: f64[n];
  let ids: i64[n];
  let flags: bool[n];
  speeds[0][1] = 3.5;
  mass[1] = speeds[0][1];
  ids[0] = 7;
  flags[2] = ids[0] == 7;
}
)");
  CHECK(m.fns[0].body[0]->kind == StmtKind::BufDecl);
  CHECK(m.fns[0].body[0]->vec_arity == 2);
  std::string printed = emit_kl(m);
  CHECK(printed.find("let speeds: f64[2][n];") != std::string::npos);
  Module again = parse_ok(printed);
  CHECK(structurally_equal(m, again));
}

TEST_CASE("parser: buffer parameters round-trip") {
  Module m = parse_ok(R"(fn consume(a: f64[], v: f64[2][], k: i64[], i: i64) {
  a[i] = v[i][0] + v[i][1];
  k[i] = i;
}
fn f(n: i64) {
  let a: f64[n];
  let v: f64[2][n];
  let k: i64[n];
  consume(a, v, k, 0);
}
)");
  CHECK(m.fns[0].params[0].kind == ParamKind::Buffer);
  CHECK(m.fns[0].params[1].vec_arity == 2);
  std::string printed = emit_kl(m);
  CHECK(printed.find("consume(a: f64[], v: f64[2][], k: i64[], i: i64)") !=
        std::string::npos);
  CHECK(structurally_equal(m, *parse(printed).module));
}

TEST_CASE("parser: annotated loop location is the annotation site") {
  Module m = parse_ok("struct Data { a: f64; b: f64; unused: f64; }\n"
                      "fn kernel(buf: slice<Data>) {\n"
                      "  @soa_convert\n"
                      "  for p in buf {\n"
                      "    p.a = p.a + p.b;\n"
                      "  }\n"
                      "}\n");
  const Stmt &loop = *m.fns[0].body[0];
  CHECK(loop.loc.line == 3);
  CHECK(loop.loc.col == 3);
}

TEST_CASE("parser: operator precedence survives a round trip") {
  Module m = parse_ok("fn f(a: f64, b: f64, c: f64) -> f64 { return a + b * c - (a + b) / c; }");
  std::string printed = emit_kl(m);
  CHECK(printed.find("a + b * c - (a + b) / c") != std::string::npos);
  Module m2 = parse_ok(printed);
  CHECK(structurally_equal(m, m2));

  Module n = parse_ok("fn g(a: bool, b: bool, c: bool) -> bool { return a && (b || c); }");
  std::string pn = emit_kl(n);
  CHECK(pn.find("a && (b || c)") != std::string::npos);
  CHECK(structurally_equal(n, *parse(pn).module));

  Module s = parse_ok("fn h(a: f64) -> f64 { return -(a + 1.0) * 2.0; }");
  std::string ps = emit_kl(s);
  CHECK(structurally_equal(s, *parse(ps).module));
}

TEST_CASE("parser: extern functions parse and print") {
  Module m = parse_ok("extern fn log_value(x: f64);\nfn f() { log_value(1.0); }");
  CHECK(m.fns[0].is_extern);
  std::string printed = emit_kl(m);
  CHECK(printed.find("extern fn log_value(x: f64);") != std::string::npos);
  CHECK(structurally_equal(m, *parse(printed).module));
}

TEST_CASE("diagnostics: formatted with file, line and column") {
  auto res = parse("struct S {\n  a: f64;\n}\nfn f() { oops = 1.0; }");
  REQUIRE(!res.ok());
  std::string line = format_diagnostic("demo.kl", res.diags[0]);
  CHECK(line.substr(0, 8) == "demo.kl:");
  CHECK(line.find(": error: ") != std::string::npos);
}
