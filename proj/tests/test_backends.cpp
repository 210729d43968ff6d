#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "soaview/analysis.hpp"
#include "soaview/emit_c.hpp"
#include "soaview/interpreter.hpp"
#include "soaview/parser.hpp"
#include "soaview/transform.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

using namespace soaview;

namespace {

Module parse_ok(std::string_view src) {
  auto res = parse(src);
  for (const auto &d : res.diags) INFO(format_diagnostic("<test>", d));
  REQUIRE(res.ok());
  return std::move(*res.module);
}

int struct_of(const Module &m, std::string_view name) {
  for (size_t i = 0; i < m.structs.size(); ++i)
    if (m.structs[i].name == name) return static_cast<int>(i);
  REQUIRE(false);
  return -1;
}

RecordPool make_pool(const Module &m, std::string_view sname, int64_t n) {
  RecordPool p;
  p.struct_index = struct_of(m, sname);
  p.count = n;
  p.bytes.assign(static_cast<size_t>(n) * m.structs[p.struct_index].record_size, std::byte{0});
  return p;
}

void fill_random(const Module &m, RecordPool &p, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  const StructDef &st = m.structs[p.struct_index];
  for (int64_t r = 0; r < p.count; ++r) {
    for (size_t f = 0; f < st.fields.size(); ++f) {
      const FieldDef &fd = st.fields[f];
      switch (fd.kind) {
      case Scalar::F64: {
        int lanes = fd.vec_arity > 0 ? fd.vec_arity : 1;
        for (int l = 0; l < lanes; ++l)
          record_set_f64(m, p, r, static_cast<int>(f), dist(rng), l);
        break;
      }
      case Scalar::I64:
        record_set_i64(m, p, r, static_cast<int>(f), static_cast<int64_t>(rng() % 17) - 8);
        break;
      case Scalar::Bool: record_set_bool(m, p, r, static_cast<int>(f), (rng() & 1) != 0); break;
      }
    }
  }
}

std::string f64_bits_literal(double v) {
  uint64_t b;
  std::memcpy(&b, &v, 8);
  return std::to_string(b) + "ULL";
}

// Emits a main() that loads the pools from argv[1], invokes the entry with
// the inputs baked in as literals, and dumps the final pools (plus the
// return value, if any) to argv[2].
std::string driver_code(const Module &m, const std::string &entry, const RunInput &in) {
  const FunctionDef *fn = m.find_fn(entry);
  REQUIRE(fn != nullptr);
  std::ostringstream d;
  d << "\n#include <stdio.h>\n#include <stdlib.h>\n";
  d << "\nint main(int argc, char **argv) {\n  (void)argc;\n";
  d << "  FILE *fin = fopen(argv[1], \"rb\");\n  if (!fin) return 2;\n";
  for (size_t pi = 0; pi < in.pools.size(); ++pi) {
    const RecordPool &p = in.pools[pi];
    size_t bytes = p.bytes.size();
    d << "  static unsigned char pool" << pi << "[" << (bytes ? bytes : 1) << "];\n";
    if (bytes)
      d << "  if (fread(pool" << pi << ", 1, " << bytes << ", fin) != " << bytes
        << ") return 3;\n";
  }
  d << "  fclose(fin);\n";
  for (const auto &p : fn->params) {
    if (p.kind == ParamKind::ScalarVal) {
      auto it = in.scalars.find(p.name);
      REQUIRE(it != in.scalars.end());
      switch (p.scalar) {
      case Scalar::F64:
        d << "  double " << p.name << ";\n  { uint64_t bits = "
          << f64_bits_literal(it->second.f) << "; memcpy(&" << p.name << ", &bits, 8); }\n";
        break;
      case Scalar::I64: d << "  int64_t " << p.name << " = " << it->second.i << "LL;\n"; break;
      case Scalar::Bool:
        d << "  int32_t " << p.name << " = " << (it->second.b ? 1 : 0) << ";\n";
        break;
      }
      continue;
    }
    REQUIRE(p.kind == ParamKind::Container);
    auto it = in.containers.find(p.name);
    REQUIRE(it != in.containers.end());
    const ContainerInput &ci = it->second;
    const std::string &sname = m.structs[p.struct_index].name;
    int record_size = m.structs[p.struct_index].record_size;
    if (ci.kind == ContainerKind::Slice) {
      d << "  slice_" << sname << " " << p.name << " = { (" << sname << " *)pool" << ci.pool
        << ", " << in.pools[ci.pool].count << " };\n";
    } else {
      d << "  static " << sname << " *refs_" << p.name << "["
        << (ci.refs.empty() ? 1 : ci.refs.size()) << "];\n";
      for (size_t i = 0; i < ci.refs.size(); ++i) {
        if (ci.refs[i] < 0)
          d << "  refs_" << p.name << "[" << i << "] = 0;\n";
        else
          d << "  refs_" << p.name << "[" << i << "] = (" << sname << " *)(pool" << ci.pool
            << " + " << ci.refs[i] * record_size << ");\n";
      }
      d << "  ptrlist_" << sname << " " << p.name << " = { (" << sname << " *const *)refs_"
        << p.name << ", " << ci.refs.size() << " };\n";
    }
  }
  d << "  ";
  if (fn->has_ret) {
    switch (fn->ret) {
    case Scalar::F64: d << "double "; break;
    case Scalar::I64: d << "int64_t "; break;
    case Scalar::Bool: d << "int32_t "; break;
    }
    d << "ret = ";
  }
  d << entry << "(";
  for (size_t i = 0; i < fn->params.size(); ++i) {
    if (i) d << ", ";
    d << fn->params[i].name;
  }
  d << ");\n";
  d << "  FILE *fout = fopen(argv[2], \"wb\");\n  if (!fout) return 4;\n";
  for (size_t pi = 0; pi < in.pools.size(); ++pi) {
    size_t bytes = in.pools[pi].bytes.size();
    if (bytes) d << "  fwrite(pool" << pi << ", 1, " << bytes << ", fout);\n";
  }
  if (fn->has_ret) d << "  fwrite(&ret, 1, sizeof(ret), fout);\n";
  d << "  fclose(fout);\n  return 0;\n}\n";
  return d.str();
}

struct CRun {
  std::vector<std::vector<std::byte>> pools;
  uint64_t ret_bits = 0;
  bool has_ret = false;
};

int scratch_id = 0;

CRun run_compiled(const std::string &tu, const Module &m, const std::string &entry,
                  const RunInput &in, bool openmp) {
  int id = scratch_id++;
  std::string base = "cgen_" + std::to_string(id);
  {
    std::ofstream f(base + ".c");
    f << tu << driver_code(m, entry, in);
  }
  std::string cmd = "gcc -O2 -std=c11 -ffp-contract=off";
  if (openmp) cmd += " -fopenmp";
  cmd += " " + base + ".c -o " + base + " -lm > " + base + ".log 2>&1";
  if (std::system(cmd.c_str()) != 0) {
    std::ifstream log(base + ".log");
    std::stringstream ss;
    ss << log.rdbuf();
    INFO(ss.str());
    REQUIRE(false);
  }
  {
    std::ofstream f(base + ".in", std::ios::binary);
    for (const auto &p : in.pools)
      f.write(reinterpret_cast<const char *>(p.bytes.data()),
              static_cast<std::streamsize>(p.bytes.size()));
  }
  std::string run = "./" + base + " " + base + ".in " + base + ".out";
  REQUIRE(std::system(run.c_str()) == 0);

  CRun out;
  std::ifstream f(base + ".out", std::ios::binary);
  REQUIRE(f.good());
  for (const auto &p : in.pools) {
    std::vector<std::byte> bytes(p.bytes.size());
    f.read(reinterpret_cast<char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.pools.push_back(std::move(bytes));
  }
  const FunctionDef *fn = m.find_fn(entry);
  if (fn->has_ret) {
    out.has_ret = true;
    uint64_t bits = 0;
    f.read(reinterpret_cast<char *>(&bits), fn->ret == Scalar::Bool ? 4 : 8);
    out.ret_bits = bits;
  }
  return out;
}

void check_match(const CRun &c, const RunResult &r) {
  REQUIRE(c.pools.size() == r.pools.size());
  for (size_t i = 0; i < c.pools.size(); ++i) CHECK(c.pools[i] == r.pools[i].bytes);
  if (c.has_ret) {
    REQUIRE(r.ret.has_value());
    uint64_t bits = 0;
    switch (r.ret->kind) {
    case Scalar::F64: std::memcpy(&bits, &r.ret->f, 8); break;
    case Scalar::I64: std::memcpy(&bits, &r.ret->i, 8); break;
    case Scalar::Bool: bits = r.ret->b ? 1 : 0; break;
    }
    CHECK(c.ret_bits == bits);
  }
}

// Compiles and runs both the original and the rewritten module and requires
// bit-identical pools against the interpreter on each.
void check_c_differential(const Module &m, const std::string &entry, const RunInput &in) {
  ProgramAnalysis pa = analyze_program(m);
  for (const auto &e : pa.errors) INFO(e.message);
  REQUIRE(pa.ok());
  TransformResult tr = rewrite(m, pa);
  REQUIRE(tr.ok());

  EmitCOptions opts;
  RunResult r0 = interpret(m, entry, in);
  CRun c0 = run_compiled(emit_c(m, {}, opts), m, entry, in, false);
  check_match(c0, r0);

  RunResult r1 = interpret(tr.module, entry, in);
  CRun c1 = run_compiled(emit_c(tr.module, tr.views, opts), tr.module, entry, in, false);
  check_match(c1, r1);

  REQUIRE(r0.pools.size() == r1.pools.size());
  for (size_t i = 0; i < r0.pools.size(); ++i) CHECK(r0.pools[i].bytes == r1.pools[i].bytes);
}

RunInput slice_input(RecordPool pool, const std::string &cname) {
  RunInput in;
  in.pools.push_back(std::move(pool));
  ContainerInput ci;
  ci.kind = ContainerKind::Slice;
  ci.pool = 0;
  in.containers[cname] = ci;
  return in;
}

} // namespace

TEST_CASE("compiled scalar kernels match the interpreter bit for bit") {
  Module m = parse_ok(R"(struct S { a: f64; b: f64; n: i64; live: bool; }
fn poke(r: &S, k: f64) -> f64 {
  return r.a * k - r.b / (k + 1.5);
}
fn f(c: slice<S>, k: f64) -> f64 {
  let total: f64 = 0.0;
  for p in c {
    if p.live && p.n % 3 != 0 {
      p.a = poke(p, k) + sqrt(abs(p.b));
      p.n = p.n * 2 - 1;
    } else {
      p.b = min(p.a, max(p.b, k));
      p.live = !p.live;
    }
    total = total + p.a - p.b;
  }
  return floor(total * 4.0) / 4.0;
}
)");
  RecordPool pool = make_pool(m, "S", 25);
  fill_random(m, pool, 101);
  RunInput in = slice_input(std::move(pool), "c");
  in.scalars["k"] = ScalarValue::of_f64(1.375);
  check_c_differential(m, "f", in);
}

TEST_CASE("compiled rewritten views with clones match everywhere") {
  Module m = parse_ok(R"(struct R { mass: f64; vel: f64; acc: f64; flag: bool; }
fn scale(r: &R, k: f64) -> f64 {
  return r.mass * k + r.vel;
}
fn touch(r: &R) {
  r.acc = r.acc + scale(r, 0.25);
}
fn f(c: slice<R>) {
  @soa_convert
  for p in c {
    touch(p);
    if p.flag {
      p.vel = p.vel * 0.5;
    }
  }
}
)");
  RecordPool pool = make_pool(m, "R", 19);
  fill_random(m, pool, 103);
  check_c_differential(m, "f", slice_input(std::move(pool), "c"));
}

TEST_CASE("compiled vector field views match") {
  Module m = parse_ok(R"(struct V { q: f64[3]; m: f64; }
fn f(c: slice<V>) {
  @soa_convert
  for p in c {
    p.q[0] = p.q[1] * p.m;
    p.q[2] = p.q[0] + p.q[1];
  }
}
)");
  RecordPool pool = make_pool(m, "V", 13);
  fill_random(m, pool, 107);
  check_c_differential(m, "f", slice_input(std::move(pool), "c"));
}

TEST_CASE("compiled indexed subrange views keep untouched records intact") {
  Module m = parse_ok(R"(struct S { a: f64; b: f64; }
fn f(xs: slice<S>) {
  @soa_convert
  @soa_target(xs)
  for i in 1..len(xs) {
    xs[i].a = xs[i - 1].b + xs[i].a;
  }
}
)");
  RecordPool pool = make_pool(m, "S", 9);
  fill_random(m, pool, 109);
  check_c_differential(m, "f", slice_input(std::move(pool), "xs"));
}

TEST_CASE("compiled ptrlist views match through permuted references") {
  Module m = parse_ok(R"(struct S { a: f64; b: f64; }
fn f(c: ptrlist<S>) {
  @soa_convert
  for p in c {
    p.a = p.a - 2.0 * p.b;
  }
}
)");
  RecordPool pool = make_pool(m, "S", 8);
  fill_random(m, pool, 113);
  RunInput in;
  in.pools.push_back(std::move(pool));
  ContainerInput ci;
  ci.kind = ContainerKind::PtrList;
  ci.pool = 0;
  ci.refs = {7, 2, 5, 0, 3};
  in.containers["c"] = ci;
  check_c_differential(m, "f", in);
}

TEST_CASE("compiled hoisted views match across repeated steps") {
  Module m = parse_ok(R"(struct S { x: f64; v: f64; }
fn f(c: slice<S>, steps: i64, dt: f64) {
  for t in 0..steps {
    @soa_convert_hoist(1)
    for p in c {
      p.x = p.x + p.v * dt;
      p.v = p.v * 0.975;
    }
  }
}
)");
  RecordPool pool = make_pool(m, "S", 21);
  fill_random(m, pool, 127);
  RunInput in = slice_input(std::move(pool), "c");
  in.scalars["steps"] = ScalarValue::of_i64(6);
  in.scalars["dt"] = ScalarValue::of_f64(0.0625);
  check_c_differential(m, "f", in);
}

TEST_CASE("offloaded kernels compile under openmp and match on the host") {
  Module m = parse_ok(R"(struct P { x: f64[2]; h: f64; rho: f64; }
fn density(ps: slice<P>, qs: slice<P>) {
  @assume_disjoint(ps, qs)
  @soa_offload
  for p in ps {
    let acc: f64 = 0.0;
    @soa_convert_hoist(1)
    for q in qs {
      let dx: f64 = p.x[0] - q.x[0];
      let dy: f64 = p.x[1] - q.x[1];
      acc = acc + sqrt(dx * dx + dy * dy) * q.h;
    }
    p.rho = acc;
  }
}
)");
  RecordPool a = make_pool(m, "P", 11);
  RecordPool b = make_pool(m, "P", 7);
  fill_random(m, a, 131);
  fill_random(m, b, 137);
  RunInput in;
  in.pools.push_back(std::move(a));
  in.pools.push_back(std::move(b));
  ContainerInput ca, cb;
  ca.kind = cb.kind = ContainerKind::Slice;
  ca.pool = 0;
  cb.pool = 1;
  in.containers["ps"] = ca;
  in.containers["qs"] = cb;

  ProgramAnalysis pa = analyze_program(m);
  REQUIRE(pa.ok());
  TransformResult tr = rewrite(m, pa);
  REQUIRE(tr.ok());
  RunResult r = interpret(tr.module, "density", in);

  // gcc 11 rejects `#pragma omp requires unified_shared_memory` under
  // -fopenmp, so the Usm artifact is exercised with the pragmas inert.
  for (OffloadMode mode : {OffloadMode::Map, OffloadMode::Usm}) {
    EmitCOptions opts;
    opts.offload = mode;
    bool openmp = mode == OffloadMode::Map;
    CRun c = run_compiled(emit_c(tr.module, tr.views, opts), tr.module, "density", in, openmp);
    check_match(c, r);
  }
}

TEST_CASE("emitted text pins the troublesome parts") {
  Module m = parse_ok(R"(struct S { x: f64; v: f64; }
fn drift(c: slice<S>, dt: f64) {
  @soa_convert
  for p in c {
    p.x = p.x + p.v * dt;
  }
}
)");
  ProgramAnalysis pa = analyze_program(m);
  TransformResult tr = rewrite(m, pa);
  EmitCOptions opts;
  std::string c = emit_c(tr.module, tr.views, opts);
  CHECK(c.find("#pragma pack(push, 1)") != std::string::npos);
  CHECK(c.find("typedef struct { S *p; int64_t n; } slice_S;") != std::string::npos);
  CHECK(c.find("char x_1_raw[(size_t)(n_1) * 8 + 63];") != std::string::npos);
  CHECK(c.find("double *restrict x_1 = (double *)(((uintptr_t)x_1_raw + 63) & "
               "~(uintptr_t)63);") != std::string::npos);
  CHECK(c.find("memset(x_1, 0, (size_t)(n_1) * 8);") != std::string::npos);
  CHECK(c.find("#pragma omp parallel for\n    for (int64_t i_1 = 0; i_1 < n_1; ++i_1)") !=
        std::string::npos);
  CHECK(c.find("map(") == std::string::npos);
}

TEST_CASE("map clauses name every mapped buffer with its transfer direction") {
  Module m = parse_ok(R"(struct P { x: f64[2]; h: f64; rho: f64; }
fn density(ps: slice<P>, qs: slice<P>) {
  @assume_disjoint(ps, qs)
  @soa_offload
  for p in ps {
    let acc: f64 = 0.0;
    @soa_convert_hoist(1)
    for q in qs {
      acc = acc + q.h + q.x[0];
    }
    p.rho = acc + p.x[1];
  }
}
)");
  ProgramAnalysis pa = analyze_program(m);
  REQUIRE(pa.ok());
  TransformResult tr = rewrite(m, pa);
  REQUIRE(tr.ok());
  EmitCOptions opts;
  opts.offload = OffloadMode::Map;
  std::string c = emit_c(tr.module, tr.views, opts);
  CHECK(c.find("#pragma omp target teams distribute parallel for "
               "map(to: x_1[0:n_1], x_2[0:n_2], h_2[0:n_2]) "
               "map(from: rho_1[0:n_1])") != std::string::npos);

  opts.offload = OffloadMode::Usm;
  std::string u = emit_c(tr.module, tr.views, opts);
  CHECK(u.find("#pragma omp requires unified_shared_memory") != std::string::npos);
  CHECK(u.find("#pragma omp target teams distribute parallel for\n") != std::string::npos);
  CHECK(u.find("map(") == std::string::npos);
}

TEST_CASE("read-write fields map tofrom") {
  Module m = parse_ok(R"(struct S { a: f64; b: f64; }
fn f(c: slice<S>) {
  @soa_offload
  for p in c {
    p.a = p.a + p.b;
  }
}
)");
  ProgramAnalysis pa = analyze_program(m);
  TransformResult tr = rewrite(m, pa);
  EmitCOptions opts;
  opts.offload = OffloadMode::Map;
  std::string c = emit_c(tr.module, tr.views, opts);
  CHECK(c.find("map(to: b_1[0:n_1]) map(tofrom: a_1[0:n_1])") != std::string::npos);
}

TEST_CASE("accumulating rewritten loops are not host parallelized") {
  Module m = parse_ok(R"(struct S { m: f64; rho: f64; }
fn f(ps: slice<S>) -> f64 {
  let total: f64 = 0.0;
  @soa_convert
  for p in ps {
    total = total + p.m;
    p.rho = total;
  }
  return total;
}
)");
  ProgramAnalysis pa = analyze_program(m);
  REQUIRE(pa.ok());
  TransformResult tr = rewrite(m, pa);
  EmitCOptions opts;
  std::string c = emit_c(tr.module, tr.views, opts);
  CHECK(c.find("#pragma omp parallel for") == std::string::npos);

  RecordPool pool = make_pool(m, "S", 12);
  fill_random(m, pool, 139);
  check_c_differential(m, "f", slice_input(std::move(pool), "ps"));
}

TEST_CASE("compiled pairwise kernels over one container match") {
  Module m = parse_ok(R"(struct S { m: f64; rho: f64; }
fn f(ps: slice<S>) {
  @soa_convert
  for p in ps {
    let acc: f64 = 0.0;
    for q in ps {
      acc = acc + q.m;
    }
    p.rho = acc * p.m;
  }
}
)");
  RecordPool pool = make_pool(m, "S", 10);
  fill_random(m, pool, 149);
  check_c_differential(m, "f", slice_input(std::move(pool), "ps"));
}
