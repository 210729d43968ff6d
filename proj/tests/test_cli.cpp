#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"
#include "soaview/parser.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = SOAVIEW_BIN;

fs::path work_dir() {
  fs::path d = fs::temp_directory_path() / "soaview_cli_tests";
  fs::create_directories(d);
  return d;
}

std::string write_fixture(const std::string &name, const std::string &content) {
  fs::path p = work_dir() / name;
  std::ofstream out(p);
  out << content;
  return p.string();
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CmdResult {
  int rc = -1;
  std::string out, err;
};

CmdResult run_cli(const std::string &args, const std::string &env = "") {
  static int counter = 0;
  fs::path out_path = work_dir() / ("stdout" + std::to_string(counter) + ".txt");
  fs::path err_path = work_dir() / ("stderr" + std::to_string(counter) + ".txt");
  ++counter;
  std::string cmd = env + (env.empty() ? "" : " ") + kBin + " " + args + " >" +
                    out_path.string() + " 2>" + err_path.string();
  int status = std::system(cmd.c_str());
  CmdResult r;
  r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

const char *kListing = R"(struct Data { a: f64; b: f64; unused: f64; }
fn kernel(buf: slice<Data>) {
  @soa_convert
  for p in buf {
    p.a = p.a + p.b;
  }
}
)";

const char *kAlias = R"(struct P { x: f64; y: f64; }
fn f(xs: slice<P>, ys: slice<P>) {
  @soa_convert
  for a in xs {
    @soa_convert
    for b in ys {
      b.x = b.x + a.x;
    }
  }
}
)";

const char *kOffload = R"(struct P { x: f64; y: f64; z: f64; }
fn f(ps: slice<P>) {
  @soa_offload
  for p in ps {
    p.x = p.x + p.y;
    p.z = 2.0 * p.x;
  }
}
)";

} // namespace

TEST_CASE("check prints the golden loop line") {
  std::string f = write_fixture("l5.kl", kListing);
  auto r = run_cli("check " + f);
  CHECK(r.rc == 0);
  CHECK(r.out == "loop @3:3  A_in={a,b} (16B)  A_out={a} (8B)\n");
  CHECK(r.err.empty());
}

TEST_CASE("check tsv carries fn and record size") {
  std::string f = write_fixture("l5.kl", kListing);
  auto r = run_cli("check " + f + " --tsv");
  CHECK(r.rc == 0);
  CHECK(r.out ==
        "fn\tline\tcol\trecord_bytes\tn_in\tbytes_in\tn_out\tbytes_out\tro\two\trw\n"
        "kernel\t3\t3\t24\t2\t16\t1\t8\tb\t-\ta\n");
}

TEST_CASE("check json report parses and classifies") {
  std::string f = write_fixture("l5.kl", kListing);
  auto r = run_cli("check " + f + " --json");
  CHECK(r.rc == 0);
  auto j = nlohmann::json::parse(r.out);
  REQUIRE(j["loops"].size() == 1);
  auto &l = j["loops"][0];
  CHECK(l["fn"] == "kernel");
  CHECK(l["record_bytes"] == 24);
  CHECK(l["a_in"] == nlohmann::json::array({"a", "b"}));
  CHECK(l["a_out"] == nlohmann::json::array({"a"}));
  CHECK(l["read_only"] == nlohmann::json::array({"b"}));
  CHECK(l["write_only"] == nlohmann::json::array());
  CHECK(l["read_write"] == nlohmann::json::array({"a"}));
}

TEST_CASE("parse errors exit 1 with positions") {
  std::string f = write_fixture("bad.kl", "struct { nope");
  auto r = run_cli("check " + f);
  CHECK(r.rc == 1);
  CHECK(r.out.empty());
  CHECK(r.err.find("bad.kl:") != std::string::npos);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("aliasing ambiguity is a named diagnostic") {
  std::string f = write_fixture("alias.kl", kAlias);
  auto r = run_cli("build " + f);
  CHECK(r.rc == 1);
  CHECK(r.err.find("AliasAmbiguityError") != std::string::npos);
  CHECK(r.err.find("@assume_disjoint") != std::string::npos);
}

TEST_CASE("diagnostics are byte-identical across runs") {
  std::string f = write_fixture("alias.kl", kAlias);
  auto a = run_cli("build " + f);
  auto b = run_cli("build " + f);
  CHECK(a.err == b.err);
  CHECK(a.rc == b.rc);
}

TEST_CASE("conflicting offload modes are a usage error") {
  std::string f = write_fixture("l5.kl", kListing);
  auto r = run_cli("build " + f + " --emit=c --offload=map --offload=usm");
  CHECK(r.rc == 2);
}

TEST_CASE("missing subcommand is a usage error") {
  auto r = run_cli("");
  CHECK(r.rc == 2);
}

TEST_CASE("dump-transformed output reparses cleanly") {
  std::string f = write_fixture("l5.kl", kListing);
  auto r = run_cli("build " + f + " --dump-transformed");
  REQUIRE(r.rc == 0);
  auto pr = soaview::parse(r.out);
  CHECK(pr.ok());
  CHECK(r.out.find("for") != std::string::npos);
}

TEST_CASE("emitted c with map offload names every field class") {
  std::string f = write_fixture("off.kl", kOffload);
  fs::path out = work_dir() / "off.c";
  auto r = run_cli("build " + f + " --emit=c --offload=map -o " + out.string());
  REQUIRE(r.rc == 0);
  std::string text = slurp(out);
  CHECK(text.find("map(to:") != std::string::npos);
  CHECK(text.find("map(from:") != std::string::npos);
  CHECK(text.find("map(tofrom:") != std::string::npos);
  CHECK(text.find("#pragma omp target teams distribute parallel for") !=
        std::string::npos);
}

TEST_CASE("run round-trips the two-record example") {
  std::string f = write_fixture("l5.kl", kListing);
  std::string in = write_fixture(
      "in.json",
      R"({"containers": {"buf": [{"a": 1, "b": 2, "unused": 9},
                                 {"a": 3, "b": 4, "unused": 9}]}})");
  auto r = run_cli("run " + f + " --entry kernel --input " + in);
  REQUIRE(r.rc == 0);
  auto j = nlohmann::json::parse(r.out);
  auto &buf = j["containers"]["buf"];
  REQUIRE(buf.size() == 2);
  CHECK(buf[0]["a"] == 3.0);
  CHECK(buf[0]["b"] == 2.0);
  CHECK(buf[0]["unused"] == 9.0);
  CHECK(buf[1]["a"] == 7.0);
  CHECK(buf[1]["unused"] == 9.0);
}

TEST_CASE("run reports traps as diagnostics") {
  std::string f = write_fixture("oob.kl", R"(struct D { a: f64; }
fn f(buf: slice<D>) {
  for i in 0..3 {
    buf[i].a = 0.0;
  }
}
)");
  std::string in =
      write_fixture("oob.json", R"({"containers": {"buf": [{"a": 1}, {"a": 2}]}})");
  auto r = run_cli("run " + f + " --entry f --input " + in);
  CHECK(r.rc == 1);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("run rejects missing scalar inputs") {
  std::string f = write_fixture("dt.kl", R"(struct D { a: f64; }
fn f(buf: slice<D>, dt: f64) {
  for i in 0..len(buf) {
    buf[i].a = buf[i].a + dt;
  }
}
)");
  std::string in = write_fixture("nodt.json", R"({"containers": {"buf": []}})");
  auto r = run_cli("run " + f + " --entry f --input " + in);
  CHECK(r.rc == 1);
  CHECK(r.err.find("missing scalar input 'dt'") != std::string::npos);
}

TEST_CASE("bench smoke test emits the csv") {
  auto r = run_cli("bench --kernel drift --variant soa-view,continuous --ppc 64 "
                   "--particles 512 --reps 2 --seed 7",
                   "SOAVIEW_THREADS=2");
  REQUIRE(r.rc == 0);
  CHECK(r.out.rfind("kernel,path,layout,order,guard,ppc,n,", 0) == 0);
  CHECK(r.out.find("drift,soa-view,continuous,local-active,branch,64,512,") !=
        std::string::npos);
}

TEST_CASE("bench rejects unknown names as usage errors") {
  auto r = run_cli("bench --kernel warp --particles 512 --ppc 64");
  CHECK(r.rc == 2);
  CHECK(r.err.find("unknown kernel") != std::string::npos);
  auto r2 = run_cli("bench --kernel drift --variant sideways --particles 512");
  CHECK(r2.rc == 2);
  auto r3 = run_cli("bench --kernel drift --particles 100 --ppc 256");
  CHECK(r3.rc == 2);
}

TEST_CASE("version flag") {
  auto r = run_cli("--version");
  CHECK(r.rc == 0);
  CHECK(r.out.find("soaview") != std::string::npos);
}
