#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "soaview/analysis.hpp"
#include "soaview/emit_c.hpp"
#include "soaview/emit_kl.hpp"
#include "soaview/interpreter.hpp"
#include "soaview/parser.hpp"
#include "soaview/sph/bench.hpp"
#include "soaview/transform.hpp"

namespace {

using nlohmann::json;
using namespace soaview;

bool read_file(const std::string &path, std::string &out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

bool write_output(const std::string &path, const std::string &content) {
  if (path.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return true;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return out.good();
}

void print_diags(const std::string &file, const std::vector<Diagnostic> &diags) {
  for (const auto &d : diags) std::cerr << format_diagnostic(file, d) << "\n";
}

void print_analysis_errors(const std::string &file, const ProgramAnalysis &pa) {
  for (const auto &e : pa.errors) {
    Diagnostic d{Severity::Error, e.loc,
                 std::string(analysis_error_name(e.kind)) + ": " + e.message};
    std::cerr << format_diagnostic(file, d) << "\n";
  }
}

// Parses the file and, unless loops-only validation failed, runs the access
// analysis. Returns 0 and fills the outputs on success, 1 after printing
// diagnostics otherwise.
int load_analyzed(const std::string &path, Module &m, ProgramAnalysis &pa) {
  std::string src;
  if (!read_file(path, src)) {
    std::cerr << "soaview: cannot read '" << path << "'\n";
    return 1;
  }
  ParseResult pr = parse(src);
  if (!pr.ok()) {
    print_diags(path, pr.diags);
    return 1;
  }
  m = std::move(*pr.module);
  pa = analyze_program(m);
  if (!pa.ok()) {
    print_analysis_errors(path, pa);
    return 1;
  }
  return 0;
}

json field_names(const Module &m, int struct_index, const std::set<int> &fields) {
  json arr = json::array();
  for (int f : fields) arr.push_back(m.structs[struct_index].fields[f].name);
  return arr;
}

int cmd_check(const std::string &path, bool tsv, bool as_json) {
  Module m;
  ProgramAnalysis pa;
  if (int rc = load_analyzed(path, m, pa)) return rc;
  if (as_json) {
    json out;
    out["loops"] = json::array();
    for (const auto &li : pa.loops) {
      if (li.struct_index < 0) continue;
      json l;
      l["fn"] = m.fns[li.fn_index].name;
      l["line"] = li.loc.line;
      l["col"] = li.loc.col;
      l["container"] = li.container;
      l["record"] = m.structs[li.struct_index].name;
      l["record_bytes"] = m.structs[li.struct_index].record_size;
      l["a_in"] = field_names(m, li.struct_index, li.sets.in);
      l["bytes_in"] = li.sets.bytes_in;
      l["a_out"] = field_names(m, li.struct_index, li.sets.out);
      l["bytes_out"] = li.sets.bytes_out;
      l["read_only"] = field_names(m, li.struct_index, li.sets.read_only());
      l["write_only"] = field_names(m, li.struct_index, li.sets.write_only());
      l["read_write"] = field_names(m, li.struct_index, li.sets.read_write());
      out["loops"].push_back(std::move(l));
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }
  std::cout << format_check_report(m, pa, tsv);
  return 0;
}

int cmd_build(const std::string &path, bool dump, const std::string &emit,
              const std::string &offload, const std::string &out_path) {
  Module m;
  ProgramAnalysis pa;
  if (int rc = load_analyzed(path, m, pa)) return rc;
  TransformResult tr = rewrite(m, pa);
  if (!tr.ok()) {
    print_diags(path, tr.diags);
    return 1;
  }
  if (dump) {
    std::cout << emit_kl(tr.module);
    return 0;
  }
  if (emit == "c") {
    EmitCOptions opts;
    opts.source_name = path;
    opts.offload = offload == "map"   ? OffloadMode::Map
                   : offload == "usm" ? OffloadMode::Usm
                                      : OffloadMode::Off;
    std::string text = emit_c(tr.module, tr.views, opts);
    if (!write_output(out_path, text)) {
      std::cerr << "soaview: cannot write '" << out_path << "'\n";
      return 1;
    }
  }
  return 0;
}

int fill_container(const Module &m, const Param &p, const json &records,
                   const json &refs_obj, RunInput &in, std::string &err) {
  if (!records.is_array()) {
    err = "container '" + p.name + "' must be a JSON array of records";
    return 1;
  }
  const StructDef &sd = m.structs[p.struct_index];
  RecordPool pool;
  pool.struct_index = p.struct_index;
  pool.count = static_cast<int64_t>(records.size());
  pool.bytes.resize(pool.count * sd.record_size);
  int pool_index = static_cast<int>(in.pools.size());
  in.pools.push_back(std::move(pool));
  RecordPool &pl = in.pools.back();
  for (int64_t r = 0; r < pl.count; ++r) {
    const json &rec = records[r];
    if (!rec.is_object()) {
      err = "container '" + p.name + "' record " + std::to_string(r) +
            " must be an object of field values";
      return 1;
    }
    for (auto it = rec.begin(); it != rec.end(); ++it) {
      int f = sd.field_index(it.key());
      if (f < 0) {
        err = "record type '" + sd.name + "' has no field '" + it.key() + "'";
        return 1;
      }
      const FieldDef &fd = sd.fields[f];
      const json &v = it.value();
      if (fd.vec_arity > 0) {
        if (!v.is_array() || static_cast<int>(v.size()) != fd.vec_arity) {
          err = "field '" + it.key() + "' needs an array of " +
                std::to_string(fd.vec_arity) + " numbers";
          return 1;
        }
        for (int lane = 0; lane < fd.vec_arity; ++lane)
          record_set_f64(m, pl, r, f, v[lane].get<double>(), lane);
      } else if (fd.kind == Scalar::F64) {
        record_set_f64(m, pl, r, f, v.get<double>());
      } else if (fd.kind == Scalar::I64) {
        record_set_i64(m, pl, r, f, v.get<int64_t>());
      } else {
        record_set_bool(m, pl, r, f, v.is_boolean() ? v.get<bool>()
                                                    : v.get<int64_t>() != 0);
      }
    }
  }
  ContainerInput ci;
  ci.kind = p.ckind;
  ci.pool = pool_index;
  if (p.ckind == ContainerKind::PtrList) {
    if (refs_obj.contains(p.name)) {
      for (const auto &v : refs_obj.at(p.name)) {
        int64_t idx = v.get<int64_t>();
        if (idx < -1 || idx >= pl.count) {
          err = "ref " + std::to_string(idx) + " out of range for '" + p.name + "'";
          return 1;
        }
        ci.refs.push_back(idx);
      }
    } else {
      for (int64_t r = 0; r < pl.count; ++r) ci.refs.push_back(r);
    }
  }
  in.containers.emplace(p.name, std::move(ci));
  return 0;
}

json dump_container(const Module &m, const RecordPool &pl) {
  const StructDef &sd = m.structs[pl.struct_index];
  json arr = json::array();
  for (int64_t r = 0; r < pl.count; ++r) {
    json rec = json::object();
    for (size_t f = 0; f < sd.fields.size(); ++f) {
      const FieldDef &fd = sd.fields[f];
      int fi = static_cast<int>(f);
      if (fd.vec_arity > 0) {
        json lanes = json::array();
        for (int lane = 0; lane < fd.vec_arity; ++lane)
          lanes.push_back(record_get_f64(m, pl, r, fi, lane));
        rec[fd.name] = std::move(lanes);
      } else if (fd.kind == Scalar::F64) {
        rec[fd.name] = record_get_f64(m, pl, r, fi);
      } else if (fd.kind == Scalar::I64) {
        rec[fd.name] = record_get_i64(m, pl, r, fi);
      } else {
        rec[fd.name] = record_get_bool(m, pl, r, fi);
      }
    }
    arr.push_back(std::move(rec));
  }
  return arr;
}

int cmd_run(const std::string &path, const std::string &entry,
            const std::string &input_path, const std::string &output_path) {
  Module m;
  ProgramAnalysis pa;
  if (int rc = load_analyzed(path, m, pa)) return rc;
  int fn_index = -1;
  for (size_t i = 0; i < m.fns.size(); ++i)
    if (m.fns[i].name == entry) fn_index = static_cast<int>(i);
  if (fn_index < 0) {
    std::cerr << "soaview: no function named '" << entry << "' in " << path << "\n";
    return 1;
  }
  const FunctionDef &fn = m.fns[fn_index];

  std::string input_text;
  if (!read_file(input_path, input_text)) {
    std::cerr << "soaview: cannot read '" << input_path << "'\n";
    return 1;
  }
  json j;
  try {
    j = json::parse(input_text);
  } catch (const std::exception &e) {
    std::cerr << "soaview: " << input_path << ": " << e.what() << "\n";
    return 1;
  }

  RunInput in;
  std::map<std::string, int> pool_of;
  try {
    json containers = j.value("containers", json::object());
    json refs = j.value("refs", json::object());
    json scalars = j.value("scalars", json::object());
    for (const Param &p : fn.params) {
      if (p.kind == ParamKind::Container) {
        if (!containers.contains(p.name)) {
          std::cerr << "soaview: missing container input '" << p.name << "'\n";
          return 1;
        }
        std::string err;
        if (fill_container(m, p, containers.at(p.name), refs, in, err)) {
          std::cerr << "soaview: " << err << "\n";
          return 1;
        }
        pool_of[p.name] = in.containers.at(p.name).pool;
      } else if (p.kind == ParamKind::ScalarVal) {
        if (!scalars.contains(p.name)) {
          std::cerr << "soaview: missing scalar input '" << p.name << "'\n";
          return 1;
        }
        const json &v = scalars.at(p.name);
        ScalarValue sv = p.scalar == Scalar::F64 ? ScalarValue::of_f64(v.get<double>())
                         : p.scalar == Scalar::I64
                             ? ScalarValue::of_i64(v.get<int64_t>())
                             : ScalarValue::of_bool(v.is_boolean() ? v.get<bool>()
                                                                   : v.get<int64_t>() != 0);
        in.scalars.emplace(p.name, sv);
      } else {
        std::cerr << "soaview: entry parameter '" << p.name
                  << "' must be a container or a scalar\n";
        return 1;
      }
    }
  } catch (const std::exception &e) {
    std::cerr << "soaview: " << input_path << ": " << e.what() << "\n";
    return 1;
  }

  RunResult res;
  try {
    res = interpret(m, entry, in);
  } catch (const InterpError &e) {
    Diagnostic d{Severity::Error, e.loc, e.what()};
    std::cerr << format_diagnostic(path, d) << "\n";
    return 1;
  }

  json out;
  out["containers"] = json::object();
  for (const auto &[name, pool] : pool_of)
    out["containers"][name] = dump_container(m, res.pools[pool]);
  if (res.ret) {
    const ScalarValue &rv = *res.ret;
    if (rv.kind == Scalar::F64)
      out["ret"] = rv.f;
    else if (rv.kind == Scalar::I64)
      out["ret"] = rv.i;
    else
      out["ret"] = rv.b;
  }
  std::string text = out.dump(2) + "\n";
  if (!write_output(output_path, text)) {
    std::cerr << "soaview: cannot write '" << output_path << "'\n";
    return 1;
  }
  return 0;
}

int cmd_bench(const std::vector<std::string> &kernel_args,
              const std::vector<std::string> &variant_args,
              const std::vector<int> &ppcs, int64_t particles, int reps,
              uint64_t seed, const std::string &csv_path) {
  sph::BenchConfig cfg;
  if (kernel_args.empty()) {
    cfg.kernels = {sph::KernelId::Density, sph::KernelId::Force, sph::KernelId::Drift,
                   sph::KernelId::Kick1, sph::KernelId::Kick2};
  } else {
    for (const auto &arg : kernel_args) {
      std::stringstream ss(arg);
      std::string name;
      while (std::getline(ss, name, ',')) {
        bool found = false;
        for (sph::KernelId k :
             {sph::KernelId::Density, sph::KernelId::Force, sph::KernelId::Drift,
              sph::KernelId::Kick1, sph::KernelId::Kick2}) {
          if (name == sph::kernel_name(k)) {
            cfg.kernels.push_back(k);
            found = true;
          }
        }
        if (!found) {
          std::cerr << "soaview: unknown kernel '" << name
                    << "' (density, force, drift, kick1, kick2)\n";
          return 2;
        }
      }
    }
  }
  if (variant_args.empty()) {
    cfg.variants.push_back(sph::VariantSpec{});
    sph::VariantSpec v;
    v.path = sph::Path::SoaView;
    cfg.variants.push_back(v);
  } else {
    for (const auto &arg : variant_args) {
      std::string err;
      auto v = sph::parse_variant(arg, err);
      if (!v) {
        std::cerr << "soaview: " << err << "\n";
        return 2;
      }
      cfg.variants.push_back(*v);
    }
  }
  if (!ppcs.empty()) cfg.ppcs = ppcs;
  cfg.particles = particles;
  cfg.reps = reps;
  cfg.seed = seed;
  cfg.threads = 1;
  if (const char *tv = std::getenv("SOAVIEW_THREADS")) {
    int t = std::atoi(tv);
    if (t > 0) cfg.threads = t > 64 ? 64 : t;
  }

  std::vector<sph::BenchRecord> records;
  try {
    records = sph::run_bench(cfg);
  } catch (const std::exception &e) {
    std::cerr << "soaview: " << e.what() << "\n";
    return 2;
  }
  std::string csv = sph::to_csv(records);
  if (!write_output(csv_path, csv)) {
    std::cerr << "soaview: cannot write '" << csv_path << "'\n";
    return 1;
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"soaview: per-loop AoS-to-SoA view compiler and SPH benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "soaview 0.1.0");

  std::string check_file;
  bool check_tsv = false, check_json = false;
  auto *check = app.add_subcommand("check", "Report access sets per annotated loop");
  check->add_option("file", check_file, "KL source file")
      ->required()
      ->check(CLI::ExistingFile);
  auto *tsv_opt = check->add_flag("--tsv", check_tsv, "Tab-separated report");
  check->add_flag("--json", check_json, "JSON report")->excludes(tsv_opt);

  std::string build_file, build_emit, build_offload = "off", build_out;
  bool build_dump = false;
  auto *build = app.add_subcommand("build", "Validate, transform and emit");
  build->add_option("file", build_file, "KL source file")
      ->required()
      ->check(CLI::ExistingFile);
  auto *dump_opt =
      build->add_flag("--dump-transformed", build_dump, "Print rewritten KL source");
  auto *emit_opt = build->add_option("--emit", build_emit, "Output language")
                       ->check(CLI::IsMember({"c"}))
                       ->excludes(dump_opt);
  build->add_option("--offload", build_offload, "Offload mode for marked loops")
      ->check(CLI::IsMember({"off", "map", "usm"}))
      ->needs(emit_opt);
  build->add_option("-o,--output", build_out, "Output path (default stdout)")
      ->needs(emit_opt);

  std::string run_file, run_entry, run_input, run_output;
  auto *run = app.add_subcommand("run", "Interpret a function on JSON inputs");
  run->add_option("file", run_file, "KL source file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--entry", run_entry, "Entry function")->required();
  run->add_option("--input", run_input, "Input JSON")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--output", run_output, "Output JSON path (default stdout)");

  std::vector<std::string> bench_kernels, bench_variants;
  std::vector<int> bench_ppcs;
  int64_t bench_particles = 100000;
  int bench_reps = 5;
  uint64_t bench_seed = 42;
  std::string bench_csv;
  auto *bench = app.add_subcommand("bench", "Time SPH kernels over layout variants");
  bench->add_option("--kernel", bench_kernels,
                    "Kernels to time (density, force, drift, kick1, kick2; "
                    "default all)");
  bench->add_option("--variant", bench_variants,
                    "Comma-joined variant, e.g. soa-view,scattered,local-active,mask "
                    "(repeatable; default aos-baseline and soa-view)");
  bench->add_option("--ppc", bench_ppcs, "Particles per cell targets (default 1024)");
  bench->add_option("--particles", bench_particles, "Total particle count");
  bench->add_option("--reps", bench_reps, "Timed repetitions per configuration");
  bench->add_option("--seed", bench_seed, "Initial condition seed");
  bench->add_option("--csv", bench_csv, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (check->parsed()) return cmd_check(check_file, check_tsv, check_json);
  if (build->parsed())
    return cmd_build(build_file, build_dump, build_emit, build_offload, build_out);
  if (run->parsed()) return cmd_run(run_file, run_entry, run_input, run_output);
  if (bench->parsed())
    return cmd_bench(bench_kernels, bench_variants, bench_ppcs, bench_particles,
                     bench_reps, bench_seed, bench_csv);
  return 2;
}
