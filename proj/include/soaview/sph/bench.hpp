#pragma once

#include <optional>
#include <string>
#include <vector>

#include "soaview/sph/kernels.hpp"

namespace soaview::sph {

struct VariantSpec {
  Path path = Path::AosBaseline;
  Layout layout = Layout::Scattered;
  Order order = Order::LocalActive;
  Guard guard = Guard::Branch;
};

std::string variant_string(const VariantSpec &v);
// Parses "soa-view,scattered,local-active,mask" (any order of the four
// dimension values). Returns std::nullopt and sets `err` on unknown tokens.
std::optional<VariantSpec> parse_variant(const std::string &s, std::string &err);

struct BenchConfig {
  std::vector<KernelId> kernels;
  std::vector<VariantSpec> variants;
  std::vector<int> ppcs = {1024};
  int64_t particles = 100000;
  int reps = 5;
  uint64_t seed = 42;
  int threads = 1;
  bool cross_check = true; // verify soa-view physics against the aos baseline
};

struct BenchRecord {
  KernelId kernel;
  VariantSpec variant;
  int ppc = 0;
  int64_t n = 0;
  // Medians over the timed repetitions (one warm-up rep discarded).
  int64_t t_prologue_ns = 0;
  int64_t t_compute_ns = 0;
  int64_t t_epilogue_ns = 0;
  int64_t t_total_ns = 0;
  double ns_per_update = 0.0;
  // Per-rep data for distribution-sensitive checks.
  std::vector<KernelTimes> reps;
  // Max relative field deviation vs. the aos baseline (soa-view runs only).
  double cross_max_rel = 0.0;

  double conversion_share() const {
    return t_total_ns == 0 ? 0.0
                           : double(t_prologue_ns + t_epilogue_ns) / double(t_total_ns);
  }
};

// Runs every (kernel, variant, ppc) combination on freshly initialized
// particles. Deterministic per seed. Throws std::runtime_error on invalid
// configurations (e.g. ppc larger than the particle count).
std::vector<BenchRecord> run_bench(const BenchConfig &cfg);

// CSV with the stable column set:
// kernel,path,layout,order,guard,ppc,n,t_prologue_ns,t_compute_ns,
// t_epilogue_ns,t_total_ns,ns_per_update
std::string to_csv(const std::vector<BenchRecord> &records);

} // namespace soaview::sph
