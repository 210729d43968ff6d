#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "soaview/sph/bench.hpp"
#include "soaview/sph/grid.hpp"
#include "soaview/sph/kernels.hpp"
#include "soaview/sph/spline.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

using namespace soaview::sph;

namespace {

double simpson(double (*f)(double), double a, double b, int n) {
  double hstep = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * hstep) * (i % 2 ? 4.0 : 2.0);
  return acc * hstep / 3.0;
}

double ring_weight(double q) { return q * kernel_w(q); }

ParticleStore tiny_store(std::vector<Particle> parts) {
  ParticleStore s;
  s.layout = Layout::Continuous;
  s.flat = std::move(parts);
  for (auto &p : s.flat) s.all.push_back(&p);
  return s;
}

Particle base_particle(double x0, double x1) {
  Particle p{};
  p.x[0] = x0;
  p.x[1] = x1;
  p.m = 1.0;
  p.h = 0.3;
  p.rho = 1.0;
  p.p = 1.0;
  p.c = 1.0;
  p.u = 1.0;
  p.u_pred = 1.0;
  p.dt_next = 1.0e30;
  return p;
}

bool records_equal(const Particle &a, const Particle &b) {
  return std::memcmp(&a, &b, sizeof(Particle)) == 0;
}

std::vector<Particle> by_id(std::vector<Particle> snap) {
  std::sort(snap.begin(), snap.end(), [](const Particle &a, const Particle &b) { return a.id < b.id; });
  return snap;
}

struct Sim {
  ParticleStore store;
  CellGrid grid;
  SphParams par;
  std::vector<Particle> ic;
};

Sim make_sim(int64_t n, int ppc, uint64_t seed, Layout layout) {
  Sim s;
  InitConfig cfg;
  cfg.n = n;
  cfg.ppc = ppc;
  cfg.seed = seed;
  cfg.layout = layout;
  s.store = make_particles(cfg, s.par);
  s.grid = build_grid(s.store, cfg);
  s.ic = s.store.snapshot();
  return s;
}

std::vector<Particle> run_once(Sim &s, KernelId k, Path path, Order order, Guard guard,
                               int threads = 1) {
  s.store.restore(s.ic);
  run_sweep(k, s.grid, s.par, path, order, guard, threads);
  return s.store.snapshot();
}

const KernelId kAllKernels[] = {KernelId::Density, KernelId::Force, KernelId::Drift,
                                KernelId::Kick1, KernelId::Kick2};

} // namespace

TEST_CASE("spline integrates to one over the plane") {
  double integral = 2.0 * 3.14159265358979323846 *
                    (simpson(ring_weight, 0.0, 0.5, 2048) + simpson(ring_weight, 0.5, 1.5, 4096) +
                     simpson(ring_weight, 1.5, 2.5, 4096));
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("spline derivative matches a numerical derivative") {
  const double breaks[] = {0.5, 1.5, 2.5};
  for (double q = 0.013; q < 2.6; q += 0.031) {
    bool near_break = false;
    for (double b : breaks)
      if (std::abs(q - b) < 1e-3) near_break = true;
    if (near_break) continue;
    double eps = 1e-6;
    double num = (kernel_w(q + eps) - kernel_w(q - eps)) / (2.0 * eps);
    CHECK(kernel_dw(q) == doctest::Approx(num).epsilon(1e-5));
  }
}

TEST_CASE("spline support and shape") {
  CHECK(kernel_w(2.5) == 0.0);
  CHECK(kernel_dw(2.5) == 0.0);
  CHECK(kernel_w(3.7) == 0.0);
  CHECK(kernel_dw(0.0) == 0.0);
  CHECK(kernel_w(0.0) > 0.0);
  double prev = kernel_w(0.0);
  for (int i = 1; i <= 10000; ++i) {
    double w = kernel_w(i * (3.0 / 10000.0));
    CHECK(w <= prev);
    CHECK(w >= 0.0);
    prev = w;
  }
}

TEST_CASE("initial condition is deterministic per seed") {
  Sim a = make_sim(700, 64, 11, Layout::Scattered);
  Sim b = make_sim(700, 64, 11, Layout::Scattered);
  REQUIRE(a.ic.size() == b.ic.size());
  for (size_t i = 0; i < a.ic.size(); ++i) CHECK(records_equal(a.ic[i], b.ic[i]));
  Sim c = make_sim(700, 64, 12, Layout::Scattered);
  bool all_same = true;
  for (size_t i = 0; i < a.ic.size(); ++i) all_same = all_same && records_equal(a.ic[i], c.ic[i]);
  CHECK_FALSE(all_same);
}

TEST_CASE("layouts produce identical particles by id") {
  Sim a = make_sim(900, 64, 5, Layout::Scattered);
  Sim b = make_sim(900, 64, 5, Layout::Continuous);
  auto sa = by_id(a.ic);
  auto sb = by_id(b.ic);
  for (size_t i = 0; i < sa.size(); ++i) REQUIRE(records_equal(sa[i], sb[i]));
  for (KernelId k : kAllKernels) {
    auto ra = by_id(run_once(a, k, Path::AosBaseline, Order::LocalActive, Guard::Branch));
    auto rb = by_id(run_once(b, k, Path::AosBaseline, Order::LocalActive, Guard::Branch));
    for (size_t i = 0; i < ra.size(); ++i) REQUIRE(records_equal(ra[i], rb[i]));
  }
}

TEST_CASE("initial condition leaves every kernel input live") {
  Sim s = make_sim(800, 64, 42, Layout::Scattered);
  double h_max = s.grid.cell_size / kSplineSupport;
  CHECK(s.par.target_wcount > 0.0);
  for (const Particle *p : s.store.all) {
    CHECK(p->rho > 0.0);
    CHECK(p->wcount > 0.0);
    CHECK(p->p > 0.0);
    CHECK(p->c > 0.0);
    CHECK(p->u > 0.0);
    CHECK(p->h > 0.0);
    CHECK(p->h <= h_max);
    CHECK(p->v_sig > 0.0);
    CHECK(std::isfinite(p->a[0]));
    CHECK(std::isfinite(p->a[1]));
    CHECK(std::isfinite(p->u_dt));
    CHECK(std::isfinite(p->h_dt));
    CHECK(std::isfinite(p->rho_dh));
  }
}

TEST_CASE("grid partitions particles and active covers local") {
  Sim s = make_sim(2048, 64, 3, Layout::Scattered);
  int64_t total = 0;
  for (size_t ci = 0; ci < s.grid.local.size(); ++ci) {
    const auto &loc = s.grid.local[ci];
    const auto &act = s.grid.active[ci];
    total += static_cast<int64_t>(loc.size());
    CHECK(act.size() >= loc.size());
    for (Particle *p : loc) CHECK(std::count(act.begin(), act.end(), p) == 1);
  }
  CHECK(total == s.store.size());
  CHECK(update_count(s.grid) == s.store.size());
  CHECK(s.grid.mean_ppc() >= 64.0);
  CHECK(s.grid.mean_ppc() <= 2.5 * 64.0);
}

TEST_CASE("small grids deduplicate wrapped neighbour cells") {
  for (int64_t n : {60, 250}) {
    Sim s = make_sim(n, 64, 9, Layout::Continuous);
    REQUIRE(s.grid.nx <= 2);
    for (size_t ci = 0; ci < s.grid.active.size(); ++ci) {
      auto act = s.grid.active[ci];
      CHECK(static_cast<int64_t>(act.size()) == s.store.size());
      std::sort(act.begin(), act.end());
      CHECK(std::adjacent_find(act.begin(), act.end()) == act.end());
    }
  }
}

TEST_CASE("snapshot restore round-trips") {
  Sim s = make_sim(300, 64, 21, Layout::Scattered);
  auto snap = s.store.snapshot();
  for (Particle *p : s.store.all) {
    p->rho = -7.0;
    p->flags = 99;
  }
  s.store.restore(snap);
  auto again = s.store.snapshot();
  for (size_t i = 0; i < snap.size(); ++i) CHECK(records_equal(snap[i], again[i]));
}

TEST_CASE("drift advances predicted state and respects frozen") {
  SphParams par;
  par.dt = 0.5;
  Particle p = base_particle(1.0, 2.0);
  p.v_pred[0] = 2.0;
  p.v_pred[1] = -1.0;
  p.u = 4.0;
  p.u_dt = 8.0;
  drift_one(p, par);
  CHECK(p.x[0] == 2.0);
  CHECK(p.x[1] == 1.5);
  CHECK(p.u_pred == 4.0 + 0.25 * 8.0);
  CHECK(p.moved == 1);

  Particle q = base_particle(1.0, 2.0);
  q.v_pred[0] = 2.0;
  q.u = 4.0;
  q.u_dt = 8.0;
  q.frozen = 1;
  drift_one(q, par);
  CHECK(q.x[0] == 1.0);
  CHECK(q.u_pred == 4.0);
  CHECK(q.moved == 0);
}

TEST_CASE("kick1 leaves a resting particle at rest") {
  SphParams par;
  Particle p = base_particle(0.5, 0.5);
  p.u = 2.0;
  p.u_dt = 4.0;
  kick1_one(p, par);
  CHECK(p.v[0] == 0.0);
  CHECK(p.v[1] == 0.0);
  CHECK(p.u == 2.0 + 0.5 * par.dt * 4.0);
  CHECK(p.dt_next == std::min(0.005 / 1.0e-12, std::sqrt(0.005 / 1.0e-12)));
}

TEST_CASE("kick2 applies the energy floor and refreshes the EOS") {
  SphParams par;
  Particle p = base_particle(0.5, 0.5);
  p.u = 1.0;
  p.u_dt = -30000.0;
  p.u_pred = 1.0;
  p.rho = 2.0;
  p.v_sig = 3.0;
  kick2_one(p, par);
  CHECK(p.u == 0.5);
  CHECK(p.u_pred == 0.5);
  CHECK(p.c == std::sqrt(par.gamma * (par.gamma - 1.0) * 0.5));
  CHECK(p.p == (par.gamma - 1.0) * 2.0 * 0.5);
  CHECK(p.h_dt == 0.0);
  CHECK(p.v_pred[0] == p.v[0]);
}

TEST_CASE("isolated particle density reduces to the self term") {
  ParticleStore store = tiny_store({base_particle(0.5, 0.5)});
  store.flat[0].m = 2.0;
  InitConfig cfg;
  cfg.n = 1;
  cfg.ppc = 64;
  CellGrid grid = build_grid(store, cfg);
  SphParams par;
  par.target_wcount = kernel_w(0.0);
  run_sweep(KernelId::Density, grid, par, Path::AosBaseline, Order::LocalActive, Guard::Branch);
  const Particle &p = store.flat[0];
  double inv_h2 = (1.0 / 0.3) * (1.0 / 0.3);
  CHECK(p.rho == 2.0 * kernel_w(0.0) * inv_h2);
  CHECK(p.wcount == kernel_w(0.0));
  CHECK(p.div_v == 0.0);
  CHECK(p.rot_v == 0.0);
  CHECK(p.h == 0.3);
  CHECK(p.flags == 0);
}

TEST_CASE("symmetric pair gets equal density and opposite forces") {
  ParticleStore store = tiny_store({base_particle(0.4, 0.5), base_particle(0.6, 0.5)});
  store.flat[0].id = 0;
  store.flat[1].id = 1;
  InitConfig cfg;
  cfg.n = 2;
  cfg.ppc = 64;
  CellGrid grid = build_grid(store, cfg);
  SphParams par;
  double q = 0.2 / 0.3;
  par.target_wcount = kernel_w(0.0) + kernel_w(q);
  run_sweep(KernelId::Density, grid, par, Path::AosBaseline, Order::LocalActive, Guard::Branch);
  CHECK(store.flat[0].rho == store.flat[1].rho);
  CHECK(store.flat[0].rho > 0.0);
  run_sweep(KernelId::Force, grid, par, Path::AosBaseline, Order::LocalActive, Guard::Branch);
  CHECK(store.flat[0].a[0] == -store.flat[1].a[0]);
  CHECK(store.flat[0].a[0] != 0.0);
  CHECK(store.flat[0].a[1] == -store.flat[1].a[1]);
  CHECK(store.flat[0].v_sig == store.flat[1].v_sig);
}

TEST_CASE("guard styles agree bitwise") {
  Sim s = make_sim(1400, 64, 7, Layout::Scattered);
  for (KernelId k : {KernelId::Density, KernelId::Force}) {
    auto branch = run_once(s, k, Path::AosBaseline, Order::LocalActive, Guard::Branch);
    auto mask = run_once(s, k, Path::AosBaseline, Order::LocalActive, Guard::Mask);
    for (size_t i = 0; i < branch.size(); ++i) REQUIRE(records_equal(branch[i], mask[i]));
    auto mask_soa = run_once(s, k, Path::SoaView, Order::LocalActive, Guard::Mask);
    for (size_t i = 0; i < branch.size(); ++i) REQUIRE(records_equal(branch[i], mask_soa[i]));
  }
}

TEST_CASE("loop orders agree bitwise") {
  Sim s = make_sim(1400, 64, 8, Layout::Scattered);
  for (KernelId k : {KernelId::Density, KernelId::Force}) {
    auto la = run_once(s, k, Path::AosBaseline, Order::LocalActive, Guard::Branch);
    auto al = run_once(s, k, Path::AosBaseline, Order::ActiveLocal, Guard::Branch);
    for (size_t i = 0; i < la.size(); ++i) REQUIRE(records_equal(la[i], al[i]));
    auto al_soa = run_once(s, k, Path::SoaView, Order::ActiveLocal, Guard::Branch);
    for (size_t i = 0; i < la.size(); ++i) REQUIRE(records_equal(la[i], al_soa[i]));
  }
}

TEST_CASE("soa view path agrees bitwise with the aos baseline") {
  Sim s = make_sim(1600, 64, 4, Layout::Scattered);
  for (KernelId k : kAllKernels) {
    auto aos = run_once(s, k, Path::AosBaseline, Order::LocalActive, Guard::Branch);
    auto soa = run_once(s, k, Path::SoaView, Order::LocalActive, Guard::Branch);
    for (size_t i = 0; i < aos.size(); ++i) REQUIRE(records_equal(aos[i], soa[i]));
  }
}

TEST_CASE("worker pool does not change results") {
  Sim s = make_sim(1100, 64, 6, Layout::Scattered);
  for (KernelId k : {KernelId::Density, KernelId::Drift}) {
    auto one = run_once(s, k, Path::SoaView, Order::LocalActive, Guard::Branch, 1);
    auto four = run_once(s, k, Path::SoaView, Order::LocalActive, Guard::Branch, 4);
    for (size_t i = 0; i < one.size(); ++i) REQUIRE(records_equal(one[i], four[i]));
  }
}

TEST_CASE("sweep timers land in the right phases") {
  Sim s = make_sim(1200, 64, 13, Layout::Scattered);
  s.store.restore(s.ic);
  KernelTimes aos = run_sweep(KernelId::Density, s.grid, s.par, Path::AosBaseline,
                              Order::LocalActive, Guard::Branch);
  CHECK(aos.prologue_ns == 0);
  CHECK(aos.epilogue_ns == 0);
  CHECK(aos.compute_ns > 0);
  s.store.restore(s.ic);
  KernelTimes soa = run_sweep(KernelId::Density, s.grid, s.par, Path::SoaView, Order::LocalActive,
                              Guard::Branch);
  CHECK(soa.prologue_ns > 0);
  CHECK(soa.compute_ns > 0);
  CHECK(soa.epilogue_ns > 0);
  CHECK(soa.total() == soa.prologue_ns + soa.compute_ns + soa.epilogue_ns);
}

TEST_CASE("variant strings round-trip") {
  std::string err;
  for (Path p : {Path::AosBaseline, Path::SoaView})
    for (Layout l : {Layout::Scattered, Layout::Continuous})
      for (Order o : {Order::LocalActive, Order::ActiveLocal})
        for (Guard g : {Guard::Branch, Guard::Mask}) {
          VariantSpec v{p, l, o, g};
          auto back = parse_variant(variant_string(v), err);
          REQUIRE(back.has_value());
          CHECK(back->path == p);
          CHECK(back->layout == l);
          CHECK(back->order == o);
          CHECK(back->guard == g);
        }
  auto shuffled = parse_variant("mask, active-local ,continuous,soa-view", err);
  REQUIRE(shuffled.has_value());
  CHECK(shuffled->path == Path::SoaView);
  CHECK(shuffled->layout == Layout::Continuous);
  CHECK(shuffled->order == Order::ActiveLocal);
  CHECK(shuffled->guard == Guard::Mask);
  auto partial = parse_variant("soa-view", err);
  REQUIRE(partial.has_value());
  CHECK(partial->layout == Layout::Scattered);
  CHECK(partial->order == Order::LocalActive);
  CHECK(partial->guard == Guard::Branch);
  CHECK_FALSE(parse_variant("soa-view,sideways", err).has_value());
  CHECK(err.find("unknown variant token 'sideways'") != std::string::npos);
}

TEST_CASE("bench runs, cross-checks, and emits the stable csv header") {
  BenchConfig cfg;
  cfg.kernels = {KernelId::Density, KernelId::Drift};
  std::string err;
  cfg.variants = {*parse_variant("soa-view,scattered,local-active,branch", err),
                  *parse_variant("aos-baseline,scattered,local-active,branch", err)};
  cfg.ppcs = {64};
  cfg.particles = 1200;
  cfg.reps = 3;
  auto records = run_bench(cfg);
  REQUIRE(records.size() == 4);
  for (const auto &r : records) {
    CHECK(r.n == 1200);
    CHECK(r.reps.size() == 3);
    CHECK(r.t_total_ns > 0);
    CHECK(r.ns_per_update > 0.0);
    CHECK(r.conversion_share() >= 0.0);
    CHECK(r.conversion_share() <= 1.0);
    CHECK(r.cross_max_rel <= 1e-12);
    if (r.variant.path == Path::AosBaseline) {
      CHECK(r.t_prologue_ns == 0);
      CHECK(r.conversion_share() == 0.0);
    }
  }
  std::string csv = to_csv(records);
  CHECK(csv.rfind("kernel,path,layout,order,guard,ppc,n,t_prologue_ns,t_compute_ns,"
                  "t_epilogue_ns,t_total_ns,ns_per_update\n",
                  0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find("density,soa-view,scattered,local-active,branch,64,1200,") != std::string::npos);
}

TEST_CASE("bench rejects impossible configurations") {
  BenchConfig cfg;
  cfg.kernels = {KernelId::Drift};
  cfg.variants = {VariantSpec{}};
  cfg.particles = 100;
  cfg.ppcs = {256};
  CHECK_THROWS_AS(run_bench(cfg), std::runtime_error);
  cfg.ppcs = {64};
  cfg.reps = 0;
  CHECK(run_bench(cfg).empty());
}
