#include "soaview/sph/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <stdexcept>

namespace soaview::sph {

namespace {

const char *path_token(Path p) { return p == Path::AosBaseline ? "aos-baseline" : "soa-view"; }
const char *layout_token(Layout l) { return l == Layout::Scattered ? "scattered" : "continuous"; }
const char *order_token(Order o) { return o == Order::LocalActive ? "local-active" : "active-local"; }
const char *guard_token(Guard g) { return g == Guard::Branch ? "branch" : "mask"; }

int64_t median_ns(std::vector<int64_t> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double rel_diff(double a, double b) {
  double d = std::abs(a - b);
  if (d == 0.0) return 0.0;
  return d / std::max({std::abs(a), std::abs(b), 1.0e-30});
}

// Fields each kernel may change; everything else is covered by the layout
// round-trip tests, not the physics cross-check.
double cross_compare(KernelId k, const std::vector<Particle> &got,
                     const std::vector<Particle> &ref) {
  double worst = 0.0;
  auto f = [&worst](double x, double y) { worst = std::max(worst, rel_diff(x, y)); };
  for (size_t i = 0; i < got.size(); ++i) {
    const Particle &a = got[i];
    const Particle &b = ref[i];
    switch (k) {
    case KernelId::Density:
      f(a.rho, b.rho);
      f(a.wcount, b.wcount);
      f(a.rho_dh, b.rho_dh);
      f(a.rot_v, b.rot_v);
      f(a.div_v, b.div_v);
      f(a.h, b.h);
      break;
    case KernelId::Force:
      f(a.a[0], b.a[0]);
      f(a.a[1], b.a[1]);
      f(a.u_dt, b.u_dt);
      f(a.v_sig, b.v_sig);
      f(a.h_dt, b.h_dt);
      break;
    case KernelId::Drift:
      f(a.x[0], b.x[0]);
      f(a.x[1], b.x[1]);
      f(a.u_pred, b.u_pred);
      if (a.moved != b.moved) worst = std::max(worst, 1.0);
      break;
    case KernelId::Kick1:
      f(a.v[0], b.v[0]);
      f(a.v[1], b.v[1]);
      f(a.u, b.u);
      f(a.dt_next, b.dt_next);
      break;
    case KernelId::Kick2:
      f(a.v[0], b.v[0]);
      f(a.v[1], b.v[1]);
      f(a.v_pred[0], b.v_pred[0]);
      f(a.v_pred[1], b.v_pred[1]);
      f(a.u, b.u);
      f(a.u_pred, b.u_pred);
      f(a.c, b.c);
      f(a.p, b.p);
      f(a.dt_next, b.dt_next);
      f(a.h_dt, b.h_dt);
      break;
    }
  }
  return worst;
}

std::string trimmed(const std::string &s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

} // namespace

std::string variant_string(const VariantSpec &v) {
  std::string s = path_token(v.path);
  s += ',';
  s += layout_token(v.layout);
  s += ',';
  s += order_token(v.order);
  s += ',';
  s += guard_token(v.guard);
  return s;
}

std::optional<VariantSpec> parse_variant(const std::string &s, std::string &err) {
  VariantSpec v;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t comma = s.find(',', pos);
    std::string tok = trimmed(s.substr(pos, comma == std::string::npos ? comma : comma - pos));
    pos = comma == std::string::npos ? s.size() + 1 : comma + 1;
    if (tok == "aos-baseline")
      v.path = Path::AosBaseline;
    else if (tok == "soa-view")
      v.path = Path::SoaView;
    else if (tok == "scattered")
      v.layout = Layout::Scattered;
    else if (tok == "continuous")
      v.layout = Layout::Continuous;
    else if (tok == "local-active")
      v.order = Order::LocalActive;
    else if (tok == "active-local")
      v.order = Order::ActiveLocal;
    else if (tok == "branch")
      v.guard = Guard::Branch;
    else if (tok == "mask")
      v.guard = Guard::Mask;
    else {
      err = "unknown variant token '" + tok + "'";
      return std::nullopt;
    }
  }
  return v;
}

std::vector<BenchRecord> run_bench(const BenchConfig &cfg) {
  std::vector<BenchRecord> out;
  if (cfg.reps <= 0) return out;
  for (int ppc : cfg.ppcs) {
    if (ppc <= 0) throw std::runtime_error("cells-per-particle target must be positive");
    if (static_cast<int64_t>(ppc) > cfg.particles)
      throw std::runtime_error("ppc " + std::to_string(ppc) + " exceeds the particle count " +
                               std::to_string(cfg.particles));

    struct Slot {
      ParticleStore store;
      CellGrid grid;
      SphParams par;
      std::vector<Particle> ic;
    };
    std::map<Layout, std::unique_ptr<Slot>> slots;
    auto slot_for = [&](Layout lay) -> Slot & {
      auto &s = slots[lay];
      if (!s) {
        s = std::make_unique<Slot>();
        InitConfig init;
        init.n = cfg.particles;
        init.ppc = ppc;
        init.seed = cfg.seed;
        init.layout = lay;
        s->store = make_particles(init, s->par);
        s->grid = build_grid(s->store, init);
        s->ic = s->store.snapshot();
      }
      return *s;
    };
    std::map<std::pair<int, int>, std::vector<Particle>> refs;
    auto ref_for = [&](Layout lay, KernelId k) -> const std::vector<Particle> & {
      auto key = std::make_pair(static_cast<int>(lay), static_cast<int>(k));
      auto it = refs.find(key);
      if (it == refs.end()) {
        Slot &s = slot_for(lay);
        s.store.restore(s.ic);
        run_sweep(k, s.grid, s.par, Path::AosBaseline, Order::LocalActive, Guard::Branch, 1);
        it = refs.emplace(key, s.store.snapshot()).first;
      }
      return it->second;
    };

    for (KernelId k : cfg.kernels) {
      for (const VariantSpec &v : cfg.variants) {
        Slot &s = slot_for(v.layout);
        BenchRecord rec;
        rec.kernel = k;
        rec.variant = v;
        rec.ppc = ppc;
        rec.n = s.store.size();
        s.store.restore(s.ic);
        run_sweep(k, s.grid, s.par, v.path, v.order, v.guard, cfg.threads);
        for (int r = 0; r < cfg.reps; ++r) {
          s.store.restore(s.ic);
          KernelTimes t = run_sweep(k, s.grid, s.par, v.path, v.order, v.guard, cfg.threads);
          rec.reps.push_back(t);
          if (r == 0 && cfg.cross_check && v.path == Path::SoaView) {
            std::vector<Particle> got = s.store.snapshot();
            rec.cross_max_rel = cross_compare(k, got, ref_for(v.layout, k));
          }
        }
        std::vector<int64_t> pro, comp, epi, tot;
        for (const KernelTimes &t : rec.reps) {
          pro.push_back(t.prologue_ns);
          comp.push_back(t.compute_ns);
          epi.push_back(t.epilogue_ns);
          tot.push_back(t.total());
        }
        rec.t_prologue_ns = median_ns(pro);
        rec.t_compute_ns = median_ns(comp);
        rec.t_epilogue_ns = median_ns(epi);
        rec.t_total_ns = median_ns(tot);
        int64_t updates = update_count(s.grid);
        rec.ns_per_update = updates ? static_cast<double>(rec.t_total_ns) / static_cast<double>(updates)
                                    : 0.0;
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

std::string to_csv(const std::vector<BenchRecord> &records) {
  std::string out = "kernel,path,layout,order,guard,ppc,n,t_prologue_ns,t_compute_ns,"
                    "t_epilogue_ns,t_total_ns,ns_per_update\n";
  char line[256];
  for (const BenchRecord &r : records) {
    std::snprintf(line, sizeof line, "%s,%s,%s,%s,%s,%d,%lld,%lld,%lld,%lld,%lld,%.3f\n",
                  kernel_name(r.kernel), path_token(r.variant.path), layout_token(r.variant.layout),
                  order_token(r.variant.order), guard_token(r.variant.guard), r.ppc,
                  static_cast<long long>(r.n), static_cast<long long>(r.t_prologue_ns),
                  static_cast<long long>(r.t_compute_ns), static_cast<long long>(r.t_epilogue_ns),
                  static_cast<long long>(r.t_total_ns), r.ns_per_update);
    out += line;
  }
  return out;
}

} // namespace soaview::sph
