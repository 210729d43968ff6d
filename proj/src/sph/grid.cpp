#include "soaview/sph/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "soaview/sph/kernels.hpp"
#include "soaview/sph/spline.hpp"

namespace soaview::sph {

namespace {

double unit_real(std::mt19937_64 &rng) {
  // fixed 53-bit mapping so initial conditions do not depend on the
  // standard library's distribution implementation
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int clamp_cell(int v, int n) { return std::max(0, std::min(v, n - 1)); }

int grid_nx(int64_t n, int ppc) {
  double cell = std::sqrt(static_cast<double>(ppc) / static_cast<double>(std::max<int64_t>(n, 1)));
  return std::max(1, static_cast<int>(std::floor(1.0 / cell)));
}

// Mean dimensionless neighbour sum with the warm-start smoothing lengths;
// this is the fixed point the per-particle iteration is pulled toward.
// Separations use the minimum image on the unit torus, like the kernels.
double mean_wcount(const CellGrid &grid) {
  double total = 0.0;
  int64_t n = 0;
  const double w0 = kernel_w(0.0);
  for (int ci = 0; ci < grid.cells(); ++ci) {
    for (const Particle *pi : grid.local[ci]) {
      double wc = w0;
      double inv_h = 1.0 / pi->h;
      for (const Particle *pj : grid.active[ci]) {
        double dx0 = pi->x[0] - pj->x[0];
        double dx1 = pi->x[1] - pj->x[1];
        dx0 -= std::round(dx0);
        dx1 -= std::round(dx1);
        double r2 = dx0 * dx0 + dx1 * dx1;
        if (r2 <= 0.0) continue;
        double q = std::sqrt(r2) * inv_h;
        if (q < kSplineSupport) wc += kernel_w(q);
      }
      total += wc;
      ++n;
    }
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

} // namespace

std::vector<Particle> ParticleStore::snapshot() const {
  std::vector<Particle> snap;
  snap.reserve(all.size());
  for (const Particle *p : all) snap.push_back(*p);
  return snap;
}

void ParticleStore::restore(const std::vector<Particle> &snap) {
  for (size_t i = 0; i < snap.size(); ++i) *all[i] = snap[i];
}

double CellGrid::mean_ppc() const {
  if (!cells()) return 0.0;
  int64_t n = 0;
  for (const auto &l : local) n += static_cast<int64_t>(l.size());
  return static_cast<double>(n) / cells();
}

ParticleStore make_particles(const InitConfig &cfg, SphParams &par) {
  std::mt19937_64 rng(cfg.seed);
  int64_t n = std::max<int64_t>(cfg.n, 1);
  double cell_size = 1.0 / grid_nx(n, cfg.ppc);
  double h_warm = 0.8 * cell_size / kSplineSupport;

  std::vector<Particle> proto(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    Particle &p = proto[static_cast<size_t>(i)];
    p = Particle{};
    p.x[0] = unit_real(rng);
    p.x[1] = unit_real(rng);
    p.v[0] = (unit_real(rng) * 2.0 - 1.0) * 0.05;
    p.v[1] = (unit_real(rng) * 2.0 - 1.0) * 0.05;
    p.v_pred[0] = p.v[0];
    p.v_pred[1] = p.v[1];
    p.u = 0.5 + unit_real(rng);
    p.u_pred = p.u;
    p.m = 1.0 / static_cast<double>(n);
    p.h = h_warm;
    p.dt_next = 1.0e30;
    p.id = i;
  }

  ParticleStore store;
  store.layout = cfg.layout;
  store.all.resize(static_cast<size_t>(n));
  if (cfg.layout == Layout::Scattered) {
    // allocate in shuffled order so heap addresses decorrelate from ids
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (int64_t i = n - 1; i > 0; --i) {
      int64_t j = static_cast<int64_t>(rng() % static_cast<uint64_t>(i + 1));
      std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    store.heap.reserve(static_cast<size_t>(n));
    for (int64_t k = 0; k < n; ++k) {
      int64_t id = order[static_cast<size_t>(k)];
      store.heap.push_back(std::make_unique<Particle>(proto[static_cast<size_t>(id)]));
      store.all[static_cast<size_t>(id)] = store.heap.back().get();
    }
  } else {
    // one block sorted by cell; ties broken by id so per-cell order matches
    // the scattered layout exactly
    int nx = grid_nx(n, cfg.ppc);
    auto cell_of = [&](const Particle &p) {
      int cx = clamp_cell(static_cast<int>(std::floor(p.x[0] * nx)), nx);
      int cy = clamp_cell(static_cast<int>(std::floor(p.x[1] * nx)), nx);
      return cy * nx + cx;
    };
    std::sort(proto.begin(), proto.end(), [&](const Particle &a, const Particle &b) {
      int ca = cell_of(a), cb = cell_of(b);
      return ca != cb ? ca < cb : a.id < b.id;
    });
    store.flat = std::move(proto);
    for (size_t i = 0; i < store.flat.size(); ++i) store.all[i] = &store.flat[i];
  }

  CellGrid grid = build_grid(store, cfg);
  par.target_wcount = mean_wcount(grid);
  run_sweep(KernelId::Density, grid, par, Path::AosBaseline, Order::LocalActive, Guard::Branch);
  for (Particle *p : store.all) {
    p->p = (par.gamma - 1.0) * p->rho * p->u;
    p->c = std::sqrt(par.gamma * (par.gamma - 1.0) * p->u);
  }
  run_sweep(KernelId::Force, grid, par, Path::AosBaseline, Order::LocalActive, Guard::Branch);
  return store;
}

CellGrid build_grid(const ParticleStore &store, const InitConfig &cfg) {
  CellGrid g;
  g.nx = grid_nx(store.size(), cfg.ppc);
  g.ny = g.nx;
  g.cell_size = 1.0 / g.nx;
  g.local.assign(static_cast<size_t>(g.cells()), {});
  g.active.assign(static_cast<size_t>(g.cells()), {});
  for (Particle *p : store.all) {
    int cx = clamp_cell(static_cast<int>(std::floor(p->x[0] * g.nx)), g.nx);
    int cy = clamp_cell(static_cast<int>(std::floor(p->x[1] * g.nx)), g.ny);
    int ci = cy * g.nx + cx;
    p->cell = ci;
    g.local[static_cast<size_t>(ci)].push_back(p);
  }
  // Neighbourhoods wrap around the torus; with fewer than three cells per
  // axis the same cell would appear repeatedly, so indices are deduplicated.
  for (int cy = 0; cy < g.ny; ++cy) {
    for (int cx = 0; cx < g.nx; ++cx) {
      auto &act = g.active[static_cast<size_t>(cy * g.nx + cx)];
      int idx[9];
      int nidx = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          int wy = (cy + dy + g.ny) % g.ny;
          int wx = (cx + dx + g.nx) % g.nx;
          int ci = wy * g.nx + wx;
          bool seen = false;
          for (int k = 0; k < nidx; ++k)
            if (idx[k] == ci) seen = true;
          if (!seen) idx[nidx++] = ci;
        }
      }
      for (int k = 0; k < nidx; ++k) {
        const auto &src = g.local[static_cast<size_t>(idx[k])];
        act.insert(act.end(), src.begin(), src.end());
      }
    }
  }
  return g;
}

} // namespace soaview::sph
