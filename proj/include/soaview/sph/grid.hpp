#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "soaview/sph/particle.hpp"

namespace soaview::sph {

// Storage variants. Scattered allocates every particle individually on the
// heap in randomized order; continuous keeps one contiguous array sorted by
// cell. Both are addressed through per-cell pointer lists, so the kernels
// are layout-agnostic.
enum class Layout { Scattered, Continuous };

struct ParticleStore {
  Layout layout = Layout::Scattered;
  std::vector<std::unique_ptr<Particle>> heap; // scattered owner
  std::vector<Particle> flat;                  // continuous owner
  std::vector<Particle *> all;                 // every particle, stable order

  int64_t size() const { return static_cast<int64_t>(all.size()); }
  // Value snapshot/restore, preserving addresses (for repeatable reps).
  std::vector<Particle> snapshot() const;
  void restore(const std::vector<Particle> &snap);
};

// Uniform cell grid over [0,1)^2. The local list of a cell holds its own
// particles; the active list additionally pulls in the vertex-connected
// neighbour cells, so local ⊆ active per cell.
struct CellGrid {
  int nx = 0, ny = 0;
  double cell_size = 0.0;
  std::vector<std::vector<Particle *>> local;
  std::vector<std::vector<Particle *>> active;

  int cells() const { return nx * ny; }
  double mean_ppc() const;
};

struct InitConfig {
  int64_t n = 1000;
  int ppc = 64;
  uint64_t seed = 42;
  Layout layout = Layout::Scattered;
};

// Deterministic initial condition: uniform random positions, warm-started
// smoothing lengths, thermodynamics consistent with the EOS. Calibrates
// par.target_wcount from the initial neighbour sums, then settles the
// smoothing lengths and runs one force pass so every field starts live.
ParticleStore make_particles(const InitConfig &cfg, SphParams &par);
CellGrid build_grid(const ParticleStore &store, const InitConfig &cfg);

} // namespace soaview::sph
