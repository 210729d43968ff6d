#pragma once

#include "soaview/layout.hpp"
#include "soaview/sph/grid.hpp"
#include "soaview/sph/particle.hpp"

namespace soaview::sph {

enum class KernelId { Density, Force, Drift, Kick1, Kick2 };

// Access path: direct AoS record access vs. gather/compute/scatter through
// temporary SoA views.
enum class Path { AosBaseline, SoaView };
// Pair-loop nesting for the quadratic kernels: local-active iterates local
// particles outermost (writes stay private per iteration), active-local
// flips the nest and accumulates into the local set from outside.
enum class Order { LocalActive, ActiveLocal };
// Out-of-range handling in pair loops: skip via branch, or evaluate all
// pairs and multiply contributions by a 0/1 mask.
enum class Guard { Branch, Mask };

const char *kernel_name(KernelId k);

struct KernelTimes {
  int64_t prologue_ns = 0; // AoS -> SoA
  int64_t compute_ns = 0;
  int64_t epilogue_ns = 0; // SoA -> AoS
  int64_t total() const { return prologue_ns + compute_ns + epilogue_ns; }
};

// View descriptors per kernel, matching the access sets of the corpus
// kernels (drift additionally moves positions here).
ViewDescriptor density_local_view(int64_t count);
ViewDescriptor density_active_view(int64_t count);
ViewDescriptor force_local_view(int64_t count);
ViewDescriptor force_active_view(int64_t count);
ViewDescriptor drift_view(int64_t count);
ViewDescriptor kick1_view(int64_t count);
ViewDescriptor kick2_view(int64_t count);

// One full sweep of the kernel over all cells of the grid; per-phase wall
// clock accumulated across cells. AoS sweeps report everything as compute.
// `threads` > 1 distributes cells over a worker pool (local-active and the
// linear kernels only; active-local accumulation stays sequential).
KernelTimes run_sweep(KernelId k, const CellGrid &grid, const SphParams &par, Path path,
                      Order order, Guard guard, int threads = 1);

// Particle updates per sweep (one per local particle).
int64_t update_count(const CellGrid &grid);

// Single-particle reference ops for the linear kernels.
void drift_one(Particle &p, const SphParams &par);
void kick1_one(Particle &p, const SphParams &par);
void kick2_one(Particle &p, const SphParams &par);

} // namespace soaview::sph
