#pragma once

#include <cstddef>
#include <cstdint>

namespace soaview::sph {

// 2-D SPH particle. The field inventory mirrors corpus/sph_kernels.kl
// field for field; both sides are packed to a 272-byte record and the
// offsets are pinned below.
struct Particle {
  double x[2];      // position
  double v[2];      // velocity
  double v_pred[2]; // predicted velocity (drift state)
  double a[2];      // acceleration
  double m;         // mass
  double rho;       // density
  double p;         // pressure
  double u;         // internal energy
  double u_pred;    // predicted internal energy
  double u_dt;      // energy derivative
  double c;         // sound speed
  double h;         // smoothing length
  double wcount;    // weighted neighbour count
  double rho_dh;    // density derivative wrt h
  double rot_v;     // rotational velocity (z curl in 2-D)
  double div_v;     // velocity divergence
  double v_sig;     // max signal velocity
  double h_dt;      // smoothing length rate
  double dt_next;   // next time-step candidate
  int32_t frozen;   // boundary-fixed flag
  int32_t moved;    // needs-resort flag
  int64_t id;
  int64_t cell;
  int64_t flags;
  double dbg[2];    // probe slots
  double spare[5];  // reserved
};

static_assert(sizeof(Particle) == 272, "record layout must stay 272 bytes");
static_assert(offsetof(Particle, m) == 64);
static_assert(offsetof(Particle, frozen) == 184);
static_assert(offsetof(Particle, moved) == 188);
static_assert(offsetof(Particle, id) == 192);
static_assert(offsetof(Particle, dbg) == 216);
static_assert(offsetof(Particle, spare) == 232);

// Equation-of-state and kernel constants shared by all five kernels.
struct SphParams {
  double dt = 1.0e-4;
  double gamma = 5.0 / 3.0; // ideal gas
  double cfl = 0.1;
  double grav = 1.0; // strength of the softened short-range attraction
  double target_wcount = 0.0; // calibrated from the initial configuration
};

} // namespace soaview::sph
