#include "soaview/sph/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <thread>
#include <vector>

#include "soaview/sph/spline.hpp"

namespace soaview::sph {

namespace {

int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// Minimum-image separation on the unit torus.
double min_image(double d) { return d - std::round(d); }

FieldSpec fspec(size_t off, int size, Dir dir) {
  return FieldSpec{static_cast<int>(off), size, dir};
}

constexpr int kRecord = static_cast<int>(sizeof(Particle));

enum DenLocalLane { DL_X, DL_VPRED, DL_M, DL_H, DL_RHO, DL_WCOUNT, DL_RHODH, DL_ROTV, DL_DIVV };
enum DenActiveLane { DA_X, DA_VPRED, DA_M };
enum ForceLocalLane {
  FL_X,
  FL_VPRED,
  FL_H,
  FL_P,
  FL_RHO,
  FL_RHODH,
  FL_C,
  FL_DIVV,
  FL_ROTV,
  FL_A,
  FL_UDT,
  FL_VSIG,
  FL_HDT
};
enum ForceActiveLane { FA_X, FA_VPRED, FA_M, FA_RHO, FA_P, FA_C };
enum DriftLane { DR_X, DR_VPRED, DR_FROZEN, DR_U, DR_UDT, DR_UPRED, DR_MOVED };
enum Kick1Lane { K1_V, K1_A, K1_U, K1_UDT, K1_DTNEXT };
enum Kick2Lane {
  K2_V,
  K2_A,
  K2_DBG,
  K2_U,
  K2_UDT,
  K2_UPRED,
  K2_RHO,
  K2_DTNEXT,
  K2_H,
  K2_VSIG,
  K2_C,
  K2_VPRED,
  K2_P,
  K2_HDT
};

struct DAcc {
  double rho = 0.0;
  double wcount = 0.0;
  double rho_dh = 0.0;
  double rot_v = 0.0;
  double div_v = 0.0;
};

struct DenOut {
  double h, rho, wcount, rho_dh, rot_v, div_v;
};

struct FInv {
  double x0, x1, v0, v1, hi, inv_hi, inv_hi3, pri, bi, eps2, ci;
};

struct FAcc {
  double a0 = 0.0;
  double a1 = 0.0;
  double udt = 0.0;
  double vsig = 0.0;
  double hdt = 0.0;
};

// The pair functions are shared verbatim by the aos and soa-view paths and
// by both loop orders, so those variants stay bitwise comparable. In mask
// mode out-of-support contributions reduce to signed zeros, which cannot
// perturb accumulators that start from +0.0.
template <bool kMask>
inline void density_pair(double xi0, double xi1, double vi0, double vi1, double inv_h,
                         double xj0, double xj1, double vj0, double vj1, double mj, DAcc &s) {
  double dx0 = min_image(xi0 - xj0);
  double dx1 = min_image(xi1 - xj1);
  double r2 = dx0 * dx0 + dx1 * dx1;
  if (r2 <= 0.0) return;
  double r = std::sqrt(r2);
  double q = r * inv_h;
  if constexpr (!kMask) {
    if (!(q < kSplineSupport)) return;
  }
  double w = kernel_w(q);
  double dw = kernel_dw(q);
  s.rho += mj * w;
  s.wcount += w;
  s.rho_dh -= mj * (2.0 * w + q * dw);
  double dv0 = vi0 - vj0;
  double dv1 = vi1 - vj1;
  double fac = mj * dw / r;
  s.div_v -= fac * (dv0 * dx0 + dv1 * dx1);
  s.rot_v += fac * (dv0 * dx1 - dv1 * dx0);
}

template <bool kMask>
inline void force_pair(const FInv &I, double grav, double xj0, double xj1, double vj0, double vj1,
                       double mj, double rhoj, double pj, double cj, FAcc &s) {
  double dx0 = min_image(I.x0 - xj0);
  double dx1 = min_image(I.x1 - xj1);
  double r2 = dx0 * dx0 + dx1 * dx1;
  if (r2 <= 0.0) return;
  double soft = r2 + I.eps2;
  double gfac = grav * mj / (soft * std::sqrt(soft));
  s.a0 -= gfac * dx0;
  s.a1 -= gfac * dx1;
  double r = std::sqrt(r2);
  double q = r * I.inv_hi;
  double support = 1.0;
  if constexpr (!kMask) {
    if (!(q < kSplineSupport)) return;
  } else {
    support = q < kSplineSupport ? 1.0 : 0.0;
  }
  double dwi = kernel_dw(q) * I.inv_hi3;
  double inv_r = 1.0 / r;
  double prj = pj / (rhoj * rhoj);
  double acc = mj * (I.pri + prj) * dwi * inv_r;
  s.a0 -= acc * dx0;
  s.a1 -= acc * dx1;
  double dv0 = I.v0 - vj0;
  double dv1 = I.v1 - vj1;
  double dvdr = dv0 * dx0 + dv1 * dx1;
  s.udt += mj * I.pri * dwi * dvdr * inv_r;
  double mu = std::min(0.0, dvdr * inv_r);
  s.vsig = std::max(s.vsig, support * (I.ci + cj - 3.0 * mu * I.bi));
  s.hdt -= mj / rhoj * dvdr * inv_r * dwi * 0.5 * I.hi;
}

template <class L>
inline FInv force_inv(const L &la, int64_t i) {
  FInv I;
  I.x0 = la.x0(i);
  I.x1 = la.x1(i);
  I.v0 = la.vp0(i);
  I.v1 = la.vp1(i);
  I.hi = la.h(i);
  I.inv_hi = 1.0 / I.hi;
  I.inv_hi3 = I.inv_hi * I.inv_hi * I.inv_hi;
  double rhoi = la.rho(i);
  I.pri = la.p(i) / (rhoi * rhoi) * (1.0 + 0.5 * I.hi * la.rho_dh(i) / rhoi);
  double adiv = std::abs(la.div_v(i));
  I.ci = la.c(i);
  I.bi = adiv / (adiv + std::abs(la.rot_v(i)) + 0.0001 * I.ci * I.inv_hi);
  I.eps2 = 0.01 * I.hi * I.hi;
  return I;
}

enum class DenNext { Again, Done, Fail };

struct DenStep {
  DenNext next;
  double h;
};

// One smoothing-length update. Stops on the relative tolerance, on a
// stalled (clamped) length, or after 30 rounds; the caller publishes the
// sums belonging to the returned h.
inline DenStep density_step(const DAcc &s, double h, double target, double h_max, int iter) {
  double wc = s.wcount + kernel_w(0.0);
  double ratio = std::sqrt(target / wc);
  if (std::abs(ratio - 1.0) < 1.0e-4) return {DenNext::Done, h};
  double hn = std::min(h_max, h * std::min(1.2, std::max(0.8, ratio)));
  if (hn == h) return {DenNext::Done, h};
  if (iter >= 29) return {DenNext::Fail, h};
  return {DenNext::Again, hn};
}

template <class L>
inline void density_publish(const L &la, int64_t i, const DAcc &s, double h, double mi) {
  double w0 = kernel_w(0.0);
  double inv_h = 1.0 / h;
  double inv_h2 = inv_h * inv_h;
  double inv_h3 = inv_h2 * inv_h;
  la.set(i, DenOut{h, (s.rho + mi * w0) * inv_h2, s.wcount + w0, (s.rho_dh - 2.0 * mi * w0) * inv_h3,
                   s.rot_v * inv_h3, s.div_v * inv_h3});
}

template <bool kMask, class L, class A>
void density_cell_la(const L &la, int64_t nl, const A &aa, int64_t na, double target, double h_max,
                     Particle *const *locals) {
  for (int64_t i = 0; i < nl; ++i) {
    double xi0 = la.x0(i), xi1 = la.x1(i);
    double vi0 = la.vp0(i), vi1 = la.vp1(i);
    double mi = la.m(i);
    double h = la.h(i);
    DAcc s;
    for (int iter = 0;; ++iter) {
      s = DAcc{};
      double inv_h = 1.0 / h;
      for (int64_t j = 0; j < na; ++j)
        density_pair<kMask>(xi0, xi1, vi0, vi1, inv_h, aa.x0(j), aa.x1(j), aa.vp0(j), aa.vp1(j),
                            aa.m(j), s);
      DenStep st = density_step(s, h, target, h_max, iter);
      h = st.h;
      if (st.next == DenNext::Again) continue;
      if (st.next == DenNext::Fail) locals[i]->flags += 1;
      break;
    }
    density_publish(la, i, s, h, mi);
  }
}

// Flipped nest: all pending particles of the cell advance one round per
// pass over the active list, which keeps every per-particle contribution
// sequence identical to the local-active order.
template <bool kMask, class L, class A>
void density_cell_al(const L &la, int64_t nl, const A &aa, int64_t na, double target, double h_max,
                     Particle *const *locals) {
  std::vector<DAcc> acc(static_cast<size_t>(nl));
  std::vector<double> hcur(static_cast<size_t>(nl));
  std::vector<double> inv_h(static_cast<size_t>(nl));
  std::vector<char> live(static_cast<size_t>(nl), 1);
  for (int64_t i = 0; i < nl; ++i) hcur[static_cast<size_t>(i)] = la.h(i);
  int64_t pending = nl;
  for (int iter = 0; pending > 0; ++iter) {
    for (int64_t i = 0; i < nl; ++i) {
      if (!live[static_cast<size_t>(i)]) continue;
      acc[static_cast<size_t>(i)] = DAcc{};
      inv_h[static_cast<size_t>(i)] = 1.0 / hcur[static_cast<size_t>(i)];
    }
    for (int64_t j = 0; j < na; ++j) {
      double xj0 = aa.x0(j), xj1 = aa.x1(j);
      double vj0 = aa.vp0(j), vj1 = aa.vp1(j);
      double mj = aa.m(j);
      for (int64_t i = 0; i < nl; ++i) {
        if (!live[static_cast<size_t>(i)]) continue;
        density_pair<kMask>(la.x0(i), la.x1(i), la.vp0(i), la.vp1(i), inv_h[static_cast<size_t>(i)],
                            xj0, xj1, vj0, vj1, mj, acc[static_cast<size_t>(i)]);
      }
    }
    for (int64_t i = 0; i < nl; ++i) {
      if (!live[static_cast<size_t>(i)]) continue;
      DenStep st = density_step(acc[static_cast<size_t>(i)], hcur[static_cast<size_t>(i)], target,
                                h_max, iter);
      if (st.next == DenNext::Again) {
        hcur[static_cast<size_t>(i)] = st.h;
        continue;
      }
      if (st.next == DenNext::Fail) locals[i]->flags += 1;
      density_publish(la, i, acc[static_cast<size_t>(i)], hcur[static_cast<size_t>(i)], la.m(i));
      live[static_cast<size_t>(i)] = 0;
      --pending;
    }
  }
}

template <bool kMask, class L, class A>
void force_cell_la(const L &la, int64_t nl, const A &aa, int64_t na, double grav) {
  for (int64_t i = 0; i < nl; ++i) {
    FInv I = force_inv(la, i);
    FAcc s;
    s.hdt = la.h_dt(i);
    for (int64_t j = 0; j < na; ++j)
      force_pair<kMask>(I, grav, aa.x0(j), aa.x1(j), aa.vp0(j), aa.vp1(j), aa.m(j), aa.rho(j),
                        aa.p(j), aa.c(j), s);
    la.store(i, s);
  }
}

template <bool kMask, class L, class A>
void force_cell_al(const L &la, int64_t nl, const A &aa, int64_t na, double grav) {
  std::vector<FInv> inv(static_cast<size_t>(nl));
  std::vector<FAcc> acc(static_cast<size_t>(nl));
  for (int64_t i = 0; i < nl; ++i) {
    inv[static_cast<size_t>(i)] = force_inv(la, i);
    acc[static_cast<size_t>(i)].hdt = la.h_dt(i);
  }
  for (int64_t j = 0; j < na; ++j) {
    double xj0 = aa.x0(j), xj1 = aa.x1(j);
    double vj0 = aa.vp0(j), vj1 = aa.vp1(j);
    double mj = aa.m(j), rhoj = aa.rho(j), pj = aa.p(j), cj = aa.c(j);
    for (int64_t i = 0; i < nl; ++i)
      force_pair<kMask>(inv[static_cast<size_t>(i)], grav, xj0, xj1, vj0, vj1, mj, rhoj, pj, cj,
                        acc[static_cast<size_t>(i)]);
  }
  for (int64_t i = 0; i < nl; ++i) la.store(i, acc[static_cast<size_t>(i)]);
}

inline void drift_lane(double &x0, double &x1, double vp0, double vp1, int32_t frozen, double u,
                       double u_dt, double &u_pred, int32_t &moved, double dt) {
  double adv = frozen ? 0.0 : dt;
  x0 += adv * vp0;
  x1 += adv * vp1;
  u_pred = u + 0.5 * adv * u_dt;
  moved = frozen ? 0 : 1;
}

inline void kick1_lane(double &v0, double &v1, double a0, double a1, double &u, double u_dt,
                       double &dt_next, double dt) {
  double half = 0.5 * dt;
  v0 += half * a0;
  v1 += half * a1;
  u += half * u_dt;
  double vn = std::sqrt(v0 * v0 + v1 * v1);
  double an = std::sqrt(a0 * a0 + a1 * a1);
  dt_next = std::min(0.005 / (vn + 1.0e-12), std::sqrt(0.005 / (an + 1.0e-12)));
}

inline void kick2_lane(double &v0, double &v1, double a0, double a1, double dbg0, double &u,
                       double u_dt, double &u_pred, double &vp0, double &vp1, double rho, double &c,
                       double &p, double &dt_next, double h, double v_sig, double &h_dt, double dt,
                       double gamma, double cfl) {
  double half = 0.5 * dt;
  v0 += half * a0;
  v1 += half * a1;
  u += half * (u_dt + dbg0);
  if (u < 0.5 * u_pred) u = 0.5 * u_pred;
  vp0 = v0;
  vp1 = v1;
  u_pred = u;
  c = std::sqrt(gamma * (gamma - 1.0) * std::max(u, 1.0e-12));
  p = (gamma - 1.0) * rho * u;
  dt_next = std::min(dt_next, cfl * h / std::max(v_sig, c + c));
  h_dt = 0.0;
}

// Field accessors. The aos variant walks the records through the cell's
// pointer list; the soa variants read and write the gathered lanes.
struct AosRecs {
  Particle *const *r;
  double x0(int64_t i) const { return r[i]->x[0]; }
  double x1(int64_t i) const { return r[i]->x[1]; }
  double vp0(int64_t i) const { return r[i]->v_pred[0]; }
  double vp1(int64_t i) const { return r[i]->v_pred[1]; }
  double m(int64_t i) const { return r[i]->m; }
  double h(int64_t i) const { return r[i]->h; }
  double rho(int64_t i) const { return r[i]->rho; }
  double p(int64_t i) const { return r[i]->p; }
  double c(int64_t i) const { return r[i]->c; }
  double rho_dh(int64_t i) const { return r[i]->rho_dh; }
  double div_v(int64_t i) const { return r[i]->div_v; }
  double rot_v(int64_t i) const { return r[i]->rot_v; }
  double h_dt(int64_t i) const { return r[i]->h_dt; }
  void set(int64_t i, const DenOut &o) const {
    Particle &q = *r[i];
    q.h = o.h;
    q.rho = o.rho;
    q.wcount = o.wcount;
    q.rho_dh = o.rho_dh;
    q.rot_v = o.rot_v;
    q.div_v = o.div_v;
  }
  void store(int64_t i, const FAcc &s) const {
    Particle &q = *r[i];
    q.a[0] = s.a0;
    q.a[1] = s.a1;
    q.u_dt = s.udt;
    q.v_sig = s.vsig;
    q.h_dt = s.hdt;
  }
};

struct DenSoaLocal {
  double *x_, *vp_, *m_, *h_, *rho_, *wcount_, *rho_dh_, *rot_v_, *div_v_;
  explicit DenSoaLocal(const SoaView &v)
      : x_(v.field<double>(DL_X)), vp_(v.field<double>(DL_VPRED)), m_(v.field<double>(DL_M)),
        h_(v.field<double>(DL_H)), rho_(v.field<double>(DL_RHO)),
        wcount_(v.field<double>(DL_WCOUNT)), rho_dh_(v.field<double>(DL_RHODH)),
        rot_v_(v.field<double>(DL_ROTV)), div_v_(v.field<double>(DL_DIVV)) {}
  double x0(int64_t i) const { return x_[2 * i]; }
  double x1(int64_t i) const { return x_[2 * i + 1]; }
  double vp0(int64_t i) const { return vp_[2 * i]; }
  double vp1(int64_t i) const { return vp_[2 * i + 1]; }
  double m(int64_t i) const { return m_[i]; }
  double h(int64_t i) const { return h_[i]; }
  void set(int64_t i, const DenOut &o) const {
    h_[i] = o.h;
    rho_[i] = o.rho;
    wcount_[i] = o.wcount;
    rho_dh_[i] = o.rho_dh;
    rot_v_[i] = o.rot_v;
    div_v_[i] = o.div_v;
  }
};

struct DenSoaActive {
  const double *x_, *vp_, *m_;
  explicit DenSoaActive(const SoaView &v)
      : x_(v.field<double>(DA_X)), vp_(v.field<double>(DA_VPRED)), m_(v.field<double>(DA_M)) {}
  double x0(int64_t i) const { return x_[2 * i]; }
  double x1(int64_t i) const { return x_[2 * i + 1]; }
  double vp0(int64_t i) const { return vp_[2 * i]; }
  double vp1(int64_t i) const { return vp_[2 * i + 1]; }
  double m(int64_t i) const { return m_[i]; }
};

struct ForceSoaLocal {
  double *x_, *vp_, *h_, *p_, *rho_, *rho_dh_, *c_, *div_v_, *rot_v_, *a_, *udt_, *vsig_, *hdt_;
  explicit ForceSoaLocal(const SoaView &v)
      : x_(v.field<double>(FL_X)), vp_(v.field<double>(FL_VPRED)), h_(v.field<double>(FL_H)),
        p_(v.field<double>(FL_P)), rho_(v.field<double>(FL_RHO)),
        rho_dh_(v.field<double>(FL_RHODH)), c_(v.field<double>(FL_C)),
        div_v_(v.field<double>(FL_DIVV)), rot_v_(v.field<double>(FL_ROTV)),
        a_(v.field<double>(FL_A)), udt_(v.field<double>(FL_UDT)), vsig_(v.field<double>(FL_VSIG)),
        hdt_(v.field<double>(FL_HDT)) {}
  double x0(int64_t i) const { return x_[2 * i]; }
  double x1(int64_t i) const { return x_[2 * i + 1]; }
  double vp0(int64_t i) const { return vp_[2 * i]; }
  double vp1(int64_t i) const { return vp_[2 * i + 1]; }
  double h(int64_t i) const { return h_[i]; }
  double p(int64_t i) const { return p_[i]; }
  double rho(int64_t i) const { return rho_[i]; }
  double rho_dh(int64_t i) const { return rho_dh_[i]; }
  double c(int64_t i) const { return c_[i]; }
  double div_v(int64_t i) const { return div_v_[i]; }
  double rot_v(int64_t i) const { return rot_v_[i]; }
  double h_dt(int64_t i) const { return hdt_[i]; }
  void store(int64_t i, const FAcc &s) const {
    a_[2 * i] = s.a0;
    a_[2 * i + 1] = s.a1;
    udt_[i] = s.udt;
    vsig_[i] = s.vsig;
    hdt_[i] = s.hdt;
  }
};

struct ForceSoaActive {
  const double *x_, *vp_, *m_, *rho_, *p_, *c_;
  explicit ForceSoaActive(const SoaView &v)
      : x_(v.field<double>(FA_X)), vp_(v.field<double>(FA_VPRED)), m_(v.field<double>(FA_M)),
        rho_(v.field<double>(FA_RHO)), p_(v.field<double>(FA_P)), c_(v.field<double>(FA_C)) {}
  double x0(int64_t i) const { return x_[2 * i]; }
  double x1(int64_t i) const { return x_[2 * i + 1]; }
  double vp0(int64_t i) const { return vp_[2 * i]; }
  double vp1(int64_t i) const { return vp_[2 * i + 1]; }
  double m(int64_t i) const { return m_[i]; }
  double rho(int64_t i) const { return rho_[i]; }
  double p(int64_t i) const { return p_[i]; }
  double c(int64_t i) const { return c_[i]; }
};

const void *const *read_recs(Particle *const *p) {
  return reinterpret_cast<const void *const *>(p);
}

void *const *write_recs(Particle *const *p) { return reinterpret_cast<void *const *>(p); }

size_t view_bytes(const ViewDescriptor &d, int64_t count) {
  size_t total = 0;
  for (const FieldSpec &f : d.fields)
    total += (static_cast<size_t>(count) * static_cast<size_t>(f.size) + 63) & ~size_t{63};
  return total;
}

size_t max_cell_bytes(const CellGrid &g, const ViewDescriptor &d0, const ViewDescriptor &d1) {
  size_t need = 0;
  for (int ci = 0; ci < g.cells(); ++ci) {
    size_t nl = g.local[static_cast<size_t>(ci)].size();
    size_t na = g.active[static_cast<size_t>(ci)].size();
    size_t bytes = view_bytes(d0, static_cast<int64_t>(nl)) +
                   view_bytes(d1, static_cast<int64_t>(na)) + 192;
    need = std::max(need, bytes);
  }
  return need;
}

struct WorkerCtx {
  SoaArena arena;
  KernelTimes t;
  ViewDescriptor d0, d1;
};

// Distributes cells over `threads` workers. Each worker warms its arena up
// front so no gather inside the timed region ever reallocates (growth would
// move live buffers).
template <class CellFn>
KernelTimes sweep_cells(const CellGrid &g, int threads, size_t warm_bytes,
                        const ViewDescriptor &p0, const ViewDescriptor &p1, CellFn &&fn) {
  int ncells = g.cells();
  threads = std::max(1, std::min(threads, std::max(1, ncells)));
  std::atomic<int> next{0};
  auto work = [&](WorkerCtx &ctx) {
    if (warm_bytes) {
      ctx.arena.alloc(warm_bytes);
      ctx.arena.reset();
    }
    for (;;) {
      int ci = next.fetch_add(1);
      if (ci >= ncells) break;
      fn(ci, ctx);
    }
  };
  if (threads == 1) {
    WorkerCtx ctx;
    ctx.d0 = p0;
    ctx.d1 = p1;
    work(ctx);
    return ctx.t;
  }
  std::vector<WorkerCtx> ctxs(static_cast<size_t>(threads));
  for (auto &c : ctxs) {
    c.d0 = p0;
    c.d1 = p1;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads - 1));
  for (int w = 1; w < threads; ++w) pool.emplace_back([&ctxs, &work, w] { work(ctxs[static_cast<size_t>(w)]); });
  work(ctxs[0]);
  for (auto &th : pool) th.join();
  KernelTimes total;
  for (const auto &c : ctxs) {
    total.prologue_ns += c.t.prologue_ns;
    total.compute_ns += c.t.compute_ns;
    total.epilogue_ns += c.t.epilogue_ns;
  }
  return total;
}

template <bool kMask>
KernelTimes sweep_density(const CellGrid &g, const SphParams &par, Path path, Order order,
                          int threads) {
  ViewDescriptor p0 = density_local_view(0);
  ViewDescriptor p1 = density_active_view(0);
  size_t warm = path == Path::SoaView ? max_cell_bytes(g, p0, p1) : 0;
  double target = par.target_wcount;
  double h_max = g.cell_size / kSplineSupport;
  return sweep_cells(g, threads, warm, p0, p1, [&](int ci, WorkerCtx &ctx) {
    const auto &loc = g.local[static_cast<size_t>(ci)];
    const auto &act = g.active[static_cast<size_t>(ci)];
    int64_t nl = static_cast<int64_t>(loc.size());
    int64_t na = static_cast<int64_t>(act.size());
    if (!nl) return;
    Particle *const *lp = loc.data();
    Particle *const *ap = act.data();
    if (path == Path::AosBaseline) {
      int64_t t0 = now_ns();
      AosRecs la{lp}, aa{ap};
      if (order == Order::LocalActive)
        density_cell_la<kMask>(la, nl, aa, na, target, h_max, lp);
      else
        density_cell_al<kMask>(la, nl, aa, na, target, h_max, lp);
      ctx.t.compute_ns += now_ns() - t0;
    } else {
      ctx.d0.count = nl;
      ctx.d1.count = na;
      ctx.arena.reset();
      int64_t t0 = now_ns();
      SoaView lv = gather_indirect(read_recs(lp), ctx.d0, ctx.arena);
      SoaView av = gather_indirect(read_recs(ap), ctx.d1, ctx.arena);
      int64_t t1 = now_ns();
      DenSoaLocal la(lv);
      DenSoaActive aa(av);
      if (order == Order::LocalActive)
        density_cell_la<kMask>(la, nl, aa, na, target, h_max, lp);
      else
        density_cell_al<kMask>(la, nl, aa, na, target, h_max, lp);
      int64_t t2 = now_ns();
      scatter_indirect(lv, ctx.d0, write_recs(lp));
      int64_t t3 = now_ns();
      ctx.t.prologue_ns += t1 - t0;
      ctx.t.compute_ns += t2 - t1;
      ctx.t.epilogue_ns += t3 - t2;
    }
  });
}

template <bool kMask>
KernelTimes sweep_force(const CellGrid &g, const SphParams &par, Path path, Order order,
                        int threads) {
  ViewDescriptor p0 = force_local_view(0);
  ViewDescriptor p1 = force_active_view(0);
  size_t warm = path == Path::SoaView ? max_cell_bytes(g, p0, p1) : 0;
  double grav = par.grav;
  return sweep_cells(g, threads, warm, p0, p1, [&](int ci, WorkerCtx &ctx) {
    const auto &loc = g.local[static_cast<size_t>(ci)];
    const auto &act = g.active[static_cast<size_t>(ci)];
    int64_t nl = static_cast<int64_t>(loc.size());
    int64_t na = static_cast<int64_t>(act.size());
    if (!nl) return;
    Particle *const *lp = loc.data();
    Particle *const *ap = act.data();
    if (path == Path::AosBaseline) {
      int64_t t0 = now_ns();
      AosRecs la{lp}, aa{ap};
      if (order == Order::LocalActive)
        force_cell_la<kMask>(la, nl, aa, na, grav);
      else
        force_cell_al<kMask>(la, nl, aa, na, grav);
      ctx.t.compute_ns += now_ns() - t0;
    } else {
      ctx.d0.count = nl;
      ctx.d1.count = na;
      ctx.arena.reset();
      int64_t t0 = now_ns();
      SoaView lv = gather_indirect(read_recs(lp), ctx.d0, ctx.arena);
      SoaView av = gather_indirect(read_recs(ap), ctx.d1, ctx.arena);
      int64_t t1 = now_ns();
      ForceSoaLocal la(lv);
      ForceSoaActive aa(av);
      if (order == Order::LocalActive)
        force_cell_la<kMask>(la, nl, aa, na, grav);
      else
        force_cell_al<kMask>(la, nl, aa, na, grav);
      int64_t t2 = now_ns();
      scatter_indirect(lv, ctx.d0, write_recs(lp));
      int64_t t3 = now_ns();
      ctx.t.prologue_ns += t1 - t0;
      ctx.t.compute_ns += t2 - t1;
      ctx.t.epilogue_ns += t3 - t2;
    }
  });
}

KernelTimes sweep_linear(KernelId k, const CellGrid &g, const SphParams &par, Path path,
                         int threads) {
  ViewDescriptor p0 = k == KernelId::Drift    ? drift_view(0)
                      : k == KernelId::Kick1  ? kick1_view(0)
                                              : kick2_view(0);
  ViewDescriptor p1;
  size_t warm = 0;
  if (path == Path::SoaView) {
    for (int ci = 0; ci < g.cells(); ++ci) {
      size_t nl = g.local[static_cast<size_t>(ci)].size();
      warm = std::max(warm, view_bytes(p0, static_cast<int64_t>(nl)) + 128);
    }
  }
  return sweep_cells(g, threads, warm, p0, p1, [&, k](int ci, WorkerCtx &ctx) {
    const auto &loc = g.local[static_cast<size_t>(ci)];
    int64_t nl = static_cast<int64_t>(loc.size());
    if (!nl) return;
    Particle *const *lp = loc.data();
    if (path == Path::AosBaseline) {
      int64_t t0 = now_ns();
      switch (k) {
      case KernelId::Drift:
        for (int64_t i = 0; i < nl; ++i) drift_one(*lp[i], par);
        break;
      case KernelId::Kick1:
        for (int64_t i = 0; i < nl; ++i) kick1_one(*lp[i], par);
        break;
      default:
        for (int64_t i = 0; i < nl; ++i) kick2_one(*lp[i], par);
        break;
      }
      ctx.t.compute_ns += now_ns() - t0;
      return;
    }
    ctx.d0.count = nl;
    ctx.arena.reset();
    int64_t t0 = now_ns();
    SoaView v = gather_indirect(read_recs(lp), ctx.d0, ctx.arena);
    int64_t t1 = now_ns();
    switch (k) {
    case KernelId::Drift: {
      double *x = v.field<double>(DR_X);
      const double *vp = v.field<double>(DR_VPRED);
      const int32_t *frozen = v.field<int32_t>(DR_FROZEN);
      const double *u = v.field<double>(DR_U);
      const double *udt = v.field<double>(DR_UDT);
      double *upred = v.field<double>(DR_UPRED);
      int32_t *moved = v.field<int32_t>(DR_MOVED);
      for (int64_t i = 0; i < nl; ++i)
        drift_lane(x[2 * i], x[2 * i + 1], vp[2 * i], vp[2 * i + 1], frozen[i], u[i], udt[i],
                   upred[i], moved[i], par.dt);
      break;
    }
    case KernelId::Kick1: {
      double *vv = v.field<double>(K1_V);
      const double *a = v.field<double>(K1_A);
      double *u = v.field<double>(K1_U);
      const double *udt = v.field<double>(K1_UDT);
      double *dtn = v.field<double>(K1_DTNEXT);
      for (int64_t i = 0; i < nl; ++i)
        kick1_lane(vv[2 * i], vv[2 * i + 1], a[2 * i], a[2 * i + 1], u[i], udt[i], dtn[i], par.dt);
      break;
    }
    default: {
      double *vv = v.field<double>(K2_V);
      const double *a = v.field<double>(K2_A);
      const double *dbg = v.field<double>(K2_DBG);
      double *u = v.field<double>(K2_U);
      const double *udt = v.field<double>(K2_UDT);
      double *upred = v.field<double>(K2_UPRED);
      const double *rho = v.field<double>(K2_RHO);
      double *dtn = v.field<double>(K2_DTNEXT);
      const double *h = v.field<double>(K2_H);
      const double *vsig = v.field<double>(K2_VSIG);
      double *c = v.field<double>(K2_C);
      double *vp = v.field<double>(K2_VPRED);
      double *p = v.field<double>(K2_P);
      double *hdt = v.field<double>(K2_HDT);
      for (int64_t i = 0; i < nl; ++i)
        kick2_lane(vv[2 * i], vv[2 * i + 1], a[2 * i], a[2 * i + 1], dbg[2 * i], u[i], udt[i],
                   upred[i], vp[2 * i], vp[2 * i + 1], rho[i], c[i], p[i], dtn[i], h[i], vsig[i],
                   hdt[i], par.dt, par.gamma, par.cfl);
      break;
    }
    }
    int64_t t2 = now_ns();
    scatter_indirect(v, ctx.d0, write_recs(lp));
    int64_t t3 = now_ns();
    ctx.t.prologue_ns += t1 - t0;
    ctx.t.compute_ns += t2 - t1;
    ctx.t.epilogue_ns += t3 - t2;
  });
}

} // namespace

const char *kernel_name(KernelId k) {
  switch (k) {
  case KernelId::Density:
    return "density";
  case KernelId::Force:
    return "force";
  case KernelId::Drift:
    return "drift";
  case KernelId::Kick1:
    return "kick1";
  default:
    return "kick2";
  }
}

ViewDescriptor density_local_view(int64_t count) {
  ViewDescriptor d;
  d.record_size = kRecord;
  d.count = count;
  d.fields = {
      fspec(offsetof(Particle, x), 16, Dir::In),
      fspec(offsetof(Particle, v_pred), 16, Dir::In),
      fspec(offsetof(Particle, m), 8, Dir::In),
      fspec(offsetof(Particle, h), 8, Dir::InOut),
      fspec(offsetof(Particle, rho), 8, Dir::InOut),
      fspec(offsetof(Particle, wcount), 8, Dir::InOut),
      fspec(offsetof(Particle, rho_dh), 8, Dir::InOut),
      fspec(offsetof(Particle, rot_v), 8, Dir::InOut),
      fspec(offsetof(Particle, div_v), 8, Dir::InOut),
  };
  return d;
}

ViewDescriptor density_active_view(int64_t count) {
  ViewDescriptor d;
  d.record_size = kRecord;
  d.count = count;
  d.fields = {
      fspec(offsetof(Particle, x), 16, Dir::In),
      fspec(offsetof(Particle, v_pred), 16, Dir::In),
      fspec(offsetof(Particle, m), 8, Dir::In),
  };
  return d;
}

ViewDescriptor force_local_view(int64_t count) {
  ViewDescriptor d;
  d.record_size = kRecord;
  d.count = count;
  d.fields = {
      fspec(offsetof(Particle, x), 16, Dir::In),
      fspec(offsetof(Particle, v_pred), 16, Dir::In),
      fspec(offsetof(Particle, h), 8, Dir::In),
      fspec(offsetof(Particle, p), 8, Dir::In),
      fspec(offsetof(Particle, rho), 8, Dir::In),
      fspec(offsetof(Particle, rho_dh), 8, Dir::In),
      fspec(offsetof(Particle, c), 8, Dir::In),
      fspec(offsetof(Particle, div_v), 8, Dir::In),
      fspec(offsetof(Particle, rot_v), 8, Dir::In),
      fspec(offsetof(Particle, a), 16, Dir::InOut),
      fspec(offsetof(Particle, u_dt), 8, Dir::InOut),
      fspec(offsetof(Particle, v_sig), 8, Dir::InOut),
      fspec(offsetof(Particle, h_dt), 8, Dir::InOut),
  };
  return d;
}

ViewDescriptor force_active_view(int64_t count) {
  ViewDescriptor d;
  d.record_size = kRecord;
  d.count = count;
  d.fields = {
      fspec(offsetof(Particle, x), 16, Dir::In),
      fspec(offsetof(Particle, v_pred), 16, Dir::In),
      fspec(offsetof(Particle, m), 8, Dir::In),
      fspec(offsetof(Particle, rho), 8, Dir::In),
      fspec(offsetof(Particle, p), 8, Dir::In),
      fspec(offsetof(Particle, c), 8, Dir::In),
  };
  return d;
}

ViewDescriptor drift_view(int64_t count) {
  ViewDescriptor d;
  d.record_size = kRecord;
  d.count = count;
  d.fields = {
      fspec(offsetof(Particle, x), 16, Dir::InOut),
      fspec(offsetof(Particle, v_pred), 16, Dir::In),
      fspec(offsetof(Particle, frozen), 4, Dir::In),
      fspec(offsetof(Particle, u), 8, Dir::In),
      fspec(offsetof(Particle, u_dt), 8, Dir::In),
      fspec(offsetof(Particle, u_pred), 8, Dir::Out),
      fspec(offsetof(Particle, moved), 4, Dir::Out),
  };
  return d;
}

ViewDescriptor kick1_view(int64_t count) {
  ViewDescriptor d;
  d.record_size = kRecord;
  d.count = count;
  d.fields = {
      fspec(offsetof(Particle, v), 16, Dir::InOut),
      fspec(offsetof(Particle, a), 16, Dir::In),
      fspec(offsetof(Particle, u), 8, Dir::InOut),
      fspec(offsetof(Particle, u_dt), 8, Dir::In),
      fspec(offsetof(Particle, dt_next), 8, Dir::Out),
  };
  return d;
}

ViewDescriptor kick2_view(int64_t count) {
  ViewDescriptor d;
  d.record_size = kRecord;
  d.count = count;
  d.fields = {
      fspec(offsetof(Particle, v), 16, Dir::InOut),
      fspec(offsetof(Particle, a), 16, Dir::In),
      fspec(offsetof(Particle, dbg), 16, Dir::In),
      fspec(offsetof(Particle, u), 8, Dir::InOut),
      fspec(offsetof(Particle, u_dt), 8, Dir::In),
      fspec(offsetof(Particle, u_pred), 8, Dir::InOut),
      fspec(offsetof(Particle, rho), 8, Dir::In),
      fspec(offsetof(Particle, dt_next), 8, Dir::InOut),
      fspec(offsetof(Particle, h), 8, Dir::In),
      fspec(offsetof(Particle, v_sig), 8, Dir::In),
      fspec(offsetof(Particle, c), 8, Dir::InOut),
      fspec(offsetof(Particle, v_pred), 16, Dir::Out),
      fspec(offsetof(Particle, p), 8, Dir::Out),
      fspec(offsetof(Particle, h_dt), 8, Dir::Out),
  };
  return d;
}

KernelTimes run_sweep(KernelId k, const CellGrid &grid, const SphParams &par, Path path,
                      Order order, Guard guard, int threads) {
  bool pair_kernel = k == KernelId::Density || k == KernelId::Force;
  if (pair_kernel && order == Order::ActiveLocal) threads = 1;
  if (k == KernelId::Density)
    return guard == Guard::Mask ? sweep_density<true>(grid, par, path, order, threads)
                                : sweep_density<false>(grid, par, path, order, threads);
  if (k == KernelId::Force)
    return guard == Guard::Mask ? sweep_force<true>(grid, par, path, order, threads)
                                : sweep_force<false>(grid, par, path, order, threads);
  return sweep_linear(k, grid, par, path, threads);
}

int64_t update_count(const CellGrid &grid) {
  int64_t n = 0;
  for (const auto &cell : grid.local) n += static_cast<int64_t>(cell.size());
  return n;
}

void drift_one(Particle &p, const SphParams &par) {
  drift_lane(p.x[0], p.x[1], p.v_pred[0], p.v_pred[1], p.frozen, p.u, p.u_dt, p.u_pred, p.moved,
             par.dt);
}

void kick1_one(Particle &p, const SphParams &par) {
  kick1_lane(p.v[0], p.v[1], p.a[0], p.a[1], p.u, p.u_dt, p.dt_next, par.dt);
}

void kick2_one(Particle &p, const SphParams &par) {
  kick2_lane(p.v[0], p.v[1], p.a[0], p.a[1], p.dbg[0], p.u, p.u_dt, p.u_pred, p.v_pred[0],
             p.v_pred[1], p.rho, p.c, p.p, p.dt_next, p.h, p.v_sig, p.h_dt, par.dt, par.gamma,
             par.cfl);
}

} // namespace soaview::sph
