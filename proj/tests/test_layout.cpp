#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "soaview/layout.hpp"

#include <cstring>
#include <random>

using namespace soaview;

namespace {

struct Particle {
  double x;
  double v;
  int64_t id;
  int32_t live;
};

ViewDescriptor particle_desc(int64_t n) {
  ViewDescriptor d;
  d.record_size = sizeof(Particle);
  d.count = n;
  d.fields = {
      {offsetof(Particle, x), 8, Dir::InOut},
      {offsetof(Particle, v), 8, Dir::In},
      {offsetof(Particle, id), 8, Dir::Out},
      {offsetof(Particle, live), 4, Dir::In},
  };
  return d;
}

std::vector<Particle> make_particles(int64_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  std::vector<Particle> ps(n);
  for (int64_t i = 0; i < n; ++i)
    ps[i] = {dist(rng), dist(rng), static_cast<int64_t>(rng() % 1000),
             static_cast<int32_t>(rng() & 1)};
  return ps;
}

} // namespace

TEST_CASE("arena returns 64-byte aligned blocks and recycles on reset") {
  SoaArena a;
  void *p1 = a.alloc(100);
  CHECK(reinterpret_cast<uintptr_t>(p1) % 64 == 0);
  void *p2 = a.alloc(1);
  CHECK(reinterpret_cast<uintptr_t>(p2) % 64 == 0);
  CHECK(p2 != p1);
  CHECK(a.used() >= 101);
  size_t cap = a.capacity();
  a.reset();
  CHECK(a.used() == 0);
  CHECK(a.capacity() == cap);
  void *p3 = a.alloc(100);
  CHECK(p3 == p1);
  void *p4 = a.alloc(8, 8);
  CHECK(reinterpret_cast<uintptr_t>(p4) % 8 == 0);
}

TEST_CASE("arena growth is geometric") {
  SoaArena a;
  a.alloc(10);
  size_t c0 = a.capacity();
  a.alloc(c0 * 3);
  CHECK(a.capacity() >= c0 * 3);
  a.reset();
  a.alloc(c0 * 3 + 10);
  CHECK(a.used() == c0 * 3 + 10);
}

TEST_CASE("gather copies in fields and scatter writes back out fields") {
  const int64_t n = 33;
  auto ps = make_particles(n, 1);
  auto orig = ps;
  ViewDescriptor d = particle_desc(n);
  SoaArena arena;
  SoaView v = gather(ps.data(), d, arena);

  double *x = v.field<double>(0);
  const double *vel = v.field<double>(1);
  int64_t *id = v.field<int64_t>(2);
  const int32_t *live = v.field<int32_t>(3);

  CHECK(reinterpret_cast<uintptr_t>(x) % 64 == 0);
  CHECK(reinterpret_cast<uintptr_t>(vel) % 64 == 0);
  CHECK(reinterpret_cast<uintptr_t>(id) % 64 == 0);
  CHECK(reinterpret_cast<uintptr_t>(live) % 64 == 0);

  for (int64_t i = 0; i < n; ++i) {
    CHECK(x[i] == orig[i].x);
    CHECK(vel[i] == orig[i].v);
    CHECK(live[i] == orig[i].live);
  }

  for (int64_t i = 0; i < n; ++i) {
    x[i] += vel[i];
    id[i] = 2 * i;
  }
  scatter(v, d, ps.data());

  for (int64_t i = 0; i < n; ++i) {
    CHECK(ps[i].x == orig[i].x + orig[i].v);
    CHECK(ps[i].v == orig[i].v);
    CHECK(ps[i].id == 2 * i);
    CHECK(ps[i].live == orig[i].live);
  }
}

TEST_CASE("round trip without kernel writes is byte identical") {
  const int64_t n = 17;
  auto ps = make_particles(n, 2);
  auto orig = ps;
  ViewDescriptor d = particle_desc(n);
  for (auto &f : d.fields) f.dir = Dir::InOut;
  SoaArena arena;
  SoaView v = gather(ps.data(), d, arena);
  scatter(v, d, ps.data());
  CHECK(std::memcmp(ps.data(), orig.data(), n * sizeof(Particle)) == 0);
}

TEST_CASE("indirect gather and scatter follow the pointer table") {
  const int64_t n = 12;
  auto storage = make_particles(n, 3);
  auto orig = storage;
  std::vector<const void *> refs;
  for (int64_t i = n - 1; i >= 0; --i) refs.push_back(&storage[i]);

  ViewDescriptor d = particle_desc(n);
  SoaArena arena;
  SoaView v = gather_indirect(refs.data(), d, arena);
  for (int64_t i = 0; i < n; ++i) CHECK(v.field<double>(0)[i] == orig[n - 1 - i].x);

  for (int64_t i = 0; i < n; ++i) {
    v.field<double>(0)[i] = static_cast<double>(i);
    v.field<int64_t>(2)[i] = i;
  }
  std::vector<void *> wrefs;
  for (int64_t i = n - 1; i >= 0; --i) wrefs.push_back(&storage[i]);
  scatter_indirect(v, d, wrefs.data());
  for (int64_t i = 0; i < n; ++i) {
    CHECK(storage[n - 1 - i].x == static_cast<double>(i));
    CHECK(storage[n - 1 - i].id == i);
    CHECK(storage[n - 1 - i].v == orig[n - 1 - i].v);
  }
}

TEST_CASE("steady state gathers reuse arena memory") {
  const int64_t n = 50;
  auto ps = make_particles(n, 4);
  ViewDescriptor d = particle_desc(n);
  SoaArena arena;
  SoaView v0 = gather(ps.data(), d, arena);
  size_t cap = arena.capacity();
  std::byte *first = v0.buffers[0];
  for (int pass = 0; pass < 10; ++pass) {
    arena.reset();
    SoaView v = gather(ps.data(), d, arena);
    CHECK(v.buffers[0] == first);
    CHECK(arena.capacity() == cap);
  }
}

TEST_CASE("empty views are valid") {
  ViewDescriptor d = particle_desc(0);
  SoaArena arena;
  std::vector<Particle> none;
  SoaView v = gather(none.data(), d, arena);
  CHECK(v.buffers.size() == 4);
  scatter(v, d, none.data());
}
