#include "soaview/layout.hpp"

#include <algorithm>
#include <cstring>

namespace soaview {

// Growing moves the block, which invalidates pointers handed out earlier.
// gather() therefore sizes each view with a single alloc call; direct users
// should warm the arena up once and rely on reset() afterwards.
void *SoaArena::alloc(size_t bytes, size_t align) {
  size_t start = (used_ + align - 1) & ~(align - 1);
  if (start + bytes > cap_) {
    size_t cap = std::max<size_t>(4096, cap_ * 2);
    while (cap < start + bytes) cap *= 2;
    mem_ = std::make_unique<std::byte[]>(cap + 64);
    cap_ = cap;
  }
  std::byte *base = mem_.get();
  size_t skew = reinterpret_cast<uintptr_t>(base) & 63;
  if (skew) base += 64 - skew;
  used_ = start + bytes;
  return base + start;
}

namespace {

size_t round64(size_t n) { return (n + 63) & ~size_t{63}; }

SoaView alloc_buffers(const ViewDescriptor &d, SoaArena &arena) {
  size_t total = 0;
  for (const FieldSpec &f : d.fields) total += round64(static_cast<size_t>(d.count) * f.size);
  std::byte *block = static_cast<std::byte *>(arena.alloc(total));
  SoaView v;
  v.buffers.reserve(d.fields.size());
  for (const FieldSpec &f : d.fields) {
    v.buffers.push_back(block);
    block += round64(static_cast<size_t>(d.count) * f.size);
  }
  return v;
}

} // namespace

SoaView gather(const void *base, const ViewDescriptor &d, SoaArena &arena) {
  SoaView v = alloc_buffers(d, arena);
  const std::byte *rec = static_cast<const std::byte *>(base);
  for (size_t fi = 0; fi < d.fields.size(); ++fi) {
    const FieldSpec &f = d.fields[fi];
    if (f.dir == Dir::Out) continue;
    std::byte *dst = v.buffers[fi];
    const std::byte *src = rec + f.offset;
    for (int64_t i = 0; i < d.count; ++i) {
      std::memcpy(dst, src, f.size);
      dst += f.size;
      src += d.record_size;
    }
  }
  return v;
}

SoaView gather_indirect(const void *const *records, const ViewDescriptor &d, SoaArena &arena) {
  SoaView v = alloc_buffers(d, arena);
  for (size_t fi = 0; fi < d.fields.size(); ++fi) {
    const FieldSpec &f = d.fields[fi];
    if (f.dir == Dir::Out) continue;
    std::byte *dst = v.buffers[fi];
    for (int64_t i = 0; i < d.count; ++i) {
      std::memcpy(dst, static_cast<const std::byte *>(records[i]) + f.offset, f.size);
      dst += f.size;
    }
  }
  return v;
}

void scatter(const SoaView &v, const ViewDescriptor &d, void *base) {
  std::byte *rec = static_cast<std::byte *>(base);
  for (size_t fi = 0; fi < d.fields.size(); ++fi) {
    const FieldSpec &f = d.fields[fi];
    if (f.dir == Dir::In) continue;
    const std::byte *src = v.buffers[fi];
    std::byte *dst = rec + f.offset;
    for (int64_t i = 0; i < d.count; ++i) {
      std::memcpy(dst, src, f.size);
      src += f.size;
      dst += d.record_size;
    }
  }
}

void scatter_indirect(const SoaView &v, const ViewDescriptor &d, void *const *records) {
  for (size_t fi = 0; fi < d.fields.size(); ++fi) {
    const FieldSpec &f = d.fields[fi];
    if (f.dir == Dir::In) continue;
    const std::byte *src = v.buffers[fi];
    for (int64_t i = 0; i < d.count; ++i) {
      std::memcpy(static_cast<std::byte *>(records[i]) + f.offset, src, f.size);
      src += f.size;
    }
  }
}

} // namespace soaview
