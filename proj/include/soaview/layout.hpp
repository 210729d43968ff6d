#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace soaview {

/// Type-erased byte-level gather/scatter engine. This is the runtime the
/// benchmark drives directly; it mirrors what the compiler emits for
/// rewritten loops, but works on raw record bytes via descriptors instead
/// of generated code.

enum class Dir { In, Out, InOut };

struct FieldSpec {
  int offset = 0; // byte offset within the record
  int size = 0;   // byte size of the field
  Dir dir = Dir::In;
};

struct ViewDescriptor {
  int record_size = 0;
  std::vector<FieldSpec> fields;
  int64_t count = 0;
};

// Monotonically growing bump allocator. reset() recycles the memory without
// releasing it, so steady-state gathers allocate nothing. Intended use is
// one arena per worker thread.
class SoaArena {
public:
  void *alloc(size_t bytes, size_t align = 64);
  void reset() { used_ = 0; }
  size_t capacity() const { return cap_; }
  size_t used() const { return used_; }

private:
  std::unique_ptr<std::byte[]> mem_;
  size_t cap_ = 0;
  size_t used_ = 0;
};

// One 64-byte aligned buffer per descriptor field, each count*size bytes.
struct SoaView {
  std::vector<std::byte *> buffers;
  template <typename T> T *field(int i) const { return reinterpret_cast<T *>(buffers[i]); }
};

// AoS -> SoA over contiguous records starting at `base`. In and InOut
// fields are copied; Out-only buffers are allocated but their contents are
// unspecified until the kernel writes them.
SoaView gather(const void *base, const ViewDescriptor &d, SoaArena &arena);

// Same, with one pointer per record (pointer-list storage).
SoaView gather_indirect(const void *const *records, const ViewDescriptor &d, SoaArena &arena);

// SoA -> AoS write-back of Out and InOut fields. In-only fields and all
// bytes outside the descriptor are left untouched.
void scatter(const SoaView &v, const ViewDescriptor &d, void *base);
void scatter_indirect(const SoaView &v, const ViewDescriptor &d, void *const *records);

} // namespace soaview
