#pragma once

namespace hypirb {

/// Keeps freed tensor buffers in the heap instead of returning them to the
/// OS. Training allocates and frees the same large sizes every step, and the
/// default glibc thresholds turn each of those into an mmap/munmap pair.
/// No-op on other allocators.
void tune_allocator();

}  // namespace hypirb
