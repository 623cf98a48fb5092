#pragma once

namespace advtex {

/// Keeps freed tensor buffers in the heap instead of returning them to the OS.
/// Graph building allocates and frees the same large blocks per sample, and
/// with default glibc thresholds that turns into mmap/munmap churn. No-op on
/// other C libraries.
void tune_allocator();

}  // namespace advtex
