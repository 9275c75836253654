#pragma once

// Thin wrapper around FFTW's real-to-real transforms (DST-I / DCT-I) on
// column-major 2-D blocks. Plans are created once per shape and cached;
// execution goes through the new-array interface so callers own their
// buffers and concurrent calls never share scratch space.

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace sib::detail {

enum class R2RKind { dst1, dct1 };

class PlanCache {
public:
  static PlanCache &instance() {
    static PlanCache cache;
    return cache;
  }

  PlanCache(const PlanCache &) = delete;
  PlanCache &operator=(const PlanCache &) = delete;

  /// Plan for `channels` interleaved 2-D transforms of an nx-by-ny
  /// column-major array (x index fastest).
  fftw_plan get(R2RKind kind, int nx, int ny, int channels) {
    const auto key = std::make_tuple(static_cast<int>(kind), nx, ny, channels);
    std::lock_guard<std::mutex> lock(mutex_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    double *scratch = fftw_alloc_real(static_cast<size_t>(nx) * ny * channels);
    if (scratch == nullptr) throw std::bad_alloc();
    // FFTW arrays are row-major, so the slow dimension comes first.
    int n[2] = {ny, nx};
    const fftw_r2r_kind k = kind == R2RKind::dst1 ? FFTW_RODFT00 : FFTW_REDFT00;
    fftw_r2r_kind kinds[2] = {k, k};
    fftw_plan plan = fftw_plan_many_r2r(2, n, channels, scratch, nullptr, channels, 1, scratch,
                                        nullptr, channels, 1, kinds,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
    if (plan == nullptr) throw std::runtime_error("fftw: failed to create r2r plan");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto &[key, plan] : plans_) fftw_destroy_plan(plan);
  }

private:
  PlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<int, int, int, int>, fftw_plan> plans_;
};

/// In-place unnormalized 2-D transform. `data` holds nx*ny*channels doubles,
/// channels interleaved (channels == 2 is a std::complex<double> array).
inline void r2r_2d(R2RKind kind, double *data, int nx, int ny, int channels) {
  fftw_plan plan = PlanCache::instance().get(kind, nx, ny, channels);
  fftw_execute_r2r(plan, data, data);
}

}  // namespace sib::detail
