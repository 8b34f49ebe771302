#pragma once

#include <array>
#include <cstdint>

namespace qsdlab {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Identifies which part of a run consumes a stream. Together with a sub id
/// (e.g. the position of a gamma value in a sweep) and a stream index
/// (particle or replicate), it selects a disjoint Philox counter range:
///
///   key      = (seed & 0xffffffff, seed >> 32)
///   counter  = (block_lo, block_hi, stream_index, component << 20 | sub_id)
///
/// so adding replicates or particles never changes the draws of existing ones.
enum class StreamComponent : std::uint32_t {
  kernels = 1,
  fv_particle = 2,
  fv_resample = 3,
  fv_init = 4,
  exit_law = 5,
  coupling = 6,
  gibbs = 7,
  trajectory = 8,
  sampling = 9,
};

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamComponent component, std::uint32_t sub_id,
               std::uint32_t stream_index);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal by Box-Muller; draws come in cached pairs.
  double normal();

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_index_;
  std::uint32_t tag_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int cursor_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace qsdlab
