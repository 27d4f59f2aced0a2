#pragma once

#include <cstdint>

namespace epsfbm {

/// Counter-based splittable random stream.
///
/// The generator is a splitmix64 walk whose starting point is a hash of
/// (seed, stream_id). Identical (seed, stream_id) pairs reproduce the same
/// draw sequence bit for bit; distinct stream ids give statistically
/// independent streams, so replications and per-level refinements can each
/// own a stream without coordination.
class RngStream {
 public:
  RngStream() : RngStream(0, 0) {}
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform on (0,1]; never returns 0, so log() is safe.
  double uniform01();

  /// Standard normal draw (ziggurat).
  double normal();

  /// Derive an independent child stream. The child depends only on
  /// (seed, stream_id, child_id), not on how much this stream has consumed.
  RngStream substream(std::uint64_t child_id) const;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t state_ = 0;
};

}  // namespace epsfbm
