#include "epsfbm/rng.hpp"

#include <cmath>
#include <mutex>

namespace epsfbm {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// Ziggurat tables for the standard normal, 128 layers (Marsaglia & Tsang).
// Layer index, mantissa and sign are taken from disjoint bits of one u64.
struct ZigguratTables {
  std::int64_t kn[128];
  double wn[128];
  double fn[128];
  ZigguratTables() {
    const double m = 9007199254740992.0;  // 2^53
    double dn = 3.442619855899;
    const double tn0 = dn;
    const double vn = 9.91256303526217e-3;

    double q = vn / std::exp(-0.5 * dn * dn);
    kn[0] = static_cast<std::int64_t>((dn / q) * m);
    kn[1] = 0;
    wn[0] = q / m;
    wn[127] = dn / m;
    fn[0] = 1.0;
    fn[127] = std::exp(-0.5 * dn * dn);
    double tn = tn0;
    for (int i = 126; i >= 1; --i) {
      dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
      kn[i + 1] = static_cast<std::int64_t>((dn / tn) * m);
      tn = dn;
      fn[i] = std::exp(-0.5 * dn * dn);
      wn[i] = dn / m;
    }
  }
};

const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

constexpr double kZigR = 3.442619855899;

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id) {
  state_ = mix64(seed + kGamma) ^ mix64(mix64(stream_id + 0x6A09E667F3BCC909ULL));
}

std::uint64_t RngStream::next_u64() {
  state_ += kGamma;
  return mix64(state_);
}

double RngStream::uniform01() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
}

double RngStream::normal() {
  const ZigguratTables& t = ziggurat();
  for (;;) {
    const std::uint64_t u = next_u64();
    const int iz = static_cast<int>(u & 127);
    const bool neg = (u >> 7) & 1;
    const std::int64_t hz = static_cast<std::int64_t>(u >> 11);  // 53 bits
    const double x = static_cast<double>(hz) * t.wn[iz];
    if (hz < t.kn[iz]) return neg ? -x : x;
    if (iz == 0) {
      // Tail beyond R, Marsaglia's exact method.
      double xx, yy;
      do {
        xx = -std::log(uniform01()) / kZigR;
        yy = -std::log(uniform01());
      } while (yy + yy < xx * xx);
      return neg ? -(kZigR + xx) : (kZigR + xx);
    }
    if (t.fn[iz] + uniform01() * (t.fn[iz - 1] - t.fn[iz]) <
        std::exp(-0.5 * x * x)) {
      return neg ? -x : x;
    }
  }
}

RngStream RngStream::substream(std::uint64_t child_id) const {
  const std::uint64_t child_stream =
      mix64(stream_ * 0xD1342543DE82EF95ULL + child_id + 1);
  return RngStream(seed_, child_stream);
}

}  // namespace epsfbm
