#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace sbice {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// The 128-bit counter is split into a 64-bit stream word and a 64-bit block
/// index, so every stream id owns a disjoint counter range under one key.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t key, std::uint64_t stream_word);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();

  /// Standard normal via the Marsaglia polar method.
  double normal();

  /// Raw 10-round bijection; exposed for known-answer tests.
  static Block block(Block counter, Key key);

 private:
  void refill();

  Key key_;
  std::uint64_t stream_word_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int buffered_ = 0;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Immutable handle naming one substream of a master seed.
///
/// Drawing never mutates a RandomStream; engine() returns a fresh generator
/// positioned at the start of the stream, and substream() derives child
/// streams deterministically from (stream_id, index).
class RandomStream {
 public:
  constexpr explicit RandomStream(std::uint64_t master_seed,
                                  std::uint64_t stream_id = 0)
      : master_seed_(master_seed), stream_id_(stream_id) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  RandomStream substream(std::uint64_t index) const;
  RandomStream substream(std::uint64_t a, std::uint64_t b) const {
    return substream(a).substream(b);
  }

  Philox4x32 engine() const { return Philox4x32(master_seed_, stream_id_); }

  /// A 64-bit seed for consumers outside this process (external workers).
  std::uint64_t derived_seed() const;

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_id_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace sbice
