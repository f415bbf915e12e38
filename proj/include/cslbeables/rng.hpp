#pragma once

#include <array>
#include <cstdint>

namespace csl {

// Philox4x32-10 counter-based generator.  Stream splitting rule:
//   key     = 64-bit root seed,
//   counter = (stream id << 64) | block index,
//   stream  = (purpose tag << 48) | trajectory index.
// Every (seed, purpose, index) triple therefore owns an independent stream,
// and results do not depend on how trajectories are scheduled over workers.
enum class StreamPurpose : std::uint64_t {
    CollapseNoise = 1, // dB field increments
    LangevinNoise = 2, // dw in position/Nelson steps
    MomentumNoise = 3, // dw in momentum steps
    JumpDraws     = 4, // categorical draws of the jump sampler
    InitialDraw   = 5, // initial condition sampling
    Scratch       = 6,
};

inline std::uint64_t stream_id(StreamPurpose purpose, std::uint64_t index) {
    return (static_cast<std::uint64_t>(purpose) << 48) | (index & 0xffffffffffffULL);
}

class PhiloxRng {
public:
    PhiloxRng(std::uint64_t seed, std::uint64_t stream);

    std::uint32_t next_u32();
    std::uint64_t next_u64();
    double next_uniform();  // [0, 1)
    double next_gaussian(); // standard normal, Box-Muller with one cached value

    // number of 32-bit words consumed so far (diagnostic; lets tests assert
    // that a code path draws nothing)
    std::uint64_t words_consumed() const { return words_; }

    // raw block function, exposed for known-answer tests
    static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& counter,
                                              const std::array<std::uint32_t, 2>& key);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int buffer_pos_ = 4;
    std::uint64_t words_ = 0;
    bool has_cached_gaussian_ = false;
    double cached_gaussian_ = 0.0;
};

} // namespace csl
