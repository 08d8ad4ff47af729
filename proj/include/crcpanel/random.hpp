#pragma once

#include <array>
#include <cstdint>

namespace crcpanel {

// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

// Counter-based uniform stream.
//
// Key = the 64-bit seed (low word, high word). Counter words 2-3 hold the
// 64-bit stream id (the replication index); words 0-1 hold a 64-bit block
// counter starting at 0. Each block yields two 64-bit words, consumed in
// order (w0:w1, then w2:w3). Streams with distinct ids never share a
// counter, so replications can be generated in any order or in parallel.
class CounterStream {
public:
    CounterStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    // (k + 0.5) * 2^-53 for the top 53 bits k: strictly inside (0, 1).
    double uniform();

    // Phi^-1(uniform()).
    double normal();

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_id_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
};

}  // namespace crcpanel
