#pragma once

#include <cstdint>
#include <random>

namespace fmdelta {

/// Deterministic random source for dataset generation.
///
/// The mapping from seed to byte stream is fixed so datasets are
/// reproducible everywhere: the engine is std::mt19937_64 seeded directly
/// with the 64-bit seed (the generator's output sequence is pinned by the
/// C++ standard), bounded draws use the multiply-high reduction
/// floor(next_u64() * n / 2^64), and byte fills take successive 64-bit
/// outputs most-significant byte first. No standard-library distributions
/// are used, since their outputs are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    std::uint32_t next_u32() { return static_cast<std::uint32_t>(next_u64() >> 32); }

    std::uint16_t next_u16() { return static_cast<std::uint16_t>(next_u64() >> 48); }

    std::uint8_t next_u8() { return static_cast<std::uint8_t>(next_u64() >> 56); }

    /// Uniform value in [0, n). n must be nonzero.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    void fill(std::uint8_t* out, std::size_t n) {
        std::size_t i = 0;
        while (i < n) {
            std::uint64_t v = next_u64();
            for (int shift = 56; shift >= 0 && i < n; shift -= 8)
                out[i++] = static_cast<std::uint8_t>((v >> shift) & 0xFF);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace fmdelta
